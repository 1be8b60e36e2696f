#include "rcgs/search.hpp"

#include "rcgs/format.hpp"
#include "rcgs/parallel.hpp"
#include "rcgs/rng.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace rcgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<double> axis_or(const std::vector<double>& axis, double fixed)
{
    return axis.empty() ? std::vector<double>{fixed} : axis;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }


}  // namespace

std::string to_string(Gate gate)
{
    switch (gate) {
    case Gate::kGsOnly: return "gs_only";
    case Gate::kGsThenTrain: return "gs_then_train";
    case Gate::kTrainAll: return "train_all";
    }
    return "unknown";
}

Gate gate_from_string(const std::string& name)
{
    if (name == "gs_only") return Gate::kGsOnly;
    if (name == "gs_then_train") return Gate::kGsThenTrain;
    if (name == "train_all") return Gate::kTrainAll;
    fail(ErrorKind::kInvalidArgument, "unknown gate '" + name + "' (expected gs_only, gs_then_train or train_all)");
}

void SearchPlan::validate() const
{
    require(!axes.spectral_radius.empty() || !axes.pnz.empty() || !axes.gamma.empty() || !axes.sigma.empty(),
            "search plan: at least one axis must be nonempty");
    require(trials_per_cell >= 1, "search plan: trials_per_cell must be at least 1");
    require(training_time > 0.0, "search plan: training_time must be positive");
    require(lyapunov_k >= 0, "search plan: lyapunov_k must be non-negative");
    require(lyapunov_k == 0 || driver_spectrum.has_value(),
            "search plan: lyapunov_k > 0 needs a driver spectrum to match against");
    require(lyapunov_k == 0 || lyapunov_time > 0.0, "search plan: lyapunov_time must be positive");
    require(match_tolerance > 0.0, "search plan: match_tolerance must be positive");
    for (const ReservoirParams& p : cells()) p.validate();
}

std::size_t SearchPlan::cell_count() const
{
    return axis_or(axes.spectral_radius, 0).size() * axis_or(axes.pnz, 0).size() * axis_or(axes.gamma, 0).size() *
           axis_or(axes.sigma, 0).size();
}

std::vector<ReservoirParams> SearchPlan::cells() const
{
    std::vector<ReservoirParams> out;
    out.reserve(cell_count());
    for (double sr : axis_or(axes.spectral_radius, fixed.spectral_radius))
        for (double pnz : axis_or(axes.pnz, fixed.pnz))
            for (double gamma : axis_or(axes.gamma, fixed.gamma))
                for (double sigma : axis_or(axes.sigma, fixed.sigma)) {
                    ReservoirParams p = fixed;
                    p.spectral_radius = sr;
                    p.pnz = pnz;
                    p.gamma = gamma;
                    p.sigma = sigma;
                    p.seed = 0;
                    out.push_back(p);
                }
    return out;
}

std::uint64_t cell_seed(const SearchPlan& plan, const ReservoirParams& cell, int trial)
{
    const auto t = static_cast<std::uint64_t>(trial);
    if (plan.shared_network) return hash_words({plan.base_seed, bits(cell.pnz), t});
    return hash_words({plan.base_seed, bits(cell.spectral_radius), bits(cell.pnz), bits(cell.gamma),
                       bits(cell.sigma), t});
}

namespace {

CellResult run_cell(const SearchPlan& plan, const ReservoirParams& cell, std::size_t index, int trial,
                    const Trajectory& train_input, const Trajectory& test_input)
{
    CellResult out;
    out.cell = index;
    out.trial = trial;
    out.params = cell;
    out.params.seed = cell_seed(plan, cell, trial);

    std::optional<Reservoir> res;
    try {
        res = Reservoir::build(out.params);
    } catch (const std::exception& e) {
        out.errors.push_back(std::string("build: ") + e.what());
        return out;
    }

    try {
        Stopwatch clock;
        GSReport report = auxiliary_test(*res, train_input, auxiliary_seeds(out.params.seed), plan.gs);
        out.wall_clock.gs = clock.seconds();
        report.distance_series.clear();
        report.scatter_sample.clear();
        out.gs = std::move(report);
    } catch (const std::exception& e) {
        out.errors.push_back(std::string("gs: ") + e.what());
    }

    const bool passed = out.gs && out.gs->converged;
    if (plan.gate == Gate::kGsOnly || (plan.gate == Gate::kGsThenTrain && !passed)) return out;

    std::optional<Readout> readout;
    try {
        Stopwatch clock;
        readout = train(*res, train_input, plan.training);
        out.wall_clock.train = clock.seconds();
        out.trained = true;
        out.training = readout->diagnostics();
    } catch (const std::exception& e) {
        out.errors.push_back(std::string("train: ") + e.what());
        return out;
    }

    try {
        Stopwatch clock;
        EvaluationOptions eval = plan.evaluation;
        eval.workers = 1;
        out.metrics = mean_valid_time(*res, *readout, test_input, eval);
        out.wall_clock.evaluate = clock.seconds();
    } catch (const std::exception& e) {
        out.errors.push_back(std::string("evaluate: ") + e.what());
    }

    if (plan.lyapunov_k > 0) {
        try {
            Stopwatch clock;
            const long sync = steps_for(plan.evaluation.sync_time, test_input.dt);
            const Vector r0 = res->random_state(stream_seed(out.params.seed, Stream::kInitialState));
            const Vector r = drive_visit(*res, test_input, r0, {}, 0, sync);
            const long steps = steps_for(plan.lyapunov_time, test_input.dt);
            const LyapunovSpectrum rc =
                lyapunov_spectrum_rc(*res, *readout, r, plan.lyapunov_k, test_input.dt, steps, plan.lyapunov);
            out.spectrum = spectrum_match(*plan.driver_spectrum, rc, plan.match_tolerance);
            out.wall_clock.lyapunov = clock.seconds();
        } catch (const std::exception& e) {
            out.errors.push_back(std::string("lyapunov: ") + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<CellResult> run_search(const SearchPlan& plan, const Trajectory& input)
{
    plan.validate();
    require(input.dim() == plan.fixed.input_dim, "run_search: input dimension does not match input_dim");
    const long train_steps = steps_for(plan.training_time, input.dt);
    require(train_steps + 2 <= input.size(), "run_search: input is shorter than training_time");
    require(plan.gs.transient_time + plan.gs.test_time <= plan.training_time,
            "run_search: the GS test must fit inside the training segment");
    const Trajectory train_input = input.slice(0, train_steps + 1);
    const Trajectory test_input = input.slice(train_steps, input.size() - train_steps);

    const std::vector<ReservoirParams> grid = plan.cells();
    const auto trials = static_cast<std::size_t>(plan.trials_per_cell);
    std::vector<CellResult> results(grid.size() * trials);
    parallel_for(results.size(), plan.workers, [&](std::size_t job) {
        const std::size_t cell = job / trials;
        results[job] = run_cell(plan, grid[cell], cell, static_cast<int>(job % trials), train_input, test_input);
    });
    return results;
}

SavingsReport savings_report(const std::vector<CellResult>& results)
{
    SavingsReport out;
    out.results = results.size();
    double trained_cost = 0.0;
    for (const CellResult& r : results) {
        const bool passed = r.gs && r.gs->converged;
        const double cost = r.wall_clock.train + r.wall_clock.evaluate;
        out.gated_cost += r.wall_clock.gs;
        if (passed) ++out.gs_passing;
        if (!r.trained) continue;
        ++out.trained;
        trained_cost += cost;
        if (passed) out.gated_cost += cost;
    }
    if (out.trained == 0) return out;

    const double mean_cost = trained_cost / static_cast<double>(out.trained);
    for (const CellResult& r : results)
        out.ungated_cost_estimate += r.trained ? r.wall_clock.train + r.wall_clock.evaluate : mean_cost;
    if (out.gated_cost > 0.0) out.ratio = out.ungated_cost_estimate / out.gated_cost;
    return out;
}

std::vector<SrSweepPoint> summarize_sr_sweep(const SearchPlan& plan, const std::vector<CellResult>& results)
{
    const std::vector<double> radii = axis_or(plan.axes.spectral_radius, plan.fixed.spectral_radius);
    std::vector<SrSweepPoint> points(radii.size());
    const Eigen::Index k = plan.lyapunov_k;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        SrSweepPoint& p = points[i];
        p.spectral_radius = radii[i];
        double vt = 0.0;
        int vt_count = 0, gs_pass = 0, le_count = 0;
        Vector le = Vector::Zero(k);
        for (const CellResult& r : results) {
            if (r.params.spectral_radius != radii[i]) continue;
            ++p.trials;
            gs_pass += (r.gs && r.gs->converged) ? 1 : 0;
            if (r.metrics) {
                vt += r.metrics->mean_valid_time;
                ++vt_count;
            }
            if (r.spectrum && !r.spectrum->rc_spectrum.escape_time &&
                r.spectrum->rc_spectrum.exponents.size() == k) {
                le += r.spectrum->rc_spectrum.exponents;
                ++le_count;
            }
        }
        p.mean_valid_time = vt_count ? vt / vt_count : kNaN;
        p.gs_pass_fraction = p.trials ? static_cast<double>(gs_pass) / p.trials : kNaN;
        p.rc_exponents = le_count ? Vector(le / le_count) : Vector::Constant(k, kNaN);
    }
    return points;
}

std::vector<SrSweepPoint> sr_sweep(const SearchPlan& plan, const Trajectory& input, std::vector<CellResult>* details)
{
    require(plan.axes.pnz.empty() && plan.axes.gamma.empty() && plan.axes.sigma.empty() &&
                !plan.axes.spectral_radius.empty(),
            "sr_sweep: the plan must have a spectral-radius axis and no other");
    std::vector<CellResult> results = run_search(plan, input);
    std::vector<SrSweepPoint> points = summarize_sr_sweep(plan, results);
    if (details) *details = std::move(results);
    return points;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<CellResult>& results)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    out << "cell,trial,sr,pnz,gamma,sigma,seed,gs_converged,gs_final_distance,gs_cond_le,gs_unstable,trained,"
           "train_normal_residual,mean_valid_time,std_valid_time,lambda1_rc,lambda1_error,leading_match,"
           "tail_negative,rc_converged,errors\n";
    auto num = [](std::optional<double> v) { return v ? format_double(*v) : std::string(); };
    auto flag = [](std::optional<bool> v) { return v ? std::string(*v ? "1" : "0") : std::string(); };
    for (const CellResult& r : results) {
        const auto& p = r.params;
        out << r.cell << ',' << r.trial << ',' << format_double(p.spectral_radius) << ',' << format_double(p.pnz)
            << ',' << format_double(p.gamma) << ',' << format_double(p.sigma) << ',' << p.seed << ',';
        if (r.gs)
            out << flag(r.gs->converged) << ',' << num(r.gs->final_distance) << ',' << num(r.gs->conditional_le)
                << ',' << flag(r.gs->unstable) << ',';
        else
            out << ",,,,";
        out << flag(r.trained) << ',' << (r.training ? num(r.training->normal_residual) : std::string()) << ',';
        if (r.metrics)
            out << num(r.metrics->mean_valid_time) << ',' << num(r.metrics->std_valid_time) << ',';
        else
            out << ",,";
        if (r.spectrum)
            out << num(r.spectrum->rc_spectrum.exponents[0]) << ',' << num(r.spectrum->per_exponent_error[0]) << ','
                << flag(r.spectrum->leading_match) << ',' << flag(r.spectrum->tail_negative) << ','
                << flag(r.spectrum->rc_spectrum.converged) << ',';
        else
            out << ",,,,,";
        std::string errors;
        for (const std::string& e : r.errors) errors += (errors.empty() ? "" : "; ") + e;
        for (char& c : errors)
            if (c == ',' || c == '\n' || c == '"') c = ' ';
        out << errors << '\n';
    }
    if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

void write_sr_sweep_csv(const std::filesystem::path& path, const std::vector<SrSweepPoint>& points)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    const Eigen::Index k = points.empty() ? 0 : points.front().rc_exponents.size();
    out << "sr,mean_valid_time,gs_pass_fraction,trials";
    for (Eigen::Index i = 1; i <= k; ++i) out << ",lambda" << i;
    out << '\n';
    for (const SrSweepPoint& p : points) {
        out << format_double(p.spectral_radius) << ',' << format_double(p.mean_valid_time) << ','
            << format_double(p.gs_pass_fraction) << ',' << p.trials;
        for (double v : p.rc_exponents) out << ',' << format_double(v);
        out << '\n';
    }
    if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

std::string search_summary_json(const SearchPlan& plan, const std::vector<CellResult>& results, int indent)
{
    nlohmann::json j;
    nlohmann::json axes;
    axes["spectral_radius"] = plan.axes.spectral_radius;
    axes["pnz"] = plan.axes.pnz;
    axes["gamma"] = plan.axes.gamma;
    axes["sigma"] = plan.axes.sigma;
    j["plan"]["axes"] = axes;
    j["plan"]["gate"] = to_string(plan.gate);
    j["plan"]["trials_per_cell"] = plan.trials_per_cell;
    j["plan"]["base_seed"] = plan.base_seed;
    j["plan"]["shared_network"] = plan.shared_network;
    j["plan"]["cells"] = plan.cell_count();
    j["plan"]["training_time"] = plan.training_time;
    j["plan"]["lyapunov_k"] = plan.lyapunov_k;

    std::size_t passing = 0, trained = 0, evaluated = 0;
    nlohmann::json failures = nlohmann::json::array();
    for (const CellResult& r : results) {
        passing += (r.gs && r.gs->converged) ? 1 : 0;
        trained += r.trained ? 1 : 0;
        evaluated += r.metrics ? 1 : 0;
        for (const std::string& e : r.errors)
            failures.push_back({{"cell", r.cell}, {"trial", r.trial}, {"error", e}});
    }
    j["counts"] = {{"results", results.size()}, {"gs_passing", passing}, {"trained", trained},
                   {"evaluated", evaluated}};
    j["failures"] = failures;

    const SavingsReport s = savings_report(results);
    j["gate_counts"] = {{"gs_tests", results.size()}, {"trainings_gated", s.gs_passing},
                        {"trainings_ungated", results.size()}};
    j["timing_file"] = "manifest.json";
    return j.dump(indent);
}

std::string search_timing_json(const std::vector<CellResult>& results, int indent)
{
    nlohmann::json j;
    nlohmann::json cells = nlohmann::json::array();
    for (const CellResult& r : results)
        cells.push_back({{"cell", r.cell},
                         {"trial", r.trial},
                         {"gs", r.wall_clock.gs},
                         {"train", r.wall_clock.train},
                         {"evaluate", r.wall_clock.evaluate},
                         {"lyapunov", r.wall_clock.lyapunov}});
    const SavingsReport s = savings_report(results);
    j["stage_seconds"] = cells;
    j["savings_report"] = {{"gated_cost", s.gated_cost},
                           {"ungated_cost_estimate", s.ungated_cost_estimate},
                           {"ratio", s.ratio ? nlohmann::json(*s.ratio) : nlohmann::json("undefined")},
                           {"results", s.results},
                           {"gs_passing", s.gs_passing},
                           {"trained", s.trained}};
    return j.dump(indent);
}

}  // namespace rcgs
