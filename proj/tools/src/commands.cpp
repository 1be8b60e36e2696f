#include "rcgs_cli/commands.hpp"

#include <rcgs/driver_systems.hpp>
#include <rcgs/evaluation.hpp>
#include <rcgs/gs_test.hpp>
#include <rcgs/io.hpp>
#include <rcgs/lyapunov.hpp>
#include <rcgs/rng.hpp>
#include <rcgs/search.hpp>
#include <rcgs/training.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <ostream>
#include <thread>

namespace rcgs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string host_name()
{
    char buf[256] = {};
    return gethostname(buf, sizeof buf - 1) == 0 ? std::string(buf) : std::string("unknown");
}

/// Output directory of one command. Cleared on entry; on finish() the echoed
/// config and a manifest with checksums of every file are written.
class StageDir {
public:
    StageDir(const fs::path& out, const std::string& name, const RunConfig& config)
        : dir_(out / name), name_(name), started_(utc_now()), clock_(std::chrono::steady_clock::now())
    {
        std::error_code ec;
        fs::remove_all(dir_, ec);
        fs::create_directories(dir_, ec);
        if (ec) fail(ErrorKind::kIo, "cannot create output directory " + dir_.string() + ": " + ec.message());
        io::write_text(dir_ / "config.json", config_to_json(config) + "\n");
    }

    const fs::path& path() const { return dir_; }
    fs::path operator/(const std::string& file) const { return dir_ / file; }

    void finish(json timing = json::object())
    {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(dir_))
            if (entry.is_regular_file() && entry.path().filename() != "manifest.json") files.push_back(entry.path());
        std::sort(files.begin(), files.end());

        json list = json::array();
        for (const fs::path& f : files)
            list.push_back({{"path", fs::relative(f, dir_).generic_string()},
                            {"bytes", fs::file_size(f)},
                            {"sha256", io::sha256_file(f)}});
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
        json manifest = {{"command", name_},
                         {"version", kVersion},
                         {"files", list},
                         {"started_utc", started_},
                         {"wall_seconds", seconds},
                         {"host", host_name()},
                         {"hardware_threads", std::thread::hardware_concurrency()}};
        if (!timing.empty()) manifest["timing"] = std::move(timing);
        io::write_text(dir_ / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::string name_;
    std::string started_;
    std::chrono::steady_clock::time_point clock_;
};

fs::path prerequisite(const fs::path& out, const std::string& stage, const std::string& file)
{
    const fs::path p = out / stage / file;
    if (!fs::exists(p))
        fail(ErrorKind::kPrerequisite,
             "missing " + p.string() + "; run the '" + stage + "' command with this --out first");
    return p;
}

Vector initial_condition(const DriverConfig& d)
{
    Rng rng(stream_seed(d.seed, Stream::kDriver));
    Vector x0(d.dim);
    for (auto& v : x0) v = rng.uniform(-1.0, 1.0);
    if (d.system == "lorenz96") {
        const auto it = d.params.find("F");
        x0.array() += it == d.params.end() ? 8.0 : it->second;
    }
    return x0;
}

Trajectory load_input(const fs::path& out) { return io::read_trajectory_bundle(prerequisite(out, "generate", "trajectory")); }

LyapunovSpectrum load_driver_spectrum(const fs::path& out)
{
    return io::spectrum_from_json(io::read_text(prerequisite(out, "generate", "spectrum.json")));
}

double lambda1_for(const RunConfig& config, const fs::path& out)
{
    if (config.evaluation.lambda1) return *config.evaluation.lambda1;
    const LyapunovSpectrum s = load_driver_spectrum(out);
    if (!(s.exponents.size() > 0 && s.exponents[0] > 0.0))
        fail(ErrorKind::kNumerical, "driver spectrum has no positive leading exponent; set evaluation.lambda1");
    return s.exponents[0];
}

struct Split {
    Trajectory train;
    Trajectory test;
};

Split split_input(const RunConfig& config, const Trajectory& input)
{
    require(input.dim() == config.driver.dim, "generated trajectory dimension does not match driver.dim");
    const long steps = steps_for(config.training.training_time, input.dt);
    if (steps + 2 > input.size())
        fail(ErrorKind::kPrerequisite, "generated trajectory is shorter than training.training_time; rerun generate");
    return {input.slice(0, steps + 1), input.slice(steps, input.size() - steps)};
}

struct Model {
    Reservoir reservoir;
    Readout readout;
};

Model load_model(const RunConfig& config, const fs::path& out)
{
    Model m{io::read_reservoir_bundle(prerequisite(out, "train", "reservoir")),
            io::read_readout(prerequisite(out, "train", "readout"))};
    if (!(m.reservoir.params() == config.reservoir))
        fail(ErrorKind::kPrerequisite,
             "the trained model was built from different reservoir settings; rerun 'train' with this config");
    return m;
}

EvaluationOptions evaluation_options(const RunConfig& config, const fs::path& out)
{
    EvaluationOptions e = config.evaluation.options;
    e.lambda1 = lambda1_for(config, out);
    e.workers = config.workers;
    return e;
}

}  // namespace

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::kInvalidArgument: return kExitConfig;
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kPrerequisite: return kExitPrerequisite;
    case ErrorKind::kNumerical:
    case ErrorKind::kDivergence:
    case ErrorKind::kConvergence: return kExitNumerical;
    }
    return kExitFailure;
}

void cmd_generate(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const DriverConfig& d = config.driver;
    const DriverSystem system = make_driver(d.system, d.dim, d.params);
    StageDir stage(out, "generate", config);

    const Trajectory raw = integrate_on_attractor(system, initial_condition(d), d.dt, d.transient, d.duration);
    OdeLyapunovOptions lopt;
    lopt.transient_time = 0.0;
    const Vector start = raw.states.row(0).transpose();
    const LyapunovSpectrum spectrum =
        lyapunov_spectrum_ode(system, start, d.dt, steps_for(d.lyapunov_time, d.dt), d.dim, lopt);
    io::write_text(stage / "spectrum.json", io::spectrum_to_json(spectrum) + "\n");

    Trajectory data = raw;
    if (d.standardize) {
        auto [scaled, transform] = standardize(raw);
        data = std::move(scaled);
        io::write_text(stage / "standardization.json", io::standardization_to_json(transform) + "\n");
    }
    io::write_trajectory_bundle(stage / "trajectory", data);
    io::write_trajectory_csv(stage / "trajectory.csv", data);
    stage.finish();

    log << "generate: " << data.size() << " samples of " << d.system << " (dim " << d.dim << "), lambda1 "
        << spectrum.exponents[0] << ", sum " << spectrum.exponents.sum() << "\n";
}

void cmd_gs_test(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const Split data = split_input(config, load_input(out));
    StageDir stage(out, "gs-test", config);
    const Reservoir res = Reservoir::build(config.reservoir);
    const GSReport report = auxiliary_test(res, data.train, auxiliary_seeds(config.reservoir.seed), config.gs);
    io::write_text(stage / "gs_report.json", gs_report_to_json(report) + "\n");
    write_gs_scatter_csv(stage / "scatter.csv", report);
    stage.finish();

    log << "gs-test: " << (report.converged ? "pass" : "fail") << ", final distance " << report.final_distance
        << ", conditional exponent " << report.conditional_le << "\n";
}

void cmd_train(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const Split data = split_input(config, load_input(out));
    StageDir stage(out, "train", config);
    const Reservoir res = Reservoir::build(config.reservoir);
    const Readout readout = train(res, data.train, config.training.options);
    io::write_reservoir_bundle(stage / "reservoir", res);
    io::write_readout(stage / "readout", readout);
    stage.finish();

    const TrainingDiagnostics& diag = readout.diagnostics();
    log << "train: " << diag.samples << " samples, normal-equation residual " << diag.normal_residual
        << ", condition estimate " << diag.condition_estimate << "\n";
}

void cmd_forecast(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const Split data = split_input(config, load_input(out));
    const Model model = load_model(config, out);
    const EvaluationOptions eval = evaluation_options(config, out);
    StageDir stage(out, "forecast", config);

    const ForecastMetrics metrics = mean_valid_time(model.reservoir, model.readout, data.test, eval);
    write_metrics_csv(stage / "metrics.csv", metrics);
    io::write_text(stage / "metrics_summary.json", metrics_summary_json(metrics) + "\n");

    // One continuous forecast from the first start, for plotting against the truth.
    const long sync = steps_for(eval.sync_time, data.test.dt);
    const long horizon = steps_for(eval.horizon, data.test.dt);
    const Vector r0 = model.reservoir.random_state(stream_seed(config.reservoir.seed, Stream::kInitialState));
    Vector r = drive_visit(model.reservoir, data.test, r0, {}, 0, sync);
    const Trajectory truth = data.test.slice(sync, horizon + 1);
    const Trajectory pred = forecast_observable(model.reservoir, model.readout, r, horizon, data.test.dt, truth.t0);
    io::write_trajectory_csv(stage / "forecast.csv", pred);
    io::write_trajectory_csv(stage / "truth.csv", truth);
    stage.finish();

    log << "forecast: mean valid time " << metrics.mean_valid_time << " lambda1 t over " << metrics.n_starts
        << " starts (std " << metrics.std_valid_time << ")\n";
}

void cmd_lyapunov(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    const Split data = split_input(config, load_input(out));
    const Model model = load_model(config, out);
    const LyapunovSpectrum driver = load_driver_spectrum(out);
    StageDir stage(out, "lyapunov", config);

    const long sync = steps_for(config.evaluation.options.sync_time, data.test.dt);
    const Vector r0 = model.reservoir.random_state(stream_seed(config.reservoir.seed, Stream::kInitialState));
    const Vector r = drive_visit(model.reservoir, data.test, r0, {}, 0, sync);
    const LyapunovSpectrum rc =
        lyapunov_spectrum_rc(model.reservoir, model.readout, r, config.rc_exponents(), data.test.dt,
                             steps_for(config.evaluation.lyapunov_time, data.test.dt), config.evaluation.lyapunov);
    const SpectrumMatchReport match = spectrum_match(driver, rc, config.evaluation.match_tolerance);
    io::write_text(stage / "spectrum_rc.json", io::spectrum_to_json(rc) + "\n");
    io::write_text(stage / "spectrum_match.json", spectrum_match_json(match) + "\n");
    stage.finish();

    log << "lyapunov: rc lambda1 " << rc.exponents[0] << " vs driver " << driver.exponents[0]
        << ", leading_match " << (match.leading_match ? "true" : "false") << ", tail_negative "
        << (match.tail_negative ? "true" : "false") << "\n";
}

bool cmd_sweep(const RunConfig& config, const fs::path& out, std::ostream& log)
{
    SearchPlan plan = make_search_plan(config);
    const Trajectory input = load_input(out);
    plan.evaluation = evaluation_options(config, out);
    if (plan.lyapunov_k > 0) plan.driver_spectrum = load_driver_spectrum(out);
    plan.validate();
    StageDir stage(out, "sweep", config);

    log << "sweep: " << plan.cell_count() << " cells x " << plan.trials_per_cell << " trials, gate "
        << to_string(plan.gate) << std::endl;
    const std::vector<CellResult> results = run_search(plan, input);
    write_results_csv(stage / "results.csv", results);
    io::write_text(stage / "summary.json", search_summary_json(plan, results) + "\n");
    const bool sr_only = plan.axes.pnz.empty() && plan.axes.gamma.empty() && plan.axes.sigma.empty();
    if (sr_only) write_sr_sweep_csv(stage / "sr_sweep.csv", summarize_sr_sweep(plan, results));
    stage.finish(json::parse(search_timing_json(results)));

    std::size_t failed = 0;
    for (const CellResult& r : results) failed += r.errors.empty() ? 0 : 1;
    const SavingsReport savings = savings_report(results);
    log << "sweep: " << results.size() << " runs, " << savings.gs_passing << " passed GS, " << savings.trained
        << " trained, " << failed << " with errors";
    if (savings.ratio) log << ", savings ratio " << *savings.ratio;
    log << "\n";
    return failed == 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Reservoir-computing forecasts of chaotic systems with a generalized-synchronization gate", "rcgs"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);

    std::string config_path, out_dir;
    int workers = 0;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output root (overrides the config's 'output')");
    app.add_option("--workers", workers, "Worker thread cap")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Override every seed in the config");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"generate", "Integrate the driver and compute its reference Lyapunov spectrum"},
        {"gs-test", "Auxiliary-system generalized-synchronization test"},
        {"train", "Train a ridge readout and save the model"},
        {"forecast", "Evaluate valid prediction time on held-out data"},
        {"lyapunov", "Lyapunov spectrum of the trained autonomous reservoir"},
        {"sweep", "GS-gated hyperparameter search"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        RunConfig config = config_path.empty() ? default_config() : parse_config(io::read_text(config_path));
        if (*seed_opt) override_seeds(config, seed);
        if (workers > 0) config.workers = workers;
        if (!out_dir.empty()) config.output = out_dir;
        config.validate();
        const fs::path root = config.output;

        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "generate") cmd_generate(config, root, out);
        else if (name == "gs-test") cmd_gs_test(config, root, out);
        else if (name == "train") cmd_train(config, root, out);
        else if (name == "forecast") cmd_forecast(config, root, out);
        else if (name == "lyapunov") cmd_lyapunov(config, root, out);
        else if (name == "sweep" && !cmd_sweep(config, root, out)) return kExitPartial;
        return kExitOk;
    } catch (const Error& e) {
        err << "rcgs: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "rcgs: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "rcgs: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace rcgs::cli
