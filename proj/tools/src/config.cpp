#include "rcgs_cli/config.hpp"

#include <rcgs/common.hpp>

#include <nlohmann/json.hpp>

#include <set>

namespace rcgs::cli {

namespace {

using nlohmann::json;

/// Reads keys from one JSON object and rejects any key that was never asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) fail(ErrorKind::kInvalidArgument, "config: '" + path_ + "' must be an object");
    }

    ~Section() noexcept(false)
    {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(ErrorKind::kInvalidArgument, "config: unknown key '" + where(key) + "'");
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(ErrorKind::kInvalidArgument, "config: '" + where(key) + "' has the wrong type");
        }
    }

    template <typename T>
    void get(const char* key, std::optional<T>& out)
    {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = v;
    }

    /// Nested object, or nullptr when absent.
    const json* child(const char* key)
    {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_driver(const json& j, DriverConfig& d)
{
    Section s(j, "driver");
    s.get("system", d.system);
    s.get("dim", d.dim);
    s.get("params", d.params);
    s.get("dt", d.dt);
    s.get("transient", d.transient);
    s.get("duration", d.duration);
    s.get("seed", d.seed);
    s.get("standardize", d.standardize);
    s.get("lyapunov_time", d.lyapunov_time);
}

void parse_reservoir(const json& j, ReservoirParams& p)
{
    Section s(j, "reservoir");
    s.get("n_nodes", p.n_nodes);
    s.get("spectral_radius", p.spectral_radius);
    s.get("pnz", p.pnz);
    s.get("gamma", p.gamma);
    s.get("sigma", p.sigma);
    s.get("seed", p.seed);
}

void parse_training(const json& j, TrainingConfig& t)
{
    Section s(j, "training");
    std::string features = to_string(t.options.spec.kind);
    s.get("features", features);
    t.options.spec.kind = feature_kind_from_string(features);
    s.get("bias", t.options.spec.includes_bias);
    s.get("beta", t.options.beta);
    s.get("washout", t.options.washout);
    s.get("training_time", t.training_time);
}

void parse_evaluation(const json& j, EvaluationConfig& e)
{
    Section s(j, "evaluation");
    s.get("threshold", e.options.threshold);
    s.get("n_starts", e.options.n_starts);
    s.get("horizon", e.options.horizon);
    s.get("sync_time", e.options.sync_time);
    s.get("lambda1", e.lambda1);
    s.get("k", e.k);
    s.get("lyapunov_time", e.lyapunov_time);
    s.get("lyapunov_transient", e.lyapunov.transient_time);
    s.get("match_tolerance", e.match_tolerance);
}

void parse_gs(const json& j, GSOptions& g)
{
    Section s(j, "gs");
    s.get("transient_time", g.transient_time);
    s.get("test_time", g.test_time);
    s.get("tolerance", g.tolerance);
    s.get("verdict_window", g.verdict_window);
    s.get("distance_floor", g.distance_floor);
    s.get("scatter_points", g.scatter_points);
}

void parse_search(const json& j, SearchConfig& c)
{
    Section s(j, "search");
    if (const json* axes = s.child("axes")) {
        Section a(*axes, "search.axes");
        a.get("spectral_radius", c.axes.spectral_radius);
        a.get("pnz", c.axes.pnz);
        a.get("gamma", c.axes.gamma);
        a.get("sigma", c.axes.sigma);
    }
    s.get("trials_per_cell", c.trials_per_cell);
    std::string gate = to_string(c.gate);
    s.get("gate", gate);
    c.gate = gate_from_string(gate);
    s.get("shared_network", c.shared_network);
    s.get("lyapunov_k", c.lyapunov_k);
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void RunConfig::validate() const
{
    require(driver.dt > 0.0, "config: driver.dt must be positive");
    require(driver.duration > 0.0, "config: driver.duration must be positive");
    require(driver.transient >= 0.0, "config: driver.transient must be non-negative");
    require(driver.lyapunov_time > 0.0, "config: driver.lyapunov_time must be positive");
    steps_for(driver.duration, driver.dt);
    steps_for(driver.transient, driver.dt);
    make_driver(driver.system, driver.dim, driver.params);

    reservoir.validate();
    require(reservoir.input_dim == driver.dim, "config: reservoir input_dim must equal the driver dimension");

    require(training.training_time > 0.0, "config: training.training_time must be positive");
    require(training.training_time < driver.duration,
            "config: training.training_time must leave held-out data within driver.duration");
    require(training.options.beta >= 0.0, "config: training.beta must be non-negative");
    require(training.options.washout >= 0.0 && training.options.washout < training.training_time,
            "config: training.washout must lie in [0, training_time)");

    const EvaluationOptions& e = evaluation.options;
    require(e.threshold > 0.0, "config: evaluation.threshold must be positive");
    require(e.n_starts >= 1, "config: evaluation.n_starts must be at least 1");
    require(e.horizon > 0.0 && e.sync_time > 0.0, "config: evaluation.horizon and sync_time must be positive");
    const double held_out = driver.duration - training.training_time;
    require(e.n_starts * (e.sync_time + e.horizon) <= held_out + 1e-9,
            "config: held-out data (driver.duration - training.training_time) is too short for n_starts windows "
            "of sync_time + horizon");
    require(!evaluation.lambda1 || *evaluation.lambda1 > 0.0, "config: evaluation.lambda1 must be positive");
    require(rc_exponents() >= 1 && rc_exponents() <= reservoir.n_nodes,
            "config: evaluation.k must lie in [1, n_nodes]");
    require(evaluation.lyapunov_time > 0.0 && evaluation.lyapunov.transient_time >= 0.0,
            "config: evaluation lyapunov times must be positive");
    require(evaluation.match_tolerance > 0.0, "config: evaluation.match_tolerance must be positive");

    require(gs.transient_time >= 0.0 && gs.test_time > 0.0, "config: gs times must be positive");
    require(gs.transient_time + gs.test_time <= training.training_time,
            "config: gs.transient_time + gs.test_time must fit in training.training_time");
    require(gs.tolerance > 0.0 && gs.distance_floor > 0.0, "config: gs tolerances must be positive");
    require(gs.verdict_window > 0.0 && gs.verdict_window <= 1.0, "config: gs.verdict_window must lie in (0, 1]");

    if (search) {
        require(search->lyapunov_k >= 0 && search->lyapunov_k <= reservoir.n_nodes,
                "config: search.lyapunov_k must lie in [0, n_nodes]");
        SearchPlan plan = make_search_plan(*this);
        if (plan.lyapunov_k > 0) plan.driver_spectrum.emplace();
        plan.validate();
    }
    require(workers >= 1, "config: workers must be at least 1");
}

RunConfig parse_config(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(ErrorKind::kInvalidArgument, std::string("config: not valid JSON: ") + e.what());
    }

    RunConfig c = default_config();
    {
        Section root(j, "");
        if (const json* d = root.child("driver")) parse_driver(*d, c.driver);
        if (const json* r = root.child("reservoir")) parse_reservoir(*r, c.reservoir);
        if (const json* t = root.child("training")) parse_training(*t, c.training);
        if (const json* e = root.child("evaluation")) parse_evaluation(*e, c.evaluation);
        if (const json* g = root.child("gs")) parse_gs(*g, c.gs);
        if (const json* s = root.child("search"); s && !s->is_null()) {
            c.search.emplace();
            parse_search(*s, *c.search);
        }
        root.get("output", c.output);
        root.get("workers", c.workers);
    }
    c.reservoir.input_dim = c.driver.dim;
    c.validate();
    return c;
}

std::string config_to_json(const RunConfig& c, int indent)
{
    json j;
    j["driver"] = {{"system", c.driver.system},       {"dim", c.driver.dim},
                   {"params", c.driver.params},       {"dt", c.driver.dt},
                   {"transient", c.driver.transient}, {"duration", c.driver.duration},
                   {"seed", c.driver.seed},           {"standardize", c.driver.standardize},
                   {"lyapunov_time", c.driver.lyapunov_time}};
    j["reservoir"] = {{"n_nodes", c.reservoir.n_nodes}, {"spectral_radius", c.reservoir.spectral_radius},
                      {"pnz", c.reservoir.pnz},         {"gamma", c.reservoir.gamma},
                      {"sigma", c.reservoir.sigma},     {"seed", c.reservoir.seed}};
    j["training"] = {{"features", to_string(c.training.options.spec.kind)},
                     {"bias", c.training.options.spec.includes_bias},
                     {"beta", c.training.options.beta},
                     {"washout", c.training.options.washout},
                     {"training_time", c.training.training_time}};
    const EvaluationOptions& e = c.evaluation.options;
    j["evaluation"] = {{"threshold", e.threshold},
                       {"n_starts", e.n_starts},
                       {"horizon", e.horizon},
                       {"sync_time", e.sync_time},
                       {"lambda1", c.evaluation.lambda1 ? json(*c.evaluation.lambda1) : json(nullptr)},
                       {"k", c.rc_exponents()},
                       {"lyapunov_time", c.evaluation.lyapunov_time},
                       {"lyapunov_transient", c.evaluation.lyapunov.transient_time},
                       {"match_tolerance", c.evaluation.match_tolerance}};
    j["gs"] = {{"transient_time", c.gs.transient_time}, {"test_time", c.gs.test_time},
               {"tolerance", c.gs.tolerance},           {"verdict_window", c.gs.verdict_window},
               {"distance_floor", c.gs.distance_floor}, {"scatter_points", c.gs.scatter_points}};
    if (c.search) {
        const SearchConfig& s = *c.search;
        j["search"] = {{"axes",
                        {{"spectral_radius", s.axes.spectral_radius},
                         {"pnz", s.axes.pnz},
                         {"gamma", s.axes.gamma},
                         {"sigma", s.axes.sigma}}},
                       {"trials_per_cell", s.trials_per_cell},
                       {"gate", to_string(s.gate)},
                       {"shared_network", s.shared_network},
                       {"lyapunov_k", s.lyapunov_k}};
    } else {
        j["search"] = nullptr;
    }
    j["output"] = c.output;
    j["workers"] = c.workers;
    return j.dump(indent);
}

void override_seeds(RunConfig& config, std::uint64_t seed)
{
    config.driver.seed = seed;
    config.reservoir.seed = seed;
}

SearchPlan make_search_plan(const RunConfig& c)
{
    require(c.search.has_value(), "config: the sweep command needs a 'search' section");
    SearchPlan plan;
    plan.axes = c.search->axes;
    plan.fixed = c.reservoir;
    plan.trials_per_cell = c.search->trials_per_cell;
    plan.gate = c.search->gate;
    plan.base_seed = c.reservoir.seed;
    plan.shared_network = c.search->shared_network;
    plan.gs = c.gs;
    plan.training = c.training.options;
    plan.training_time = c.training.training_time;
    plan.evaluation = c.evaluation.options;
    if (c.evaluation.lambda1) plan.evaluation.lambda1 = *c.evaluation.lambda1;
    plan.lyapunov_k = c.search->lyapunov_k;
    plan.lyapunov_time = c.evaluation.lyapunov_time;
    plan.lyapunov = c.evaluation.lyapunov;
    plan.match_tolerance = c.evaluation.match_tolerance;
    plan.workers = c.workers;
    return plan;
}

}  // namespace rcgs::cli
