#include "test_support.hpp"

#include <rcgs/io.hpp>
#include <rcgs_cli/commands.hpp>
#include <rcgs_cli/config.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <map>
#include <sstream>

using namespace rcgs;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "driver": {"duration": 160, "lyapunov_time": 100},
  "reservoir": {"n_nodes": 120, "pnz": 0.05, "seed": 3},
  "training": {"training_time": 60},
  "evaluation": {"n_starts": 3, "lyapunov_time": 5, "k": 4},
  "search": {"axes": {"spectral_radius": [0.7, 2.5]}, "lyapunov_k": 4}
})";

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args)
{
    args.insert(args.begin(), "rcgs");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    io::write_text(dir / "config.json", text);
    return dir / "config.json";
}

nlohmann::json manifest(const fs::path& stage) { return nlohmann::json::parse(io::read_text(stage / "manifest.json")); }

}  // namespace

TEST(Config, DefaultsRoundTripThroughCanonicalJson)
{
    const cli::RunConfig c = cli::default_config();
    const cli::RunConfig back = cli::parse_config(cli::config_to_json(c));
    EXPECT_EQ(cli::config_to_json(back), cli::config_to_json(c));
    EXPECT_EQ(back.rc_exponents(), 8);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected)
{
    EXPECT_THROW(cli::parse_config(R"({"driver": {"sytem": "lorenz63"}})"), Error);
    EXPECT_THROW(cli::parse_config(R"({"extra": 1})"), Error);
    EXPECT_THROW(cli::parse_config(R"({"search": {"axes": {"radius": [1]}}})"), Error);
    EXPECT_THROW(cli::parse_config(R"({"driver": {"duration": 0}})"), Error);
    EXPECT_THROW(cli::parse_config(R"({"reservoir": {"pnz": "high"}})"), Error);
    EXPECT_THROW(cli::parse_config(R"({"training": {"features": "cubic"}})"), Error);
    EXPECT_THROW(cli::parse_config("{not json"), Error);
    EXPECT_NO_THROW(cli::parse_config(R"({"driver": {"system": "lorenz96", "dim": 5, "params": {"F": 8}}})"));
}

TEST(Config, SeedOverrideTouchesEverySeed)
{
    cli::RunConfig c = cli::parse_config(kSmallConfig);
    cli::override_seeds(c, 99);
    EXPECT_EQ(c.driver.seed, 99u);
    EXPECT_EQ(c.reservoir.seed, 99u);
    EXPECT_EQ(cli::make_search_plan(c).base_seed, 99u);
}

TEST(Cli, PrerequisitesAreNamed)
{
    const auto dir = support::scratch_dir("cli-prereq");
    const fs::path cfg = write_config(dir, kSmallConfig);
    const CliRun r = run({"forecast", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::kExitPrerequisite);
    EXPECT_NE(r.err.find("'generate'"), std::string::npos) << r.err;

    ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
    const CliRun f = run({"forecast", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(f.code, cli::kExitPrerequisite);
    EXPECT_NE(f.err.find("'train'"), std::string::npos) << f.err;
}

TEST(Cli, ExitCodesByFailureClass)
{
    const auto dir = support::scratch_dir("cli-codes");
    EXPECT_EQ(run({}).code, cli::kExitConfig);
    EXPECT_EQ(run({"fly"}).code, cli::kExitConfig);
    const fs::path bad = write_config(dir, R"({"driver": {"duration": 0}})");
    const CliRun r = run({"generate", "--config", bad.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::kExitConfig);
    EXPECT_NE(r.err.find("duration"), std::string::npos);
    EXPECT_EQ(run({"generate", "--config", (dir / "missing.json").string()}).code, cli::kExitConfig);
}

TEST(Cli, FullPipelineIsByteReproducible)
{
    const auto dir = support::scratch_dir("cli-pipeline");
    const fs::path cfg = write_config(dir, kSmallConfig);
    const std::vector<std::string> commands{"generate", "gs-test", "train", "forecast", "lyapunov", "sweep"};
    const std::string out = (dir / "a").string();
    std::map<std::string, nlohmann::json> first;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& c : commands) {
            const CliRun r = run({c, "--config", cfg.string(), "--out", out, "--workers", "2"});
            ASSERT_EQ(r.code, 0) << c << ": " << r.err;
            const auto files = manifest(dir / "a" / c)["files"];
            if (pass == 0)
                first[c] = files;
            else
                EXPECT_EQ(files, first[c]) << c;
        }

    for (const auto& c : commands)
        for (const auto& f : first[c])
            EXPECT_EQ(io::sha256_file(dir / "a" / c / f["path"].get<std::string>()), f["sha256"].get<std::string>());

    const auto gen = dir / "a" / "generate";
    for (const char* f : {"trajectory.csv", "trajectory/meta.json", "trajectory/states.bin", "spectrum.json",
                          "standardization.json"})
        EXPECT_TRUE(fs::exists(gen / f)) << f;
    EXPECT_TRUE(fs::exists(dir / "a" / "gs-test" / "scatter.csv"));
    EXPECT_TRUE(fs::exists(dir / "a" / "train" / "readout" / "wout.bin"));
    EXPECT_TRUE(fs::exists(dir / "a" / "forecast" / "metrics.csv"));
    EXPECT_TRUE(fs::exists(dir / "a" / "lyapunov" / "spectrum_match.json"));
    EXPECT_TRUE(fs::exists(dir / "a" / "sweep" / "results.csv"));
    EXPECT_TRUE(fs::exists(dir / "a" / "sweep" / "sr_sweep.csv"));
    EXPECT_TRUE(manifest(dir / "a" / "sweep").contains("timing"));

    const auto spectrum = io::spectrum_from_json(io::read_text(gen / "spectrum.json"));
    EXPECT_NEAR(spectrum.exponents[0], 0.906, 0.05);
}

TEST(Cli, ForecastRejectsModelTrainedWithOtherSettings)
{
    const auto dir = support::scratch_dir("cli-mismatch");
    const fs::path cfg = write_config(dir, kSmallConfig);
    const std::string out = (dir / "out").string();
    ASSERT_EQ(run({"generate", "--config", cfg.string(), "--out", out}).code, 0);
    ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", out}).code, 0);
    const CliRun r = run({"forecast", "--config", cfg.string(), "--out", out, "--seed", "4"});
    EXPECT_EQ(r.code, cli::kExitPrerequisite);
}
