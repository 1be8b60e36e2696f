#include "test_support.hpp"

#include <rcgs/search.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace rcgs;

namespace {

const Trajectory& series()
{
    static const Trajectory u = support::lorenz63_series(130.0);
    return u;
}

SearchPlan small_plan()
{
    SearchPlan plan;
    plan.fixed = support::small_params(150);
    plan.training_time = 60.0;
    plan.evaluation.n_starts = 2;
    plan.base_seed = 5;
    return plan;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

CellResult timed(bool pass, bool trained, double gs, double train, double eval)
{
    CellResult r;
    r.gs.emplace();
    r.gs->converged = pass;
    r.trained = trained;
    r.wall_clock = {gs, train, eval, 0.0};
    return r;
}

}  // namespace

TEST(SearchPlan, CellsAreTheCartesianProduct)
{
    SearchPlan plan = small_plan();
    plan.axes.spectral_radius = {0.5, 1.0, 1.5};
    plan.axes.pnz = {0.02, 0.05};
    EXPECT_EQ(plan.cell_count(), 6u);
    const auto cells = plan.cells();
    ASSERT_EQ(cells.size(), 6u);
    EXPECT_EQ(cells[1].spectral_radius, 0.5);
    EXPECT_EQ(cells[1].pnz, 0.05);
    EXPECT_EQ(cells[5].spectral_radius, 1.5);
    EXPECT_EQ(cells[5].gamma, plan.fixed.gamma);

    SearchPlan empty = small_plan();
    EXPECT_THROW(empty.validate(), Error);
}

TEST(SearchPlan, SeedsDependOnCoordinatesNotOrder)
{
    SearchPlan plan = small_plan();
    ReservoirParams cell = plan.fixed;
    const std::uint64_t s = cell_seed(plan, cell, 0);
    EXPECT_EQ(s, cell_seed(plan, cell, 0));
    EXPECT_NE(s, cell_seed(plan, cell, 1));
    ReservoirParams other = cell;
    other.spectral_radius += 0.1;
    EXPECT_NE(s, cell_seed(plan, other, 0));
    plan.shared_network = true;
    EXPECT_EQ(cell_seed(plan, cell, 0), cell_seed(plan, other, 0));
}

TEST(RunSearch, GsOnlyHasNoMetrics)
{
    SearchPlan plan = small_plan();
    plan.axes.spectral_radius = {0.9};
    plan.gate = Gate::kGsOnly;
    const auto results = run_search(plan, series());
    ASSERT_EQ(results.size(), 1u);
    ASSERT_TRUE(results[0].gs.has_value());
    EXPECT_TRUE(results[0].gs->converged);
    EXPECT_FALSE(results[0].trained);
    EXPECT_FALSE(results[0].metrics.has_value());
    EXPECT_TRUE(results[0].gs->distance_series.empty());
}

TEST(RunSearch, GateTrainsOnlyPassingCells)
{
    SearchPlan plan = small_plan();
    plan.axes.spectral_radius = {0.9, 2.5};
    const auto results = run_search(plan, series());
    ASSERT_EQ(results.size(), 2u);
    EXPECT_TRUE(results[0].gs->converged);
    EXPECT_TRUE(results[0].trained);
    EXPECT_TRUE(results[0].metrics.has_value());
    EXPECT_FALSE(results[1].gs->converged);
    EXPECT_FALSE(results[1].trained);
    EXPECT_FALSE(results[1].metrics.has_value());

    plan.gate = Gate::kTrainAll;
    const auto forced = run_search(plan, series());
    EXPECT_TRUE(forced[1].trained);
    EXPECT_TRUE(forced[1].metrics.has_value());
}

TEST(RunSearch, DeterministicAndCellIndependent)
{
    SearchPlan plan = small_plan();
    plan.axes.spectral_radius = {0.6, 0.9};
    plan.trials_per_cell = 2;
    plan.workers = 3;
    const auto dir = support::scratch_dir("search");
    const auto full = run_search(plan, series());
    write_results_csv(dir / "a.csv", full);
    plan.workers = 1;
    write_results_csv(dir / "b.csv", run_search(plan, series()));
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));

    SearchPlan alone = plan;
    alone.axes.spectral_radius = {0.9};
    const auto subset = run_search(alone, series());
    ASSERT_EQ(subset.size(), 2u);
    for (int t = 0; t < 2; ++t) {
        EXPECT_EQ(subset[t].params, full[2 + t].params);
        EXPECT_EQ(subset[t].metrics->per_start_valid_time, full[2 + t].metrics->per_start_valid_time);
    }
}

TEST(RunSearch, StageFailuresAreRecordedNotThrown)
{
    SearchPlan plan = small_plan();
    plan.axes.spectral_radius = {0.9};
    plan.evaluation.n_starts = 50;
    const auto results = run_search(plan, series());
    ASSERT_EQ(results.size(), 1u);
    EXPECT_TRUE(results[0].trained);
    EXPECT_FALSE(results[0].metrics.has_value());
    ASSERT_EQ(results[0].errors.size(), 1u);
    EXPECT_EQ(results[0].errors[0].rfind("evaluate:", 0), 0u);
    EXPECT_NE(search_summary_json(plan, results).find("evaluate:"), std::string::npos);
}

TEST(RunSearch, SpectrumStageAndSrSweepSummary)
{
    SearchPlan plan = small_plan();
    plan.axes.spectral_radius = {0.6, 0.9};
    plan.lyapunov_k = 4;
    plan.lyapunov_time = 5.0;
    LyapunovSpectrum driver;
    driver.exponents = Eigen::Vector3d(0.906, 0.0, -14.57);
    driver.k = 3;
    plan.driver_spectrum = driver;
    std::vector<CellResult> details;
    const auto points = sr_sweep(plan, series(), &details);
    ASSERT_EQ(points.size(), 2u);
    ASSERT_EQ(details.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(points[i].spectral_radius, plan.axes.spectral_radius[i]);
        ASSERT_TRUE(details[i].spectrum.has_value());
        EXPECT_EQ(points[i].rc_exponents, details[i].spectrum->rc_spectrum.exponents);
        EXPECT_EQ(points[i].mean_valid_time, details[i].metrics->mean_valid_time);
    }

    SearchPlan two_axes = plan;
    two_axes.axes.pnz = {0.05};
    EXPECT_THROW(sr_sweep(two_axes, series()), Error);
}

TEST(SavingsReport, AllCellsPassSavesNothing)
{
    std::vector<CellResult> r;
    for (int i = 0; i < 4; ++i) r.push_back(timed(true, true, 1.0, 30.0, 20.0));
    const SavingsReport s = savings_report(r);
    ASSERT_TRUE(s.ratio.has_value());
    EXPECT_NEAR(*s.ratio, 200.0 / 204.0, 1e-12);
}

TEST(SavingsReport, HalfFailingWithDominantTrainingIsAboutTwo)
{
    std::vector<CellResult> r;
    for (int i = 0; i < 5; ++i) r.push_back(timed(true, true, 0.5, 60.0, 40.0));
    for (int i = 0; i < 5; ++i) r.push_back(timed(false, false, 0.5, 0.0, 0.0));
    const SavingsReport s = savings_report(r);
    EXPECT_DOUBLE_EQ(s.ungated_cost_estimate, 1000.0);
    EXPECT_DOUBLE_EQ(s.gated_cost, 505.0);
    EXPECT_NEAR(*s.ratio, 2.0, 0.02);
}

TEST(SavingsReport, ForceTrainedFailuresUseMeasuredCost)
{
    std::vector<CellResult> r{timed(true, true, 1.0, 10.0, 10.0), timed(false, true, 1.0, 30.0, 10.0)};
    const SavingsReport s = savings_report(r);
    EXPECT_DOUBLE_EQ(s.ungated_cost_estimate, 60.0);
    EXPECT_DOUBLE_EQ(s.gated_cost, 22.0);
}

TEST(SavingsReport, NothingTrainedIsUndefined)
{
    std::vector<CellResult> r{timed(false, false, 1.0, 0, 0), timed(true, false, 1.0, 0, 0)};
    EXPECT_FALSE(savings_report(r).ratio.has_value());
    EXPECT_NE(search_timing_json(r).find("\"undefined\""), std::string::npos);
}

TEST(Gate, NamesRoundTrip)
{
    for (Gate g : {Gate::kGsOnly, Gate::kGsThenTrain, Gate::kTrainAll}) EXPECT_EQ(gate_from_string(to_string(g)), g);
    EXPECT_THROW(gate_from_string("bayesian"), Error);
}
