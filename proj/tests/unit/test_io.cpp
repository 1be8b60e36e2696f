#include "test_support.hpp"

#include <rcgs/io.hpp>
#include <rcgs/lyapunov.hpp>
#include <rcgs/training.hpp>

#include <gtest/gtest.h>

#include <fstream>

using namespace rcgs;
namespace fs = std::filesystem;

TEST(Io, TrajectoryBundleRoundTripsBitExactly)
{
    const auto dir = support::scratch_dir("io-bundle");
    Trajectory t = support::lorenz63_series(3.0);
    t.t0 = 12.5;
    io::write_trajectory_bundle(dir / "traj", t);
    const Trajectory back = io::read_trajectory_bundle(dir / "traj");
    EXPECT_EQ(back.states, t.states);
    EXPECT_EQ(back.dt, t.dt);
    EXPECT_EQ(back.t0, t.t0);
    EXPECT_EQ(fs::file_size(dir / "traj" / "states.bin"), static_cast<std::uintmax_t>(t.states.size() * 8));
}

TEST(Io, TrajectoryCsvRoundTripsValues)
{
    const auto dir = support::scratch_dir("io-csv");
    const Trajectory t = support::lorenz63_series(2.0);
    io::write_trajectory_csv(dir / "t.csv", t);
    std::ifstream in(dir / "t.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,u0,u1,u2");
    const Trajectory back = io::read_trajectory_csv(dir / "t.csv");
    EXPECT_EQ(back.states, t.states);
    EXPECT_NEAR(back.dt, t.dt, 1e-15);
}

TEST(Io, ReservoirBundleRoundTripsBitExactly)
{
    const auto dir = support::scratch_dir("io-reservoir");
    const Reservoir res = Reservoir::build(support::small_params(250));
    io::write_reservoir_bundle(dir / "res", res);
    const Reservoir back = io::read_reservoir_bundle(dir / "res");
    EXPECT_TRUE(back == res);
    EXPECT_EQ(fs::file_size(dir / "res" / "adjacency.bin"),
              static_cast<std::uintmax_t>(res.adjacency().nnz() * 24));
}

TEST(Io, ReadoutRoundTripsBitExactly)
{
    const auto dir = support::scratch_dir("io-readout");
    const Reservoir res = Reservoir::build(support::small_params(90));
    const Readout ro = train(res, support::lorenz63_series(40.0), {});
    io::write_readout(dir / "ro", ro);
    const Readout back = io::read_readout(dir / "ro");
    EXPECT_EQ(back.weights(), ro.weights());
    EXPECT_EQ(back.spec(), ro.spec());
    EXPECT_EQ(back.ridge_beta(), ro.ridge_beta());
    EXPECT_EQ(back.diagnostics().normal_residual, ro.diagnostics().normal_residual);
}

TEST(Io, SpectrumJsonRoundTrips)
{
    const LyapunovSpectrum s = lyapunov_spectrum_ode(lorenz63(), Vector::Ones(3), 0.01, 2000, 3);
    const LyapunovSpectrum back = io::spectrum_from_json(io::spectrum_to_json(s));
    EXPECT_EQ(back.exponents, s.exponents);
    EXPECT_EQ(back.converged, s.converged);
    EXPECT_EQ(back.convergence_history.size(), s.convergence_history.size());
    EXPECT_EQ(back.drift, s.drift);
}

TEST(Io, StandardizationJsonRoundTrips)
{
    const auto [t, tr] = standardize(integrate_on_attractor(lorenz63(), Vector::Ones(3), 0.01, 5.0, 10.0));
    const Standardization back = io::standardization_from_json(io::standardization_to_json(tr));
    EXPECT_EQ(back.mean, tr.mean);
    EXPECT_EQ(back.scale, tr.scale);
}

TEST(Io, MissingAndTruncatedFiles)
{
    const auto dir = support::scratch_dir("io-errors");
    try {
        io::read_trajectory_bundle(dir / "nothing");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kPrerequisite);
    }

    io::write_trajectory_bundle(dir / "traj", support::lorenz63_series(1.0));
    fs::resize_file(dir / "traj" / "states.bin", 100);
    try {
        io::read_trajectory_bundle(dir / "traj");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kIo);
    }
}

TEST(Io, Sha256OfKnownText)
{
    const auto dir = support::scratch_dir("io-sha");
    io::write_text(dir / "abc.txt", "abc");
    EXPECT_EQ(io::sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
