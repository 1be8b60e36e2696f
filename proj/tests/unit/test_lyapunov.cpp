#include <rcgs/lyapunov.hpp>

#include <gtest/gtest.h>

using namespace rcgs;

TEST(Benettin, LinearDiagonalSystemIsExact)
{
    Vector rates(4);
    rates << 0.3, -0.2, -1.0, 0.05;
    const DriverSystem sys = linear_diagonal(rates);
    OdeLyapunovOptions opt;
    opt.transient_time = 0.0;
    const LyapunovSpectrum s = lyapunov_spectrum_ode(sys, Vector::Ones(4) * 1e-3, 0.01, 2000, 4, opt);

    Vector sorted(4);
    sorted << 0.3, 0.05, -0.2, -1.0;
    EXPECT_LE((s.exponents - sorted).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(s.k, 4);
    EXPECT_DOUBLE_EQ(s.averaging_time, 20.0);
}

TEST(Benettin, Lorenz63ShortRun)
{
    const LyapunovSpectrum s = lyapunov_spectrum_ode(lorenz63(), Vector::Ones(3), 0.01, 100000, 3);
    ASSERT_EQ(s.exponents.size(), 3);
    EXPECT_NEAR(s.exponents[0], 0.906, 0.03);
    EXPECT_NEAR(s.exponents[1], 0.0, 0.015);
    EXPECT_NEAR(s.exponents[2], -14.57, 0.08);
    EXPECT_NEAR(s.exponents.sum(), -41.0 / 3.0, 0.02);
    EXPECT_GE(s.exponents[0], s.exponents[1]);
    EXPECT_GE(s.exponents[1], s.exponents[2]);
    EXPECT_LT(s.drift[0], 0.05);
    EXPECT_FALSE(s.escape_time.has_value());
}

TEST(Benettin, InvariantToRenormIntervalAndStart)
{
    OdeLyapunovOptions a;
    OdeLyapunovOptions b;
    b.benettin.renorm_interval = 20;
    const LyapunovSpectrum s1 = lyapunov_spectrum_ode(lorenz63(), Vector::Ones(3), 0.01, 100000, 3, a);
    Vector other(3);
    other << -5.0, 3.0, 20.0;
    const LyapunovSpectrum s2 = lyapunov_spectrum_ode(lorenz63(), other, 0.01, 100000, 3, b);
    EXPECT_NEAR(s1.exponents[0], s2.exponents[0], 0.04);
    EXPECT_NEAR(s1.exponents[1], s2.exponents[1], 0.02);
    EXPECT_NEAR(s1.exponents.sum(), s2.exponents.sum(), 0.02);
}

TEST(Benettin, PartialSpectrumMatchesLeadingExponents)
{
    const LyapunovSpectrum full = lyapunov_spectrum_ode(lorenz96(5, 8.0), Vector::Constant(5, 8.1), 0.01, 50000, 5);
    const LyapunovSpectrum lead = lyapunov_spectrum_ode(lorenz96(5, 8.0), Vector::Constant(5, 8.1), 0.01, 50000, 2);
    EXPECT_NEAR(full.exponents[0], lead.exponents[0], 1e-6);
    EXPECT_NEAR(full.exponents[1], lead.exponents[1], 1e-6);
    // Trace identity for Lorenz96: the divergence is -D.
    EXPECT_NEAR(full.exponents.sum(), -5.0, 0.02);
}

TEST(Benettin, ConvergenceHistoryEndsAtExponents)
{
    const LyapunovSpectrum s = lyapunov_spectrum_ode(lorenz63(), Vector::Ones(3), 0.01, 5000, 3);
    ASSERT_EQ(s.convergence_history.size(), 500u);
    EXPECT_EQ(s.convergence_history.back(), s.exponents);
    EXPECT_EQ(s.drift.size(), 3);
    EXPECT_DOUBLE_EQ(s.tolerance, 0.01 * std::abs(s.exponents[0]));
}

TEST(Benettin, RejectsBadArguments)
{
    EXPECT_THROW(lyapunov_spectrum_ode(lorenz63(), Vector::Ones(3), 0.01, 1000, 4), Error);
    EXPECT_THROW(lyapunov_spectrum_ode(lorenz63(), Vector::Ones(3), 0.01, 5, 3), Error);
}
