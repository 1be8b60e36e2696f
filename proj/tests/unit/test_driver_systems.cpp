#include "test_support.hpp"

#include <rcgs/driver_systems.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rcgs;

TEST(Lorenz63, VectorFieldAtHandPoints)
{
    EXPECT_TRUE(lorenz63_vector_field(Vector::Zero(3)).isZero());

    const Vector a = lorenz63_vector_field(Vector::Ones(3));
    EXPECT_DOUBLE_EQ(a[0], 0.0);
    EXPECT_DOUBLE_EQ(a[1], 26.0);
    EXPECT_NEAR(a[2], -5.0 / 3.0, 1e-15);

    const Vector b = lorenz63_vector_field(Vector::Unit(3, 0));
    EXPECT_DOUBLE_EQ(b[0], -10.0);
    EXPECT_DOUBLE_EQ(b[1], 28.0);
    EXPECT_DOUBLE_EQ(b[2], 0.0);
}

TEST(Lorenz63, RejectsNonFiniteAndWrongSize)
{
    Vector bad = Vector::Ones(3);
    bad[1] = std::nan("");
    EXPECT_THROW(lorenz63_vector_field(bad), Error);
    EXPECT_THROW(lorenz63_vector_field(Vector::Ones(4)), Error);
}

TEST(Lorenz96, VectorFieldAtHandPoints)
{
    EXPECT_TRUE(lorenz96_vector_field(Vector::Constant(7, 8.0), 8.0).isZero());

    const Vector e = lorenz96_vector_field(Vector::Unit(5, 0), 0.0);
    Vector expected(5);
    expected << -1, 0, 0, 0, 0;
    EXPECT_TRUE(e.isApprox(expected));

    Vector x(5);
    x << 1, 2, 0, 0, 0;
    expected << -1, -2, -2, 0, 0;
    EXPECT_TRUE(lorenz96_vector_field(x, 0.0).isApprox(expected));

    EXPECT_TRUE(lorenz96_vector_field(Vector::Zero(5), 8.0).isApprox(Vector::Constant(5, 8.0)));
    EXPECT_THROW(lorenz96_vector_field(Vector::Zero(3), 8.0), Error);
}

TEST(DriverJacobian, MatchesCentralDifferences)
{
    std::mt19937_64 gen(3);
    for (const DriverSystem& sys : {lorenz63(), lorenz96(5, 8.0), lorenz96(9, 8.0)}) {
        for (int probe = 0; probe < 100; ++probe) {
            const Vector x = support::random_vector(gen, sys.dim(), 10.0);
            const Matrix jac = sys.jacobian(x);
            Matrix fd(sys.dim(), sys.dim());
            const double h = 1e-6;
            for (int j = 0; j < sys.dim(); ++j) {
                Vector xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                fd.col(j) = (sys.field(xp) - sys.field(xm)) / (2 * h);
            }
            EXPECT_LE((jac - fd).norm(), 1e-6 * std::max(1.0, jac.norm())) << sys.name();
        }
    }
}

TEST(MakeDriver, ParsesNamesAndRejectsUnknownParameters)
{
    EXPECT_EQ(make_driver("lorenz63", 3, {}).dim(), 3);
    EXPECT_EQ(make_driver("lorenz96", 6, {{"F", 4.0}}).dim(), 6);
    EXPECT_EQ(make_driver("linear", 2, {{"a0", -1.0}, {"a1", 0.5}}).dim(), 2);
    EXPECT_THROW(make_driver("lorenz63", 3, {{"gamma", 1.0}}), Error);
    EXPECT_THROW(make_driver("duffing", 2, {}), Error);
}

TEST(Rk4, SingleStepOnExponentialDecay)
{
    const DriverSystem decay = linear_diagonal(Vector::Constant(1, -1.0));
    Vector x = Vector::Ones(1);
    rk4_step(decay, x, 0.1);
    EXPECT_NEAR(x[0], 0.90483742, 1e-7);
    EXPECT_NEAR(x[0], std::exp(-0.1), 1e-6);
}

TEST(Rk4, ZeroFieldLeavesStateUnchanged)
{
    const DriverSystem still = linear_diagonal(Vector::Zero(3));
    Vector x0(3);
    x0 << 1.5, -2.0, 0.25;
    const Trajectory t = integrate_rk4(still, x0, 0.01, 1);
    ASSERT_EQ(t.size(), 2);
    EXPECT_EQ(Vector(t.states.row(1).transpose()), x0);
}

TEST(Rk4, SelfConvergenceOrderIsFour)
{
    const DriverSystem sys = lorenz63();
    const Vector x0 = integrate_rk4(sys, Vector::Ones(3), 0.01, 2000).states.bottomRows(1).transpose();
    auto end = [&](double dt) {
        const Trajectory t = integrate_rk4(sys, x0, dt, steps_for(1.0, dt));
        return Vector(t.states.bottomRows(1).transpose());
    };
    const double dt = 0.004;
    const Vector a = end(dt), b = end(dt / 2), c = end(dt / 4);
    const double order = std::log2((a - b).norm() / (b - c).norm());
    EXPECT_GE(order, 3.8);
    EXPECT_LE(order, 4.2);
}

TEST(Rk4, DivergenceNamesTheStep)
{
    const DriverSystem blowup = linear_diagonal(Vector::Constant(1, 50.0));
    try {
        integrate_rk4(blowup, Vector::Ones(1), 0.1, 1000);
        FAIL() << "expected divergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
    }
}

TEST(Trajectory, SliceShiftsTime)
{
    Trajectory t;
    t.dt = 0.5;
    t.t0 = 1.0;
    t.states = RowMatrix::Random(10, 2);
    const Trajectory s = t.slice(4, 3);
    EXPECT_DOUBLE_EQ(s.t0, 3.0);
    EXPECT_EQ(s.size(), 3);
    EXPECT_EQ(s.states.row(0), t.states.row(4));
    EXPECT_THROW(t.slice(8, 3), Error);
}

TEST(StepsFor, RejectsNonMultiples)
{
    EXPECT_EQ(steps_for(500.0, 0.01), 50000);
    EXPECT_EQ(steps_for(0.0, 0.01), 0);
    EXPECT_THROW(steps_for(0.015, 0.01), Error);
}

TEST(Standardize, TwoSampleSeries)
{
    Trajectory t;
    t.dt = 1.0;
    t.states.resize(2, 1);
    t.states << 0.0, 2.0;
    const auto [s, tr] = standardize(t);
    EXPECT_DOUBLE_EQ(s.states(0, 0), -1.0 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(s.states(1, 0), 1.0 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(tr.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(tr.scale[0], std::sqrt(2.0));
}

TEST(Standardize, IdempotentAndInvertible)
{
    const Trajectory raw = integrate_on_attractor(lorenz63(), Vector::Ones(3), 0.01, 10.0, 50.0);
    const auto [s, tr] = standardize(raw);
    const auto [s2, tr2] = standardize(s);
    EXPECT_LE(tr2.mean.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((tr2.scale.array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_TRUE(tr.invert(s).states.isApprox(raw.states, 1e-12));
}

TEST(Standardize, ConstantComponentIsNamed)
{
    Trajectory t;
    t.dt = 1.0;
    t.states = RowMatrix::Random(20, 3);
    t.states.col(2).setConstant(4.0);
    try {
        standardize(t);
        FAIL() << "expected zero-variance error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
}
