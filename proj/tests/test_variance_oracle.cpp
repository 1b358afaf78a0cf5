#include "support.hpp"

#include <attn/variance_oracle.hpp>

#include <gtest/gtest.h>

using namespace attn;
using namespace attn::testing;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Problem negatively_correlated_pair() {
    Matrix s(2, 2);
    s << 10, -3, -3, 1;
    return Problem(s, vec({1, 4}));
}

Problem three_source_counterexample() {
    Matrix s(3, 3);
    s << 19, 3, 0, 3, 5, 3, 0, 3, 2;
    return Problem(s, vec({1, 1, 20}));
}

Problem block_complements() {
    Matrix s(3, 3);
    s << 3, -2, 0, -2, 3, 0, 0, 0, 2;
    return Problem(s, Vector::Ones(3));
}

Vector random_feasible(Rng& rng, Index k, double t, const Vector& floor) {
    Vector w(k);
    for (Index i = 0; i < k; ++i) w[i] = -std::log(uniform(rng, 1e-12, 1.0));
    return floor + (t - floor.sum()) * w / w.sum();
}

} // namespace

TEST(VarianceOracle, SimplexProjection) {
    const Vector r = project_simplex(vec({0.5, 2.0, -1.0}), 1.0);
    EXPECT_NEAR(r[0], 0.0, 1e-15);
    EXPECT_NEAR(r[1], 1.0, 1e-15);
    EXPECT_NEAR(r[2], 0.0, 1e-15);
    const Vector u = project_simplex(vec({0.2, 0.2, 0.2}), 3.0);
    EXPECT_NEAR(u.sum(), 3.0, 1e-14);
    EXPECT_NEAR(u[0], 1.0, 1e-14);
}

TEST(VarianceOracle, NegativelyCorrelatedPairDropsFirstSource) {
    const Problem p = negatively_correlated_pair();
    const auto r = t_optimal(p, 0.5);
    EXPECT_NEAR(r.q_star[0], 1.0 / 6.0, 1e-9);
    EXPECT_NEAR(r.q_star[1], 1.0 / 3.0, 1e-9);
    EXPECT_LE(r.kkt_residual, 1e-8);
    for (double t : {0.1, 0.2}) {
        const auto e = t_optimal(p, t);
        EXPECT_NEAR(e.q_star[0], t, 1e-9);
        EXPECT_NEAR(e.q_star[1], 0.0, 1e-9);
    }
    for (double t : {0.3, 0.6, 0.9}) {
        const auto m = t_optimal(p, t);
        EXPECT_NEAR(m.q_star[0], (1 - t) / 3, 1e-9);
        EXPECT_NEAR(m.q_star[1], (4 * t - 1) / 3, 1e-9);
    }
}

TEST(VarianceOracle, ThreeSourceCounterexample) {
    const auto r = t_optimal(three_source_counterexample(), 15.0);
    EXPECT_NEAR(r.q_star[0], 1.0, 1e-8);
    EXPECT_NEAR(r.q_star[1], 14.0, 1e-8);
    EXPECT_NEAR(r.q_star[2], 0.0, 1e-8);
}

TEST(VarianceOracle, IsotropicPriorSplitsEvenly) {
    for (Index k = 2; k <= 6; ++k) {
        const Problem p(2.5 * Matrix::Identity(k, k), Vector::Ones(k));
        const auto r = t_optimal(p, static_cast<double>(k));
        EXPECT_LT((r.q_star - Vector::Ones(k)).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(VarianceOracle, FloorOnFirstSource) {
    const auto r = constrained_t_optimal(block_complements(), 0.6, vec({0.1, 0, 0}));
    EXPECT_NEAR(r.q_star[0], 0.1, 1e-9);
    EXPECT_NEAR(r.q_star[1], 0.04, 1e-9);
    EXPECT_NEAR(r.q_star[2], 0.46, 1e-9);
}

TEST(VarianceOracle, InfeasibleFloor) {
    try {
        constrained_t_optimal(block_complements(), 0.05, vec({0.1, 0, 0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InfeasibleFloor);
    }
}

TEST(VarianceOracle, BeatsRandomFeasiblePoints) {
    Rng rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const Index k = 2 + rep % 5;
        const Problem p = random_problem(rng, k);
        const double t = uniform(rng, 0.1, 8.0);
        Vector floor = Vector::Zero(k);
        if (rep % 2) floor[0] = 0.2 * t;
        const auto r = constrained_t_optimal(p, t, floor);
        for (int s = 0; s < 100; ++s) {
            const Vector q = random_feasible(rng, k, t, floor);
            EXPECT_LE(r.value, posterior_variance(p, q) + 1e-12);
        }
    }
}

TEST(VarianceOracle, RestartsAgree) {
    Rng rng(32);
    for (int rep = 0; rep < 20; ++rep) {
        const Index k = 2 + rep % 5;
        const Problem p = random_problem(rng, k);
        const double t = uniform(rng, 0.1, 8.0);
        const Vector ref = t_optimal(p, t).q_star;
        for (int s = 0; s < 10; ++s) {
            OracleOptions opt;
            opt.start = random_feasible(rng, k, t, Vector::Zero(k));
            EXPECT_LT((t_optimal(p, t, opt).q_star - ref).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(VarianceOracle, MatchesActiveSetEnumeration) {
    Rng rng(33);
    for (int rep = 0; rep < 40; ++rep) {
        const Index k = 2 + rep % 4;
        const Problem p = random_problem(rng, k);
        const double t = uniform(rng, 0.05, 6.0);
        const auto a = t_optimal(p, t);
        const auto b = active_set_optimal(p, t, Vector::Zero(k));
        EXPECT_LT((a.q_star - b.q_star).cwiseAbs().maxCoeff(), 1e-8) << "rep " << rep << " values " << a.value << " vs " << b.value << " kkt " << a.kkt_residual << " " << b.kkt_residual;
    }
}

TEST(VarianceOracle, MonotonicityScanFlagsDroppedSource) {
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);
    const auto rep = monotonicity_scan(negatively_correlated_pair(), grid);
    ASSERT_FALSE(rep.monotone());
    for (const auto& v : rep.violations) {
        EXPECT_EQ(v.source, 0);
        EXPECT_GE(v.t_from, 0.25 - 1e-12);
        EXPECT_LE(v.t_to, 1.0 + 1e-12);
    }
    EXPECT_EQ(rep.violations.size(), 15u);

    const auto ok = monotonicity_scan(block_complements(), grid);
    EXPECT_TRUE(ok.monotone());
}
