#include "support.hpp"

#include <attn/simulation.hpp>

#include <gtest/gtest.h>

using namespace attn;
using namespace attn::testing;

namespace {

Problem diag61(bool with_mean = false) {
    Matrix s(2, 2);
    s << 6, 0, 0, 1;
    if (!with_mean) return Problem(s, Vector::Ones(2));
    Vector mu(2);
    mu << 0.7, -1.9;
    return Problem(s, Vector::Ones(2), mu);
}

SimConfig config(int paths, double horizon, double dt, std::uint64_t seed = 0) {
    SimConfig c;
    c.n_paths = paths;
    c.horizon = horizon;
    c.dt = dt;
    c.seed = seed;
    return c;
}

} // namespace

TEST(Simulation, DiscreteUpdate) {
    const Problem p = diag61();
    const PosteriorState prior = posterior_state(p, Vector::Zero(2));
    Vector pi(2), x(2);
    pi << 1, 0;
    x << 2.0, 100.0;
    const PosteriorState post = posterior_update_discrete(p, prior, pi, x);
    Matrix expected(2, 2);
    expected << 6.0 / 7.0, 0, 0, 1;
    EXPECT_LE((post.cov - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(post.mean[0], 2.0 / (1.0 / 6.0 + 1.0), 1e-14);
    EXPECT_NEAR(post.mean[1], 0.0, 1e-14);

    const PosteriorState same = posterior_update_discrete(p, prior, Vector::Zero(2), x);
    EXPECT_LE((same.cov - prior.cov).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(same.mean.cwiseAbs().maxCoeff(), 1e-14);

    PosteriorState s = prior;
    for (int i = 0; i < 1000; ++i) s = posterior_update_discrete(p, s, Vector::Constant(2, 1.0), Vector::Zero(2));
    EXPECT_LT(s.cov.cwiseAbs().maxCoeff(), 1.1e-3);

    EXPECT_THROW(posterior_update_discrete(p, prior, -pi, x), Error);
    EXPECT_THROW(posterior_update_discrete(p, prior, Vector::Zero(3), x), Error);
}

TEST(Simulation, VarianceOfPosteriorMeanAtSwitch) {
    const Problem p = diag61();
    const StagePath path = solve_stages(p);
    SimConfig cfg = config(10000, 2.0, 1.0 / 120.0);
    cfg.record_every = 10;
    const SimResult res = simulate(p, path, cfg);
    size_t j = 0;
    while (std::abs(res.times[j] - 5.0 / 6.0) > 1e-12) ++j;
    EXPECT_NEAR(res.analytic_variance[j], 5.0, 1e-10);
    EXPECT_NEAR(res.posterior_variance[j], 2.0, 1e-10);
    EXPECT_LE(std::abs(res.empirical_variance[j] - 5.0), 3.0 * res.se_variance(j));
}

TEST(Simulation, PosteriorMeanIsAMartingale) {
    const Problem p = diag61(true);
    const SimResult res = simulate(p, solve_stages(p), config(10000, 3.0, 0.01, 5));
    EXPECT_NEAR(res.prior_state_mean, 0.7 - 1.9, 1e-15);
    for (size_t j = 0; j < res.times.size(); ++j) {
        EXPECT_NEAR(res.mean_of_means[j], res.prior_state_mean, 4.0 * res.se_mean(j) + 1e-12) << res.times[j];
        const double expected = posterior_variance(p, n_of_t(solve_stages(p), res.times[j]));
        EXPECT_NEAR(res.posterior_variance[j], expected, 1e-12);
    }
}

TEST(Simulation, VarianceMatchesAcrossPriors) {
    Rng rng(81);
    for (int rep = 0; rep < 4; ++rep) {
        const Problem p = random_diag_dominant(rng, 3);
        const SimResult res = simulate(p, solve_stages(p), config(4000, 4.0, 0.02, rep));
        int misses = 0;
        for (size_t j = 1; j < res.times.size(); ++j)
            if (std::abs(res.empirical_variance[j] - res.analytic_variance[j]) > 4.0 * res.se_variance(j)) ++misses;
        EXPECT_LE(misses, 2);
    }
}

TEST(Simulation, Deterministic) {
    const Problem p = diag61(true);
    const StagePath path = solve_stages(p);
    const SimResult a = simulate(p, path, config(200, 1.0, 0.05, 42));
    const SimResult b = simulate(p, path, config(200, 1.0, 0.05, 42));
    const SimResult c = simulate(p, path, config(200, 1.0, 0.05, 43));
    const SimResult d = simulate(p, path, config(50, 1.0, 0.05, 42));
    EXPECT_TRUE(a.means == b.means);
    EXPECT_FALSE(a.means == c.means);
    EXPECT_TRUE(a.means.topRows(50) == d.means);
}

TEST(Simulation, ZeroPolicyKeepsThePrior) {
    const Problem p = diag61(true);
    const SimResult res = simulate(p, [](double) { return Vector::Zero(2).eval(); }, config(100, 1.0, 0.1));
    for (size_t j = 0; j < res.times.size(); ++j) {
        EXPECT_NEAR(res.posterior_variance[j], 7.0, 1e-12);
        EXPECT_NEAR(res.analytic_variance[j], 0.0, 1e-12);
        EXPECT_LE((res.means.col(static_cast<Index>(j)).array() - res.prior_state_mean).abs().maxCoeff(), 1e-12);
    }
}

TEST(Simulation, SinglePathStaysBounded) {
    const Problem p = diag61();
    const SimResult res = simulate(p, solve_stages(p), config(1, 5.0, 0.01));
    EXPECT_TRUE(res.means.allFinite());
    EXPECT_TRUE(std::isnan(res.empirical_variance.back()));
    EXPECT_LT(res.means.cwiseAbs().maxCoeff(), 50.0);
}

TEST(Simulation, DiscretePrecisionMode) {
    const Problem p = diag61();
    const StagePath path = solve_stages(p);
    SimConfig cfg = config(10000, 6.0, 1.0, 9);
    cfg.mode = SimMode::DiscretePrecision;
    const SimResult res = simulate(p, path, cfg);
    ASSERT_EQ(res.times.size(), 7u);
    const Matrix per_period = discretize_policy(path, 6);
    Vector cum = Vector::Zero(2);
    for (int s = 0; s < 6; ++s) {
        cum += per_period.row(s).transpose();
        EXPECT_NEAR(res.posterior_variance[s + 1], posterior_variance(p, cum), 1e-12);
        EXPECT_LE(std::abs(res.empirical_variance[s + 1] - res.analytic_variance[s + 1]), 4.0 * res.se_variance(s + 1));
    }
    cfg.dt = 0.5;
    EXPECT_THROW(simulate(p, path, cfg), Error);
}

TEST(Simulation, InvalidConfig) {
    const Problem p = diag61();
    const StagePath path = solve_stages(p);
    EXPECT_THROW(simulate(p, path, config(10, 1.0, 0.0)), Error);
    EXPECT_THROW(simulate(p, path, config(0, 1.0, 0.1)), Error);
    EXPECT_THROW(simulate(p, path, config(10, 1.0, 0.3)), Error);
}
