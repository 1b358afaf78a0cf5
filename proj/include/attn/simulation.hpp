#pragma once

// Monte Carlo check of an attention policy: draw theta from the prior,
// observe each source with the precision the policy allocates, and track the
// posterior mean of the state on every path.

#include <attn/gaussian_core.hpp>
#include <attn/parallel.hpp>
#include <attn/stage_solver.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace attn {

enum class SimMode { ContinuousEuler, DiscretePrecision };

struct SimConfig {
    double dt = 0.01;
    double horizon = 1.0;
    int n_paths = 1000;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::ContinuousEuler;
    // Record every n-th step; 0 picks a stride giving at most 200 records.
    int record_every = 0;

    void validate() const {
        if (!(dt > 0.0 && std::isfinite(dt)) || !(horizon > 0.0 && std::isfinite(horizon)) || n_paths < 1 ||
            record_every < 0)
            throw Error(ErrorKind::InvalidConfig, "invalid simulation settings");
        if (mode == SimMode::DiscretePrecision && dt != 1.0)
            throw Error(ErrorKind::InvalidConfig, "discrete-precision mode uses unit periods");
    }
};

// Cumulative attention as a function of time.
using CumulativePolicy = std::function<Vector(double)>;

struct SimResult {
    std::vector<double> times;
    // Posterior mean of the state, one row per path and one column per record.
    Matrix means;
    std::vector<double> mean_of_means;
    std::vector<double> empirical_variance;
    // Var of the posterior mean implied by the model: prior variance - V(n(t)).
    std::vector<double> analytic_variance;
    // Posterior variance of the state from the attention actually simulated.
    std::vector<double> posterior_variance;
    double prior_state_mean = 0.0;

    double se_variance(size_t j) const {
        return analytic_variance[j] * std::sqrt(2.0 / static_cast<double>(means.rows() - 1));
    }
    double se_mean(size_t j) const { return std::sqrt(analytic_variance[j] / static_cast<double>(means.rows())); }
};

namespace detail {

inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    return std::mt19937_64(seq);
}

} // namespace detail

inline SimResult simulate(const Problem& p, const CumulativePolicy& policy, const SimConfig& cfg) {
    cfg.validate();
    const Index k = p.dim();
    const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    if (steps < 1 || std::abs(steps * cfg.dt - cfg.horizon) > 1e-9 * cfg.horizon)
        throw Error(ErrorKind::InvalidConfig, "horizon must be a whole number of steps");
    const int stride = cfg.record_every > 0 ? cfg.record_every : std::max(1, (steps + 199) / 200);

    // Step precisions and the signal-independent posterior quantities.
    Matrix step_prec(steps, k);
    Vector prev = policy(0.0), cum = Vector::Zero(k);
    std::vector<int> record_steps;
    SimResult res;
    std::vector<Vector> gammas;
    const double s0 = p.prior_variance();
    auto record = [&](int step) {
        record_steps.push_back(step);
        const double t = step * cfg.dt;
        res.times.push_back(t);
        const auto st = posterior_state(p, cum);
        gammas.push_back(st.gamma);
        res.posterior_variance.push_back(st.state_variance);
        res.analytic_variance.push_back(s0 - posterior_variance(p, policy(t)));
    };
    record(0);
    for (int s = 0; s < steps; ++s) {
        const Vector next = policy((s + 1) * cfg.dt);
        step_prec.row(s) = (next - prev).cwiseMax(0.0).transpose();
        cum += step_prec.row(s).transpose();
        prev = next;
        if ((s + 1) % stride == 0 || s + 1 == steps) record(s + 1);
    }

    const Eigen::LLT<Matrix> prior_chol(p.sigma());
    const Matrix chol = prior_chol.matrixL();
    const Vector h0 = p.precision() * p.mu();
    res.prior_state_mean = p.alpha().dot(p.mu());
    const Index n_rec = static_cast<Index>(record_steps.size());
    res.means.resize(cfg.n_paths, n_rec);

    parallel_for(static_cast<size_t>(cfg.n_paths), [&](size_t path) {
        auto eng = detail::path_engine(cfg.seed, path);
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector z(k);
        for (Index i = 0; i < k; ++i) z[i] = normal(eng);
        const Vector theta = p.mu() + chol * z;
        // Information vector: prior precision times mean plus precision-weighted observations.
        Vector h = h0;
        Index rec = 0;
        res.means(static_cast<Index>(path), rec++) = gammas[0].dot(h);
        for (int s = 0; s < steps; ++s) {
            for (Index i = 0; i < k; ++i) {
                const double e = normal(eng);
                const double pi = step_prec(s, i);
                if (pi > 0.0) h[i] += pi * theta[i] + std::sqrt(pi) * e;
            }
            if (rec < n_rec && record_steps[rec] == s + 1) {
                res.means(static_cast<Index>(path), rec) = gammas[rec].dot(h);
                ++rec;
            }
        }
    });

    const double n = static_cast<double>(cfg.n_paths);
    for (Index j = 0; j < n_rec; ++j) {
        const double mean = res.means.col(j).sum() / n;
        const double var = cfg.n_paths > 1 ? (res.means.col(j).array() - mean).square().sum() / (n - 1.0)
                                           : std::numeric_limits<double>::quiet_NaN();
        res.mean_of_means.push_back(mean);
        res.empirical_variance.push_back(var);
    }
    return res;
}

inline SimResult simulate(const Problem& p, const StagePath& path, const SimConfig& cfg) {
    return simulate(p, [&path](double t) { return n_of_t(path, t); }, cfg);
}

// Bayesian update after observing theta_i with precision pi_i (zero means unobserved).
inline PosteriorState posterior_update_discrete(const Problem& p, const PosteriorState& state, const Vector& precisions,
                                                const Vector& observations) {
    const Index k = p.dim();
    if (precisions.size() != k || observations.size() != k || state.cov.rows() != k || state.mean.size() != k)
        throw Error(ErrorKind::WrongDimension, "update inputs must have length K");
    if (!precisions.allFinite() || (precisions.array() < 0.0).any())
        throw Error(ErrorKind::DomainError, "precisions must be finite and nonnegative");
    const auto prior = detail::factorize(state.cov, "state covariance");
    Matrix info = prior.solve(Matrix::Identity(k, k));
    Vector h = prior.solve(state.mean);
    info.diagonal() += precisions;
    for (Index i = 0; i < k; ++i)
        if (precisions[i] > 0.0) h[i] += precisions[i] * observations[i];
    const auto post = detail::factorize(detail::symmetric_part(info), "posterior precision");
    PosteriorState out;
    out.cov = detail::symmetric_part(post.solve(Matrix::Identity(k, k)));
    out.mean = post.solve(h);
    out.gamma = out.cov * p.alpha();
    out.state_variance = p.alpha().dot(out.gamma);
    return out;
}

} // namespace attn
