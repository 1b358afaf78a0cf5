#pragma once

// Optimal dynamic attention as a sequence of stages. Within a stage a fixed
// set of sources is sampled in fixed proportions; each new stage adds the
// source(s) whose marginal value has caught up with the attended set.

#include <attn/assumptions.hpp>
#include <attn/gaussian_core.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace attn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stage {
    double t_start = 0.0;
    double t_end = kInf;
    std::vector<Index> support;
    Vector mixture;

    bool open_ended() const { return std::isinf(t_end); }
};

struct StagePath {
    Index dim = 0;
    std::vector<Stage> stages;

    // Times at which a new stage starts (excluding t = 0).
    std::vector<double> switch_times() const {
        std::vector<double> out;
        for (size_t k = 1; k < stages.size(); ++k) out.push_back(stages[k].t_start);
        return out;
    }
};

// alpha_B + Sigma_BB^{-1} Sigma_{B,notB} alpha_notB: the weights of the
// equivalent problem where only the sources in B are observed.
inline Vector transformed_weights(const Problem& p, const std::vector<Index>& b) {
    const Index k = p.dim();
    const Index m = static_cast<Index>(b.size());
    if (m == 0 || m > k) throw Error(ErrorKind::WrongDimension, "index set must be nonempty and at most K");
    std::vector<bool> in(k, false);
    for (Index i : b) {
        if (i < 0 || i >= k || in[i]) throw Error(ErrorKind::WrongDimension, "bad index set");
        in[i] = true;
    }
    std::vector<Index> rest;
    for (Index i = 0; i < k; ++i)
        if (!in[i]) rest.push_back(i);

    const Matrix& s = p.sigma();
    Matrix s_bb(m, m);
    Vector a_b(m);
    for (Index a = 0; a < m; ++a) {
        a_b[a] = p.alpha()[b[a]];
        for (Index c = 0; c < m; ++c) s_bb(a, c) = s(b[a], b[c]);
    }
    if (rest.empty()) return a_b;
    Vector cross(m);
    for (Index a = 0; a < m; ++a) {
        double acc = 0.0;
        for (Index j : rest) acc += s(b[a], j) * p.alpha()[j];
        cross[a] = acc;
    }
    return a_b + detail::factorize(s_bb, "Sigma_BB").solve(cross);
}

inline void check_path_time(double t) {
    if (!std::isfinite(t) || t < 0.0) throw Error(ErrorKind::DomainError, "time must be finite and nonnegative");
}

// Cumulative attention n(t).
inline Vector n_of_t(const StagePath& path, double t) {
    check_path_time(t);
    Vector q = Vector::Zero(path.dim);
    for (const Stage& s : path.stages) {
        if (t <= s.t_start) break;
        q += (std::min(t, s.t_end) - s.t_start) * s.mixture;
    }
    return q;
}

// Instantaneous attention (right-continuous).
inline Vector beta_of_t(const StagePath& path, double t) {
    check_path_time(t);
    for (const Stage& s : path.stages)
        if (t >= s.t_start && t < s.t_end) return s.mixture;
    return path.stages.back().mixture;
}

// Row m is the attention spent in period [m, m+1).
inline Matrix discretize_policy(const StagePath& path, int horizon) {
    if (horizon < 0) throw Error(ErrorKind::DomainError, "horizon must be nonnegative");
    Matrix out(horizon, path.dim);
    Vector prev = n_of_t(path, 0.0);
    for (int m = 0; m < horizon; ++m) {
        Vector next = n_of_t(path, m + 1.0);
        out.row(m) = (next - prev).transpose();
        prev = std::move(next);
    }
    return out;
}

// Closed form for two sources: sample the source more correlated with the
// state until the covariance gap is closed, then mix in proportion alpha.
inline StagePath k2_closed_form(const Problem& p) {
    if (p.dim() != 2) throw Error(ErrorKind::WrongDimension, "closed form requires K = 2");
    if (classify(p).k2_cov_sum != TriState::Pass)
        throw Error(ErrorKind::AssumptionViolated, "covariances with the state sum to a negative number");
    const Vector cov = p.state_covariances();
    const Index i = cov[0] >= cov[1] ? 0 : 1;
    const Index j = 1 - i;
    const double t_star = (cov[i] - cov[j]) / (p.alpha()[j] * p.sigma().determinant());

    StagePath path;
    path.dim = 2;
    const Vector final_mix = p.alpha() / p.alpha().sum();
    if (t_star > 0.0) {
        Vector e = Vector::Zero(2);
        e[i] = 1.0;
        path.stages.push_back({0.0, t_star, {i}, e});
        path.stages.push_back({t_star, kInf, {0, 1}, final_mix});
    } else {
        path.stages.push_back({0.0, kInf, {0, 1}, final_mix});
    }
    return path;
}

namespace detail {

inline std::vector<Index> argmax_set(const Vector& g, std::vector<bool>& tracked) {
    const double gmax = g.cwiseAbs().maxCoeff();
    for (Index i = 0; i < g.size(); ++i)
        if (std::abs(g[i]) >= gmax - 1e-9 * gmax) tracked[i] = true;
    std::vector<Index> b;
    for (Index i = 0; i < g.size(); ++i)
        if (tracked[i]) b.push_back(i);
    return b;
}

// max over j outside B of |gamma_j| - mean_{i in B} |gamma_i|, relative to the latter.
inline double entry_gap(const Vector& g, const std::vector<bool>& tracked) {
    double ref = 0.0;
    int nb = 0;
    double best = -kInf;
    for (Index i = 0; i < g.size(); ++i)
        if (tracked[i]) { ref += std::abs(g[i]); ++nb; }
    ref /= nb;
    for (Index i = 0; i < g.size(); ++i)
        if (!tracked[i]) best = std::max(best, std::abs(g[i]) - ref);
    return best / ref;
}

} // namespace detail

inline StagePath solve_stages(const Problem& p) {
    if (!classify(p).supported())
        throw Error(ErrorKind::UnsupportedPrior, "prior satisfies none of the sufficient conditions");
    const Index k = p.dim();
    StagePath path;
    path.dim = k;
    std::vector<bool> tracked(k, false);
    Vector q = Vector::Zero(k);
    double t = 0.0;

    for (Index guard = 0; guard <= k; ++guard) {
        const std::vector<Index> b = detail::argmax_set(gamma(p, q), tracked);
        if (static_cast<Index>(b.size()) == k) {
            path.stages.push_back({t, kInf, b, p.alpha() / p.alpha().sum()});
            return path;
        }

        Vector at = transformed_weights(p, b);
        const double amax = at.cwiseAbs().maxCoeff();
        if (at.minCoeff() < -1e-9 * amax)
            throw Error(ErrorKind::AssumptionViolated, "negative transformed weight inside an attended set");
        at = at.cwiseMax(0.0);
        Vector mix = Vector::Zero(k);
        for (size_t a = 0; a < b.size(); ++a) mix[b[a]] = at[a] / at.sum();

        // March forward on a geometric schedule until some outside source
        // catches up, then bisect on the first sign change.
        Matrix info = p.precision();
        info.diagonal() += q;
        const double unit = 1.0 / (info.trace() / k);
        auto gap_at = [&](double s) { return detail::entry_gap(gamma(p, q + s * mix), tracked); };
        double lo = 0.0, hi = 0.0;
        bool found = false;
        for (double span = 1e-8 * unit; span < 1e14 * unit; span *= 2.0) {
            for (int sub = 1; sub <= 4; ++sub) {
                const double s = span * (1.0 + 0.25 * sub);
                if (gap_at(s) >= 0.0) {
                    hi = s;
                    found = true;
                    break;
                }
                lo = s;
            }
            if (found) break;
        }
        if (!found) throw Error(ErrorKind::NoConvergence, "no source catches up with the attended set");
        while (hi - lo > 1e-12 * (1.0 + t + hi)) {
            const double mid = 0.5 * (lo + hi);
            (gap_at(mid) >= 0.0 ? hi : lo) = mid;
        }

        path.stages.push_back({t, t + hi, b, mix});
        q += hi * mix;
        t += hi;
        // Sources tied at the crossing enter together.
        const Vector g = gamma(p, q);
        double ref = 0.0;
        for (Index i : b) ref += std::abs(g[i]);
        ref /= static_cast<double>(b.size());
        for (Index i = 0; i < k; ++i)
            if (!tracked[i] && std::abs(g[i]) >= ref * (1.0 - 1e-9)) tracked[i] = true;
    }
    throw Error(ErrorKind::NoConvergence, "stage recursion did not terminate");
}

} // namespace attn
