#pragma once

// Forced early attention on source 1 over [0, T], followed by optimal
// attention given the resulting posterior.

#include <attn/stage_solver.hpp>
#include <attn/variance_oracle.hpp>

#include <vector>

namespace attn {

namespace detail {

inline void check_manipulation(const Problem& p, double T) {
    if (!(std::isfinite(T) && T >= 0.0)) throw Error(ErrorKind::DomainError, "manipulation length must be finite and nonnegative");
    if (!classify(p).supported())
        throw Error(ErrorKind::UnsupportedPrior, "prior satisfies none of the sufficient conditions");
}

} // namespace detail

// Cumulative attention at t when the first T units are spent on source 1.
inline Vector manipulated_path(const Problem& p, double T, double t) {
    detail::check_manipulation(p, T);
    check_path_time(t);
    Vector floor = Vector::Zero(p.dim());
    if (t <= T) {
        floor[0] = t;
        return floor;
    }
    floor[0] = T;
    return constrained_t_optimal(p, t, floor).q_star;
}

// The same path as a stage sequence: one forced stage, then the optimal
// stages of the posterior problem shifted by T.
inline StagePath manipulated_stages(const Problem& p, double T) {
    detail::check_manipulation(p, T);
    if (T == 0.0) return solve_stages(p);
    Vector q = Vector::Zero(p.dim());
    q[0] = T;
    const Problem post(posterior_covariance(p, q), p.alpha());
    StagePath after = solve_stages(post);
    StagePath out;
    out.dim = p.dim();
    Vector e = Vector::Zero(p.dim());
    e[0] = 1.0;
    out.stages.push_back({0.0, T, {0}, e});
    for (Stage s : after.stages) {
        s.t_start += T;
        s.t_end += T;
        out.stages.push_back(std::move(s));
    }
    return out;
}

// First time the unmanipulated path has given source 1 at least T units.
inline double catch_up_time(const Problem& p, double T) {
    detail::check_manipulation(p, T);
    if (T == 0.0) return 0.0;
    const StagePath base = solve_stages(p);
    double n1 = 0.0;
    for (const Stage& s : base.stages) {
        const double rate = s.mixture[0];
        if (rate > 0.0) {
            const double reach = s.t_start + (T - n1) / rate;
            if (reach <= s.t_end) return reach;
        }
        if (!s.open_ended()) n1 += rate * (s.t_end - s.t_start);
    }
    throw Error(ErrorKind::NoConvergence, "source 1 never reaches the manipulated level");
}

struct ManipulationReport {
    double T = 0.0;
    double T_star = 0.0;
    std::vector<double> t_grid;
    // Row m: manipulated minus unmanipulated cumulative attention at t_grid[m].
    Matrix diffs;
    bool substitutes = false;
    // (source, t) where a source other than 1 ends up with more attention.
    std::vector<std::pair<Index, double>> increases;
};

inline ManipulationReport compare_cumulative(const Problem& p, double T, const std::vector<double>& t_grid) {
    detail::check_manipulation(p, T);
    ManipulationReport rep;
    rep.T = T;
    rep.T_star = catch_up_time(p, T);
    rep.t_grid = t_grid;
    rep.substitutes = classify(p).substitutes;
    const StagePath base = solve_stages(p);
    rep.diffs.resize(static_cast<Index>(t_grid.size()), p.dim());
    for (size_t m = 0; m < t_grid.size(); ++m) {
        const Vector d = manipulated_path(p, T, t_grid[m]) - n_of_t(base, t_grid[m]);
        rep.diffs.row(static_cast<Index>(m)) = d.transpose();
        for (Index i = 1; i < p.dim(); ++i)
            if (d[i] > 1e-9) rep.increases.emplace_back(i, t_grid[m]);
    }
    return rep;
}

} // namespace attn
