#pragma once

// Brute-force minimizer of the posterior variance over attention budgets.
// Used as the reference against which the stage solver is checked.

#include <attn/gaussian_core.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace attn {

struct OracleResult {
    Vector q_star;
    double value = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct OracleOptions {
    double tol = 1e-10;
    double kkt_tol = 1e-8;
    int max_iter = 20000;
    int polish_every = 10;
    std::optional<Vector> start;
};

// Euclidean projection onto {r >= 0, sum r = budget}.
inline Vector project_simplex(const Vector& y, double budget) {
    const Index n = y.size();
    std::vector<double> u(y.data(), y.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (Index j = 0; j < n; ++j) {
        cumsum += u[j];
        const double cand = (cumsum - budget) / static_cast<double>(j + 1);
        if (u[j] - cand > 0.0) theta = cand;
    }
    return (y.array() - theta).max(0.0).matrix();
}

// Stationarity measure for min V s.t. sum q = t, q >= floor, relative to the
// largest marginal value among free coordinates. Coordinates within rounding
// of their bound count as bound.
inline double kkt_residual(const Problem& p, const Vector& q, const Vector& floor) {
    const Vector g = gamma(p, q).array().square().matrix();
    const double at_bound = 1e-13 * (1.0 + q.sum());
    double free_max = -std::numeric_limits<double>::infinity();
    double free_min = std::numeric_limits<double>::infinity();
    double bound_max = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < q.size(); ++i) {
        if (q[i] > floor[i] + at_bound) {
            free_max = std::max(free_max, g[i]);
            free_min = std::min(free_min, g[i]);
        } else {
            bound_max = std::max(bound_max, g[i]);
        }
    }
    if (free_max == -std::numeric_limits<double>::infinity()) return 0.0;
    const double spread = free_max - free_min;
    const double excess = std::max(0.0, bound_max - free_max);
    return std::max(spread, excess) / std::max(free_max, std::numeric_limits<double>::min());
}

namespace detail {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct FaceResult {
    Vector q;
    bool converged = false;
    int iterations = 0;
};

// Damped Newton for V on the face {q_j = floor_j off S, sum q = const},
// staying strictly inside q_S > floor_S.
inline FaceResult face_newton(const Problem& p, Vector q, const std::vector<Index>& face,
                              const Vector& floor, int max_iter = 100) {
    const Index m = static_cast<Index>(face.size());
    FaceResult out;
    double v = posterior_variance(p, q);
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        const GradHessian gh = grad_hessian(p, q);
        Vector g(m);
        Matrix h(m, m);
        for (Index a = 0; a < m; ++a) {
            g[a] = gh.gradient[face[a]];
            for (Index b = 0; b < m; ++b) h(a, b) = gh.hessian(face[a], face[b]);
        }
        const double scale = g.cwiseAbs().maxCoeff();
        if (g.maxCoeff() - g.minCoeff() <= 1e-13 * scale) {
            out.converged = true;
            break;
        }
        h.diagonal().array() += 1e-14 * std::max(1.0, h.diagonal().maxCoeff());
        Eigen::LDLT<Matrix> ldlt(h);
        const Vector hg = ldlt.solve(g);
        const Vector h1 = ldlt.solve(Vector::Ones(m));
        Vector d = -(hg - (hg.sum() / h1.sum()) * h1);
        double slope = g.dot(d);
        if (!(slope < 0.0) || !d.allFinite()) {
            // Fall back to the projected gradient direction on the face.
            d = -(g.array() - g.mean()).matrix();
            slope = g.dot(d);
            if (!(slope < 0.0)) {
                out.converged = g.maxCoeff() - g.minCoeff() <= 1e-9 * scale;
                break;
            }
        }
        double step = 1.0;
        for (Index a = 0; a < m; ++a)
            if (d[a] < 0.0) step = std::min(step, 0.995 * (q[face[a]] - floor[face[a]]) / -d[a]);
        // Once the predicted decrease is below the rounding level of V,
        // judge steps by the spread of marginal values instead.
        const bool flat = -slope <= 1e-12 * std::abs(v);
        auto spread_at = [&](const Vector& x) {
            const Vector gx = grad_hessian(p, x).gradient;
            double lo = kInfinity, hi = -kInfinity;
            for (Index a : face) { lo = std::min(lo, gx[a]); hi = std::max(hi, gx[a]); }
            return hi - lo;
        };
        const double spread = g.maxCoeff() - g.minCoeff();
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vector trial = q;
            for (Index a = 0; a < m; ++a) trial[face[a]] = std::max(floor[face[a]], q[face[a]] + step * d[a]);
            const double vt = posterior_variance(p, trial);
            if (flat ? spread_at(trial) < spread : vt <= v + 1e-4 * step * slope) {
                moved = (trial - q).cwiseAbs().maxCoeff() > 0.0;
                q = trial;
                v = vt;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            const Vector gg = grad_hessian(p, q).gradient;
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (Index a : face) { lo = std::min(lo, gg[a]); hi = std::max(hi, gg[a]); }
            out.converged = (hi - lo) <= 1e-9 * std::max(std::abs(lo), std::abs(hi));
            break;
        }
    }
    out.q = std::move(q);
    return out;
}

inline void check_budget(const Problem& p, double t, const Vector& floor) {
    if (floor.size() != p.dim())
        throw Error(ErrorKind::WrongDimension, "floor has wrong length");
    if (!std::isfinite(t) || t < 0.0)
        throw Error(ErrorKind::DomainError, "budget must be finite and nonnegative");
    if (!floor.allFinite() || (floor.array() < 0.0).any())
        throw Error(ErrorKind::DomainError, "floor must be finite and nonnegative");
    if (floor.sum() > t * (1.0 + 1e-15))
        throw Error(ErrorKind::InfeasibleFloor, "floor exceeds the attention budget");
}

inline OracleResult finish(const Problem& p, Vector q, const Vector& floor, int iterations) {
    OracleResult r;
    r.value = posterior_variance(p, q);
    r.kkt_residual = kkt_residual(p, q, floor);
    r.iterations = iterations;
    r.q_star = std::move(q);
    return r;
}

} // namespace detail

// Projected gradient descent (spectral step, Armijo backtracking) on
// {q >= floor, sum q = t}, with a Newton polish on the identified support.
inline OracleResult constrained_t_optimal(const Problem& p, double t, const Vector& floor,
                                          const OracleOptions& opt = {}) {
    detail::check_budget(p, t, floor);
    const Index k = p.dim();
    const double free_budget = std::max(0.0, t - floor.sum());
    if (free_budget == 0.0) return detail::finish(p, floor, floor, 0);

    auto project = [&](const Vector& y) -> Vector {
        return floor + project_simplex(y - floor, free_budget);
    };

    Vector q = opt.start ? project(*opt.start) : project(floor + Vector::Constant(k, free_budget / k));
    double v = posterior_variance(p, q);
    Vector grad = grad_hessian(p, q).gradient;
    double step = 1.0 / std::max(1e-300, grad.cwiseAbs().maxCoeff()) * std::max(1e-3, free_budget / k);

    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (it % opt.polish_every == 0) {
            std::vector<Index> face;
            for (Index i = 0; i < k; ++i)
                if (q[i] - floor[i] > 1e-13 * (1.0 + t)) face.push_back(i);
            auto fr = detail::face_newton(p, q, face, floor);
            // Coordinates driven onto the bound are snapped there exactly.
            for (Index i = 0; i < k; ++i)
                if (fr.q[i] - floor[i] <= 1e-13 * (1.0 + t)) fr.q[i] = floor[i];
            fr.q = project(fr.q);
            if (kkt_residual(p, fr.q, floor) <= opt.tol) return detail::finish(p, fr.q, floor, it);
            const double vf = posterior_variance(p, fr.q);
            if (vf < v) {
                q = fr.q;
                v = vf;
                grad = grad_hessian(p, q).gradient;
            }
        }

        if (kkt_residual(p, q, floor) <= opt.tol) break;
        Vector d = project(q - step * grad) - q;
        if (d.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + t)) {
            q += d;
            break;
        }
        const double slope = grad.dot(d);
        double lambda = 1.0;
        Vector q_new = q;
        double v_new = v;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            q_new = q + lambda * d;
            q_new = q_new.cwiseMax(floor);
            v_new = posterior_variance(p, q_new);
            if (v_new <= v + 1e-4 * lambda * slope) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
        Vector grad_new = grad_hessian(p, q_new).gradient;
        const Vector s = q_new - q;
        const Vector y = grad_new - grad;
        const double sy = s.dot(y);
        step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : step * 2.0;
        q = std::move(q_new);
        v = v_new;
        grad = std::move(grad_new);
    }

    OracleResult r = detail::finish(p, q, floor, it);
    if (r.kkt_residual > opt.kkt_tol)
        throw Error(ErrorKind::NoConvergence, "projected gradient did not reach the KKT tolerance");
    return r;
}

inline OracleResult t_optimal(const Problem& p, double t, const OracleOptions& opt = {}) {
    return constrained_t_optimal(p, t, Vector::Zero(p.dim()), opt);
}

// Exhaustive check: minimize on the relative interior of every face and keep
// the best candidate. Only practical for small K.
inline OracleResult active_set_optimal(const Problem& p, double t, const Vector& floor) {
    detail::check_budget(p, t, floor);
    const Index k = p.dim();
    if (k > 8) throw Error(ErrorKind::WrongDimension, "active-set enumeration supports K <= 8");
    const double free_budget = std::max(0.0, t - floor.sum());
    if (free_budget == 0.0) return detail::finish(p, floor, floor, 0);

    std::optional<OracleResult> best;
    int total = 0;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
        std::vector<Index> face;
        for (Index i = 0; i < k; ++i)
            if (mask & (1u << i)) face.push_back(i);
        Vector q = floor;
        for (Index i : face) q[i] += free_budget / static_cast<double>(face.size());
        auto fr = detail::face_newton(p, q, face, floor, 200);
        total += fr.iterations;
        if (!fr.converged) continue;
        bool interior = true;
        for (Index i : face)
            if (!(fr.q[i] - floor[i] > 1e-10 * (1.0 + t))) interior = false;
        if (!interior) continue;
        const double v = posterior_variance(p, fr.q);
        if (!best || v < best->value) best = detail::finish(p, fr.q, floor, 0);
    }
    if (!best) throw Error(ErrorKind::NoConvergence, "no face produced an interior minimizer");
    best->iterations = total;
    return *best;
}

struct MonotonicityViolation {
    Index source = 0;
    double t_from = 0.0;
    double t_to = 0.0;
    double drop = 0.0;
};

struct MonotonicityReport {
    std::vector<double> grid;
    std::vector<Vector> paths;
    std::vector<MonotonicityViolation> violations;

    bool monotone() const { return violations.empty(); }
};

// Flags coordinates of the optimal attention that fall by more than 1e-7
// between consecutive grid points.
inline MonotonicityReport monotonicity_scan(const Problem& p, const std::vector<double>& grid) {
    MonotonicityReport rep;
    rep.grid = grid;
    std::optional<Vector> prev;
    double prev_t = 0.0;
    for (double t : grid) {
        OracleOptions opt;
        if (prev && t >= prev_t) opt.start = *prev + Vector::Constant(p.dim(), (t - prev_t) / p.dim());
        auto res = t_optimal(p, t, opt);
        if (prev) {
            for (Index i = 0; i < p.dim(); ++i) {
                const double drop = (*prev)[i] - res.q_star[i];
                if (drop > 1e-7) rep.violations.push_back({i, prev_t, t, drop});
            }
        }
        prev = res.q_star;
        prev_t = t;
        rep.paths.push_back(res.q_star);
    }
    return rep;
}

} // namespace attn
