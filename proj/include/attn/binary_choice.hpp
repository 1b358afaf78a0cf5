#pragma once

// Two-source binary choice: the decision maker learns omega = a1 theta1 +
// a2 theta2 along the optimal attention path, pays a flow cost c, and stops
// to choose the sign of the posterior mean.

#include <attn/assumptions.hpp>
#include <attn/gaussian_core.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace attn {

class BinaryChoiceProblem {
public:
    BinaryChoiceProblem(const Matrix& sigma, const Vector& weights, double cost) : cost_(cost) {
        if (sigma.rows() != 2 || sigma.cols() != 2 || weights.size() != 2)
            throw Error(ErrorKind::WrongDimension, "binary choice needs exactly two sources");
        if (!(std::isfinite(cost) && cost > 0.0)) throw Error(ErrorKind::InvalidParam, "cost must be positive");
        const Problem p(sigma, weights);
        if (classify(p).k2_cov_sum != TriState::Pass)
            throw Error(ErrorKind::AssumptionViolated, "covariances with the state sum to a negative number");
        const Vector cov = p.state_covariances();
        sigma_ = p.sigma();
        weights_ = p.alpha();
        if (cov[0] < cov[1]) {
            relabeled_ = true;
            std::swap(sigma_(0, 0), sigma_(1, 1));
            std::swap(weights_[0], weights_[1]);
        }
    }

    // Internally source 1 is the one more correlated with the state.
    const Matrix& sigma() const { return sigma_; }
    const Vector& weights() const { return weights_; }
    double cost() const { return cost_; }
    bool relabeled() const { return relabeled_; }

    double det() const { return sigma_(0, 0) * sigma_(1, 1) - sigma_(0, 1) * sigma_(1, 0); }
    double cov1() const { return weights_[0] * sigma_(0, 0) + weights_[1] * sigma_(0, 1); }
    double cov2() const { return weights_[0] * sigma_(1, 0) + weights_[1] * sigma_(1, 1); }
    double prior_variance() const { return weights_.dot(sigma_ * weights_); }

private:
    Matrix sigma_;
    Vector weights_;
    double cost_;
    bool relabeled_ = false;
};

inline double switch_time(const BinaryChoiceProblem& b) {
    return (b.cov1() - b.cov2()) / (b.weights()[1] * b.det());
}

// Posterior variance of the state along the optimal path.
inline double posterior_variance_path(const BinaryChoiceProblem& b, double t) {
    if (!(std::isfinite(t) && t >= 0.0)) throw Error(ErrorKind::DomainError, "time must be finite and nonnegative");
    const Matrix& s = b.sigma();
    const double a1 = b.weights()[0], a2 = b.weights()[1], det = b.det();
    if (t <= switch_time(b))
        return (b.prior_variance() + a2 * a2 * det * t) / (1.0 + s(0, 0) * t);
    const double sum = a1 + a2;
    return sum * sum * det / (s(0, 0) + s(1, 1) - 2.0 * s(0, 1) + det * t);
}

struct HittingTime {
    double time = 0.0;
    double derivative = 0.0;
};

// Time at which the cumulative variance reduction reaches v, and dT/dv.
inline HittingTime hitting_time(const BinaryChoiceProblem& b, double v) {
    const double s0 = b.prior_variance();
    if (!(std::isfinite(v) && v >= 0.0 && v < s0))
        throw Error(ErrorKind::DomainError, "variance reduction must lie in [0, prior variance)");
    const Matrix& s = b.sigma();
    const double v_switch = s0 - posterior_variance_path(b, switch_time(b));
    if (v <= v_switch) {
        const double c1 = b.cov1();
        const double den = c1 * c1 - s(0, 0) * v;
        return {v / den, c1 * c1 / (den * den)};
    }
    const double sum = b.weights().sum();
    const double gap = s0 - v;
    return {sum * sum / gap - (s(0, 0) + s(1, 1) - 2.0 * s(0, 1)) / b.det(), sum * sum / (gap * gap)};
}

inline double accuracy_from_ratio(double boundary_over_sd) { return 0.5 * std::erfc(-boundary_over_sd / std::sqrt(2.0)); }

struct DpGrid {
    // Lattice cells per posterior standard deviation; the cell size is
    // halved each time the posterior standard deviation halves.
    int cells_per_sigma = 200;
    double range_sigmas = 6.0;
    // Variance decrement per step relative to the squared cell size (<= 1).
    double variance_ratio = 2.0 / 3.0;
    // Stop the recursion once the posterior variance falls below this fraction of the prior.
    double truncation = 1e-3;
};

struct StoppingSolution {
    std::vector<double> time;
    std::vector<double> variance;
    std::vector<double> boundary;
    std::vector<double> accuracy;
    // Lattice spacing in y used at each row.
    std::vector<double> cell;
    double initial_cell = 0.0;
    double accuracy_step(size_t j) const {
        const double sd = std::sqrt(variance[j]);
        return accuracy_from_ratio((boundary[j] + cell[j]) / sd) - accuracy[j];
    }
    DpGrid grid;
};

namespace detail {

inline void validate(const DpGrid& g) {
    if (g.cells_per_sigma < 10 || !(g.range_sigmas > 0.0) || !(g.variance_ratio > 0.0 && g.variance_ratio <= 1.0) ||
        !(g.truncation > 0.0 && g.truncation < 1.0))
        throw Error(ErrorKind::InvalidConfig, "invalid stopping-boundary grid");
}

} // namespace detail

// Backward induction for sup E[max(Y_tau, 0) - c tau] where the posterior mean
// Y is a Brownian motion run on the clock of variance reduction. Returns the
// symmetric boundary k*(t): stop once |Y_t| >= k*(t).
inline StoppingSolution solve_stopping_boundary(const BinaryChoiceProblem& b, const DpGrid& grid = {}) {
    detail::validate(grid);
    const double s0 = b.prior_variance();
    const double v_end = s0 * (1.0 - grid.truncation);
    const int n0 = grid.cells_per_sigma;
    const int m = static_cast<int>(std::ceil(grid.range_sigmas * n0));
    const int width = 2 * m + 1;

    struct Block {
        double v_lo, v_hi, dy;
    };
    std::vector<Block> blocks;
    for (double var = s0; s0 - var < v_end; var *= 0.25)
        blocks.push_back({s0 - var, std::min(v_end, s0 - 0.25 * var), std::sqrt(var) / n0});

    std::vector<double> vs, ks, dys;
    std::vector<double> w(width), c(width), fine;
    const double cost = b.cost();

    for (int bi = static_cast<int>(blocks.size()) - 1; bi >= 0; --bi) {
        const Block& blk = blocks[bi];
        auto y_of = [&](int i) { return (i - m) * blk.dy; };
        if (bi == static_cast<int>(blocks.size()) - 1) {
            for (int i = 0; i < width; ++i) w[i] = std::max(y_of(i), 0.0);
            vs.push_back(v_end);
            ks.push_back(0.0);
            dys.push_back(blk.dy);
        } else {
            // The finer grid of the later block contains every coarse node.
            for (int i = 0; i < width; ++i) {
                const int f = 2 * (i - m) + m;
                w[i] = (f >= 0 && f < width) ? fine[f] : std::max(y_of(i), 0.0);
            }
        }
        const int steps = static_cast<int>(std::ceil((blk.v_hi - blk.v_lo) / (grid.variance_ratio * blk.dy * blk.dy)));
        const double dv = (blk.v_hi - blk.v_lo) / steps;
        const double pu = dv / (2.0 * blk.dy * blk.dy);
        const double stay = 1.0 - 2.0 * pu;
        const double lo_edge = std::max(y_of(-1), 0.0);
        const double hi_edge = std::max(y_of(width), 0.0);
        double t_next = hitting_time(b, blk.v_hi).time;
        for (int n = steps - 1; n >= 0; --n) {
            const double v = blk.v_lo + n * dv;
            const double t_now = hitting_time(b, v).time;
            const double flow = cost * (t_next - t_now);
            t_next = t_now;
            for (int i = 0; i < width; ++i) {
                const double up = i + 1 < width ? w[i + 1] : hi_edge;
                const double dn = i > 0 ? w[i - 1] : lo_edge;
                c[i] = pu * (up + dn) + stay * w[i] - flow;
            }
            if (c[0] > 0.0)
                throw Error(ErrorKind::GridTooCoarse, "stopping boundary lies outside the lattice range");
            for (int i = 0; i < width; ++i) w[i] = std::max(c[i], std::max(y_of(i), 0.0));

            // Below zero the stopping payoff is 0, so the boundary is the
            // first sign change of the continuation value.
            double k = 0.0;
            if (c[m] > 0.0) {
                int i = m - 1;
                while (i >= 0 && c[i] > 0.0) --i;
                const double frac = c[i + 1] / (c[i + 1] - c[i]);
                k = -(y_of(i + 1) - frac * blk.dy);
            }
            vs.push_back(v);
            ks.push_back(k);
            dys.push_back(blk.dy);
        }
        fine = w;
    }

    StoppingSolution sol;
    sol.grid = grid;
    sol.initial_cell = blocks.front().dy;
    const size_t n = vs.size();
    sol.time.resize(n);
    sol.variance.resize(n);
    sol.boundary.resize(n);
    sol.accuracy.resize(n);
    sol.cell.resize(n);
    for (size_t j = 0; j < n; ++j) {
        const size_t src = n - 1 - j;
        const double v = vs[src];
        sol.time[j] = hitting_time(b, v).time;
        sol.variance[j] = s0 - v;
        sol.boundary[j] = ks[src];
        sol.cell[j] = dys[src];
        sol.accuracy[j] = accuracy_from_ratio(ks[src] / std::sqrt(s0 - v));
    }
    return sol;
}

namespace detail {

struct Bracket {
    size_t lo, hi;
    double frac;
};

inline Bracket locate(const StoppingSolution& sol, double t) {
    if (sol.time.empty()) throw Error(ErrorKind::InvalidParam, "empty stopping solution");
    if (!(t >= 0.0)) throw Error(ErrorKind::DomainError, "time must be nonnegative");
    const size_t last = sol.time.size() - 1;
    if (t >= sol.time[last]) return {last, last, 0.0};
    const size_t hi = static_cast<size_t>(std::upper_bound(sol.time.begin(), sol.time.end(), t) - sol.time.begin());
    return {hi - 1, hi, (t - sol.time[hi - 1]) / (sol.time[hi] - sol.time[hi - 1])};
}

} // namespace detail

inline double boundary_at(const StoppingSolution& sol, double t) {
    const auto b = detail::locate(sol, t);
    return sol.boundary[b.lo] + b.frac * (sol.boundary[b.hi] - sol.boundary[b.lo]);
}

// Probability of a correct choice when stopping at time t.
inline double choice_accuracy(const StoppingSolution& sol, double t) {
    const auto b = detail::locate(sol, t);
    const double var = sol.variance[b.lo] + b.frac * (sol.variance[b.hi] - sol.variance[b.lo]);
    return accuracy_from_ratio(boundary_at(sol, t) / std::sqrt(var));
}

} // namespace attn
