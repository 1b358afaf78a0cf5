#pragma once

// Structural conditions on the prior under which the optimal attention path
// has the nested-stage form computed by solve_stages().

#include <attn/gaussian_core.hpp>

#include <algorithm>

namespace attn {

enum class TriState { Pass, Fail, NotApplicable };
enum class Verdict { K2Theorem, GeneralTheorem, Unsupported };

inline const char* to_string(TriState s) {
    switch (s) {
    case TriState::Pass: return "pass";
    case TriState::Fail: return "fail";
    case TriState::NotApplicable: return "n/a";
    }
    return "?";
}

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::K2Theorem: return "K2Theorem";
    case Verdict::GeneralTheorem: return "GeneralTheorem";
    case Verdict::Unsupported: return "Unsupported";
    }
    return "?";
}

struct AssumptionReport {
    TriState k2_cov_sum = TriState::NotApplicable;
    bool substitutes = false;
    bool complements = false;
    bool diagonal_dominance = false;
    bool strict_diagonal_dominance = false;
    // Sigma_ii >= (2K-3)|Sigma_ij| for all i != j; implies diagonal dominance.
    bool suff_2K3 = false;
    // Smallest uniform extra precision making Sigma^{-1} + q I diagonally dominant.
    double eventual_dominance_shift = 0.0;
    Verdict verdict = Verdict::Unsupported;

    bool supported() const { return verdict != Verdict::Unsupported; }
};

namespace detail {

// Sign tests are made relative to the size of the matrix being tested.
inline double sign_tolerance(const Matrix& m) {
    return 1e-12 * (1.0 + m.diagonal().cwiseAbs().maxCoeff());
}

inline bool offdiag_all(const Matrix& m, bool nonpositive) {
    const double eps = sign_tolerance(m);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            if (i == j) continue;
            if (nonpositive ? m(i, j) > eps : m(i, j) < -eps) return false;
        }
    return true;
}

inline bool diagonally_dominant(const Matrix& m, bool strict) {
    const double eps = sign_tolerance(m);
    for (Index i = 0; i < m.rows(); ++i) {
        const double off = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
        const double margin = m(i, i) - off;
        if (strict ? margin <= eps : margin < -eps) return false;
    }
    return true;
}

} // namespace detail

inline double eventual_dominance_shift(const Matrix& precision) {
    double shift = 0.0;
    for (Index i = 0; i < precision.rows(); ++i) {
        const double off = precision.row(i).cwiseAbs().sum() - std::abs(precision(i, i));
        shift = std::max(shift, off - precision(i, i));
    }
    return shift;
}

inline AssumptionReport classify(const Problem& p) {
    const Matrix& s = p.sigma();
    const Matrix& prec = p.precision();
    const Index k = p.dim();
    const Vector cov = p.state_covariances();
    const double cov_eps = 1e-12 * (1.0 + s.diagonal().maxCoeff()) * p.alpha().sum();

    AssumptionReport r;
    if (k == 2) r.k2_cov_sum = (cov.sum() >= -cov_eps) ? TriState::Pass : TriState::Fail;

    r.substitutes = detail::offdiag_all(prec, true);
    r.complements = detail::offdiag_all(s, true) && (cov.array() >= -cov_eps).all();
    r.diagonal_dominance = detail::diagonally_dominant(prec, false);
    r.strict_diagonal_dominance = detail::diagonally_dominant(prec, true);

    const double eps = detail::sign_tolerance(s);
    const double factor = static_cast<double>(2 * k - 3);
    r.suff_2K3 = true;
    for (Index i = 0; i < k && r.suff_2K3; ++i)
        for (Index j = 0; j < k; ++j)
            if (i != j && s(i, i) < factor * std::abs(s(i, j)) - eps) {
                r.suff_2K3 = false;
                break;
            }

    r.eventual_dominance_shift = eventual_dominance_shift(prec);

    if (r.k2_cov_sum == TriState::Pass)
        r.verdict = Verdict::K2Theorem;
    else if (r.substitutes || r.complements || r.diagonal_dominance)
        r.verdict = Verdict::GeneralTheorem;
    else
        r.verdict = Verdict::Unsupported;
    return r;
}

} // namespace attn
