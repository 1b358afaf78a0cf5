#pragma once

// Gaussian attention model: prior N(mu, Sigma) over K unknowns, state
// omega = alpha' theta, and cumulative attention q >= 0 acting as added
// precision on each coordinate.

#include <attn/error.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>

namespace attn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Eigen::LLT<Matrix> factorize(const Matrix& a, const char* what) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success || !llt.matrixLLT().diagonal().allFinite() ||
        (llt.matrixLLT().diagonal().array() <= 0.0).any())
        throw Error(ErrorKind::NonPD, std::string(what) + " is not positive definite");
    return llt;
}

inline Matrix symmetric_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }

} // namespace detail

class Problem {
public:
    Problem(Matrix sigma, Vector alpha, std::optional<Vector> mu = std::nullopt) {
        const Index k = sigma.rows();
        if (k < 2 || sigma.cols() != k)
            throw Error(ErrorKind::InvalidProblem, "sigma must be a square matrix with K >= 2");
        if (alpha.size() != k)
            throw Error(ErrorKind::InvalidProblem, "alpha must have length K");
        if (!detail::all_finite(sigma) || !alpha.allFinite())
            throw Error(ErrorKind::InvalidProblem, "non-finite entry in sigma or alpha");
        if ((alpha.array() <= 0.0).any())
            throw Error(ErrorKind::InvalidProblem, "alpha must be strictly positive");
        const double scale = sigma.cwiseAbs().maxCoeff();
        if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw Error(ErrorKind::InvalidProblem, "sigma is not symmetric");
        sigma_ = detail::symmetric_part(sigma);
        alpha_ = std::move(alpha);
        if (mu) {
            if (mu->size() != k || !mu->allFinite())
                throw Error(ErrorKind::InvalidProblem, "mu must be a finite vector of length K");
            mu_ = std::move(*mu);
        } else {
            mu_ = Vector::Zero(k);
        }
        auto llt = detail::factorize(sigma_, "sigma");
        precision_ = detail::symmetric_part(llt.solve(Matrix::Identity(k, k)));
    }

    Index dim() const { return sigma_.rows(); }
    const Matrix& sigma() const { return sigma_; }
    const Vector& alpha() const { return alpha_; }
    const Vector& mu() const { return mu_; }
    const Matrix& precision() const { return precision_; }

    // Covariance of each source with the state, Sigma * alpha.
    Vector state_covariances() const { return sigma_ * alpha_; }
    double prior_variance() const { return alpha_.dot(sigma_ * alpha_); }

private:
    Matrix sigma_;
    Vector alpha_;
    Vector mu_;
    Matrix precision_;
};

class AttentionVector {
public:
    AttentionVector() = default;
    explicit AttentionVector(Vector q) : q_(std::move(q)) {
        if (!q_.allFinite() || (q_.array() < 0.0).any())
            throw Error(ErrorKind::DomainError, "attention must be finite and nonnegative");
    }

    const Vector& values() const { return q_; }
    double budget() const { return q_.sum(); }
    Index size() const { return q_.size(); }
    double operator[](Index i) const { return q_[i]; }
    operator const Vector&() const { return q_; }

private:
    Vector q_;
};

struct PosteriorState {
    Matrix cov;
    Vector mean;
    double state_variance = 0.0;
    Vector gamma;
};

struct GradHessian {
    Vector gradient;
    Matrix hessian;
};

namespace detail {

inline void check_attention(const Problem& p, const Vector& q) {
    if (q.size() != p.dim())
        throw Error(ErrorKind::WrongDimension, "attention vector has wrong length");
    if (!q.allFinite() || (q.array() < 0.0).any())
        throw Error(ErrorKind::DomainError, "attention must be finite and nonnegative");
}

inline Eigen::LLT<Matrix> posterior_factor(const Problem& p, const Vector& q) {
    check_attention(p, q);
    Matrix info = p.precision();
    info.diagonal() += q;
    return factorize(info, "posterior precision");
}

} // namespace detail

inline Matrix posterior_covariance(const Problem& p, const Vector& q) {
    auto llt = detail::posterior_factor(p, q);
    return detail::symmetric_part(llt.solve(Matrix::Identity(p.dim(), p.dim())));
}

// (Sigma^{-1} + diag q)^{-1} alpha; its squares are the marginal values of attention.
inline Vector gamma(const Problem& p, const Vector& q) {
    return detail::posterior_factor(p, q).solve(p.alpha());
}

inline double posterior_variance(const Problem& p, const Vector& q) {
    return p.alpha().dot(gamma(p, q));
}

inline GradHessian grad_hessian(const Problem& p, const Vector& q) {
    auto llt = detail::posterior_factor(p, q);
    Vector g = llt.solve(p.alpha());
    Matrix cov = detail::symmetric_part(llt.solve(Matrix::Identity(p.dim(), p.dim())));
    GradHessian out;
    out.gradient = -g.cwiseProduct(g);
    out.hessian = 2.0 * g.asDiagonal() * cov * g.asDiagonal();
    return out;
}

inline PosteriorState posterior_state(const Problem& p, const Vector& q) {
    auto llt = detail::posterior_factor(p, q);
    PosteriorState s;
    s.cov = detail::symmetric_part(llt.solve(Matrix::Identity(p.dim(), p.dim())));
    s.mean = p.mu();
    s.gamma = llt.solve(p.alpha());
    s.state_variance = p.alpha().dot(s.gamma);
    return s;
}

} // namespace attn
