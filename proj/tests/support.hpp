#pragma once

// Random prior generators and small reference implementations shared by the
// unit and acceptance suites.

#include <attn/gaussian_core.hpp>

#include <Eigen/Eigenvalues>

#include <random>

namespace attn::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector random_alpha(Rng& rng, Index k) {
    Vector a(k);
    for (Index i = 0; i < k; ++i) a[i] = uniform(rng, 0.2, 2.0);
    return a;
}

inline Matrix random_spd(Rng& rng, Index k) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) a(i, j) = n(rng);
    Matrix s = a * a.transpose() / static_cast<double>(k);
    s.diagonal().array() += uniform(rng, 0.1, 1.0);
    return s;
}

inline Matrix inverse_spd(const Matrix& m) {
    Matrix inv = m.llt().solve(Matrix::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
}

// Nonpositive off-diagonal precision that is usually not diagonally dominant.
inline Problem random_substitutes(Rng& rng, Index k) {
    Matrix nn = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j) nn(i, j) = nn(j, i) = uniform(rng, 0.0, 1.0);
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(nn).eigenvalues().maxCoeff();
    Matrix prec = -nn;
    for (Index i = 0; i < k; ++i) prec(i, i) = lmax * uniform(rng, 1.05, 1.6) + uniform(rng, 0.0, 0.3);
    return Problem(inverse_spd(prec), random_alpha(rng, k));
}

// Nonpositive off-diagonal covariance with Sigma * alpha >= 0.
inline Problem random_complements(Rng& rng, Index k) {
    const Vector alpha = random_alpha(rng, k);
    Matrix nn = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j) nn(i, j) = nn(j, i) = uniform(rng, 0.0, 1.0);
    const Vector na = nn * alpha;
    Matrix s = -nn;
    for (Index i = 0; i < k; ++i) s(i, i) = (na[i] + uniform(rng, 0.05, 1.0)) / alpha[i];
    return Problem(s, alpha);
}

// Diagonally dominant precision with mixed-sign off-diagonals.
inline Problem random_diag_dominant(Rng& rng, Index k) {
    Matrix prec = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j) prec(i, j) = prec(j, i) = uniform(rng, -1.0, 1.0);
    for (Index i = 0; i < k; ++i) prec(i, i) = prec.row(i).cwiseAbs().sum() + uniform(rng, 0.0, 0.5);
    return Problem(inverse_spd(prec), random_alpha(rng, k));
}

inline Problem random_problem(Rng& rng, Index k) { return Problem(random_spd(rng, k), random_alpha(rng, k)); }

// Covariance form of the posterior, valid for strictly positive attention.
inline Matrix posterior_covariance_dual(const Matrix& sigma, const Vector& q) {
    Matrix m = sigma;
    m.diagonal() += q.cwiseInverse();
    return sigma - sigma * m.llt().solve(sigma);
}

} // namespace attn::testing
