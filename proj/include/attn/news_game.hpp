#pragma once

// Two news sources report omega + phi_i b + noise with precision set by
// zeta_i; a reader allocates attention optimally and the sources compete for
// discounted readership while paying a quadratic cost for slant away from kappa.

#include <attn/gaussian_core.hpp>
#include <attn/parallel.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace attn {

struct NewsGameParams {
    double sigma_omega = 1.0;
    double sigma_b = 1.0;
    double lambda = 1.0;
    double kappa = 1.0;
    double r = 1.0;

    void validate() const {
        for (double x : {sigma_omega, sigma_b, lambda, kappa, r})
            if (!(std::isfinite(x) && x > 0.0)) throw Error(ErrorKind::InvalidParam, "news game parameters must be positive");
    }
};

namespace detail {

inline void check_profiles(const Vector& phi, const Vector& zeta) {
    if (phi.size() != 2 || zeta.size() != 2) throw Error(ErrorKind::WrongDimension, "two sources expected");
    if (!phi.allFinite() || !zeta.allFinite() || (phi.array() <= 0.0).any() || (zeta.array() <= 0.0).any())
        throw Error(ErrorKind::InvalidParam, "slants and precisions must be positive");
}

} // namespace detail

// Rescaled reports theta_i = (omega + phi_i b) / zeta_i as a Gaussian attention problem.
inline Problem transform_to_core(const NewsGameParams& g, const Vector& phi, const Vector& zeta) {
    g.validate();
    detail::check_profiles(phi, zeta);
    const double w = g.sigma_omega * g.sigma_omega, vb = g.sigma_b * g.sigma_b;
    Matrix s(2, 2);
    s(0, 0) = (w + phi[0] * phi[0] * vb) / (zeta[0] * zeta[0]);
    s(1, 1) = (w + phi[1] * phi[1] * vb) / (zeta[1] * zeta[1]);
    s(0, 1) = s(1, 0) = (w - phi[0] * phi[1] * vb) / (zeta[0] * zeta[1]);
    Vector a(2);
    a[0] = zeta[0] * phi[1] / (phi[0] + phi[1]);
    a[1] = zeta[1] * phi[0] / (phi[0] + phi[1]);
    return Problem(s, a);
}

struct ReaderAttention {
    double t1_star = 0.0;
    Index first_source = 0;
    Vector shares;
};

// The more precise source is read exclusively until t1*, after which the
// reader splits attention in fixed long-run shares.
inline ReaderAttention reader_attention(const NewsGameParams& g, const Vector& phi, const Vector& zeta) {
    g.validate();
    detail::check_profiles(phi, zeta);
    ReaderAttention out;
    out.first_source = zeta[0] <= zeta[1] ? 0 : 1;
    const Index i = out.first_source, j = 1 - i;
    out.t1_star = zeta[i] * (zeta[j] - zeta[i]) / (g.sigma_b * g.sigma_b * phi[i] * (phi[0] + phi[1]));
    out.shares.resize(2);
    const double d = zeta[0] * phi[1] + zeta[1] * phi[0];
    out.shares << zeta[0] * phi[1] / d, zeta[1] * phi[0] / d;
    return out;
}

// Discounted readership minus slant cost, indexed like the inputs.
inline Vector source_payoffs(const NewsGameParams& g, const Vector& phi, const Vector& zeta) {
    const ReaderAttention ra = reader_attention(g, phi, zeta);
    const Index i = ra.first_source, j = 1 - i;
    const double late = std::exp(-g.r * ra.t1_star) * ra.shares[j];
    Vector u(2);
    u[i] = 1.0 - late - g.lambda * std::pow(g.kappa - phi[i], 2);
    u[j] = late - g.lambda * std::pow(g.kappa - phi[j], 2);
    return u;
}

struct NewsOutcome {
    double phi_star = 0.0;
    double zeta_star = 0.0;
    double t1_star = 0.0;
    Vector shares;
    Vector payoffs;
    // The symmetric profile is known to be an equilibrium when lambda kappa^2 >= 1.6.
    bool existence_guaranteed = false;
};

inline NewsOutcome equilibrium(const NewsGameParams& g) {
    g.validate();
    const double lk2 = g.lambda * g.kappa * g.kappa;
    const double disc = g.kappa * g.kappa - 1.0 / (2.0 * g.lambda);
    if (disc < 0.0) throw Error(ErrorKind::InvalidParam, "no symmetric candidate when lambda kappa^2 < 1/2");
    NewsOutcome out;
    const double root = g.kappa + std::sqrt(disc);
    out.phi_star = 0.5 * root;
    out.zeta_star = g.sigma_b / (2.0 * std::sqrt(g.r)) * root;
    out.t1_star = 0.0;
    out.shares = Vector::Constant(2, 0.5);
    out.payoffs = Vector::Constant(2, 0.5 - g.lambda * std::pow(g.kappa - out.phi_star, 2));
    out.existence_guaranteed = lk2 >= 1.6;
    return out;
}

struct DeviationGrid {
    int n_phi = 200;
    int n_zeta = 200;
    // Slant grid covers (0, phi_range * kappa]; precision grid is logarithmic
    // on [zeta_min_fraction, zeta_range] times zeta*.
    double phi_range = 3.0;
    double zeta_range = 3.0;
    double zeta_min_fraction = 1e-3;
};

struct EquilibriumCertificate {
    NewsOutcome outcome;
    double max_gain[2] = {0.0, 0.0};
    double best_phi[2] = {0.0, 0.0};
    double best_zeta[2] = {0.0, 0.0};

    double worst_gain() const { return std::max(max_gain[0], max_gain[1]); }
};

// Largest unilateral gain from deviating to any grid profile while the
// other source stays at the symmetric candidate.
inline EquilibriumCertificate verify_equilibrium(const NewsGameParams& g, const DeviationGrid& grid = {}) {
    if (grid.n_phi < 1 || grid.n_zeta < 2 || !(grid.phi_range > 0.0) || !(grid.zeta_range > grid.zeta_min_fraction) ||
        !(grid.zeta_min_fraction > 0.0))
        throw Error(ErrorKind::InvalidConfig, "invalid deviation grid");
    EquilibriumCertificate cert;
    cert.outcome = equilibrium(g);
    const double ps = cert.outcome.phi_star, zs = cert.outcome.zeta_star;
    const double base = cert.outcome.payoffs[0];

    std::vector<double> zetas(grid.n_zeta);
    const double lz0 = std::log(grid.zeta_min_fraction * zs), lz1 = std::log(grid.zeta_range * zs);
    for (int j = 0; j < grid.n_zeta; ++j) zetas[j] = std::exp(lz0 + (lz1 - lz0) * j / (grid.n_zeta - 1));

    for (Index who = 0; who < 2; ++who) {
        std::vector<double> row_gain(grid.n_phi), row_zeta(grid.n_phi);
        parallel_for(static_cast<size_t>(grid.n_phi), [&](size_t i) {
            const double phi_dev = grid.phi_range * g.kappa * static_cast<double>(i + 1) / grid.n_phi;
            double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
            for (double z : zetas) {
                Vector phi = Vector::Constant(2, ps), zeta = Vector::Constant(2, zs);
                phi[who] = phi_dev;
                zeta[who] = z;
                const double gain = source_payoffs(g, phi, zeta)[who] - base;
                if (gain > best) {
                    best = gain;
                    arg = z;
                }
            }
            row_gain[i] = best;
            row_zeta[i] = arg;
        });
        cert.max_gain[who] = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid.n_phi; ++i)
            if (row_gain[i] > cert.max_gain[who]) {
                cert.max_gain[who] = row_gain[i];
                cert.best_phi[who] = grid.phi_range * g.kappa * (i + 1) / grid.n_phi;
                cert.best_zeta[who] = row_zeta[i];
            }
    }
    return cert;
}

} // namespace attn
