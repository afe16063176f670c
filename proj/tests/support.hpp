#pragma once

// Shared fixtures and independent numerical oracles for the test suites.
// Nothing here calls the eigen-based kernels of the library, so agreement
// with them is a genuine cross-check.

#include "driftfilter/asymptotics.hpp"
#include "driftfilter/filters.hpp"
#include "driftfilter/model.hpp"
#include "driftfilter/portfolio.hpp"
#include "driftfilter/riccati.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using driftfilter::Matrix;
using driftfilter::SymMatrix;
using driftfilter::Vector;

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double x : r) m(i, j++) = x;
        ++i;
    }
    return m;
}

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline SymMatrix sym(std::initializer_list<std::initializer_list<double>> rows) { return SymMatrix(mat(rows)); }

inline SymMatrix scalar_sym(double x) { return SymMatrix(Matrix::Constant(1, 1, x)); }

/// Parameters of the three-stock example used for the value table and filter realizations.
inline driftfilter::MarketModel example61() {
    driftfilter::MarketModel m;
    m.alpha = sym({{2, 1, -1}, {1, 2, -1}, {-1, -1, 2}});
    m.beta = mat({{.3, .5, .1}, {.5, .2, .2}, {.1, .2, .2}});
    m.sigma = mat({{.30, .08, .05}, {.08, .40, .05}, {.05, .05, .35}});
    m.sigma0 = sym({{.2, .1, .1}, {.1, .3, .1}, {.1, .1, .2}});
    m.delta = vec({.05, .10, .08});
    m.m0 = m.delta;
    m.rate = driftfilter::RateFunction::constant(0.0);
    m.horizon = 1.0;
    return m;
}

inline SymMatrix example61_gamma() { return sym({{.80, .32, .16}, {.32, .72, .24}, {.16, .24, .64}}); }

inline driftfilter::MarketModel example31() {
    driftfilter::MarketModel m;
    m.alpha = sym({{0.11, -0.48, 0.65}, {-0.48, 2.28, -3.06}, {0.65, -3.06, 4.18}});
    m.beta = mat({{0.87, -0.53, -0.22}, {-0.53, 0.87, -0.02}, {-0.22, -0.02, 0.29}});
    m.sigma = mat({{0.09, -0.13, 0.16}, {0.14, 0.03, -0.17}, {0.05, -0.13, -0.06}});
    m.sigma0 = sym({{0.16, 0.12, 0.01}, {0.12, 0.19, -0.04}, {0.01, -0.04, 0.27}});
    m.delta = vec({0, 0, 0});
    m.m0 = m.delta;
    m.horizon = 1.0;
    return m;
}

inline SymMatrix example31_gamma() { return sym({{1.14, 0.15, 0.58}, {0.15, 1.67, -0.73}, {0.58, -0.73, 2.67}}); }

inline driftfilter::MarketModel scalar_model(double a, double b, double s, double sigma0, double horizon = 1.0) {
    driftfilter::MarketModel m;
    m.alpha = scalar_sym(a);
    m.beta = Matrix::Constant(1, 1, b);
    m.sigma = Matrix::Constant(1, 1, s);
    m.sigma0 = scalar_sym(sigma0);
    m.delta = vec({0.0});
    m.m0 = m.delta;
    m.horizon = horizon;
    return m;
}

// ---------------------------------------------------------------- oracles

/// e^{A} by scaling and squaring of a truncated Taylor series.
inline Matrix taylor_expm(const Matrix& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
    const Matrix x = a / std::ldexp(1.0, squarings);
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// int_0^h e^{-alpha s} beta beta^T e^{-alpha s} ds by composite Gauss-Legendre.
inline Matrix quadrature_noise_cov(const Matrix& alpha, const Matrix& beta, double h, int panels, int nodes = 32) {
    const auto [x, w] = gauss_legendre(nodes);
    const Matrix bbt = beta * beta.transpose();
    Matrix sum = Matrix::Zero(alpha.rows(), alpha.cols());
    const double len = h / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = p * len;
        for (int i = 0; i < nodes; ++i) {
            const double s = a + 0.5 * len * (x[i] + 1.0);
            const Matrix e = taylor_expm(-alpha * s);
            sum += 0.5 * len * w[i] * e * bbt * e;
        }
    }
    return sum;
}

/// Eigenvalues of a symmetric 3x3 matrix from its characteristic polynomial (trigonometric form), ascending.
inline std::array<double, 3> sym3_eigenvalues(const Matrix& a) {
    const double q = a.trace() / 3.0;
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    std::array<double, 3> out{e1, e2, e3};
    std::sort(out.begin(), out.end());
    return out;
}

/// Solves a 3x3 system with the explicit adjugate formula.
inline Vector adjugate_solve(const Matrix& a, const Vector& b) {
    Matrix adj(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            adj(i, j) = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
        }
    }
    const double det = a(0, 0) * adj(0, 0) + a(0, 1) * adj(1, 0) + a(0, 2) * adj(2, 0);
    return adj * b / det;
}

/// Closed-form scalar Riccati solution of g' = b^2 - 2 a g - g^2 / s^2.
inline double scalar_riccati(double a, double b, double s, double g0, double t) {
    const double root = std::sqrt(a * a + b * b / (s * s));
    const double gp = s * s * (-a + root);
    const double gm = s * s * (-a - root);
    const double u0 = (g0 - gp) / (g0 - gm);
    const double u = u0 * std::exp(-(gp - gm) * t / (s * s));
    return (gp - u * gm) / (1.0 - u);
}

/// Plain midpoint-rule Riccati integrator (explicit, second order) used as a slow reference.
inline Matrix midpoint_riccati(const Matrix& alpha, const Matrix& bbt, const Matrix& prec, Matrix g, double t, int steps) {
    const double h = t / steps;
    auto f = [&](const Matrix& x) -> Matrix { return -alpha * x - x * alpha + bbt - x * prec * x; };
    for (int i = 0; i < steps; ++i) g = g + h * f(g + 0.5 * h * f(g));
    return g;
}

// ---------------------------------------------------------------- random configurations

class ConfigSampler {
public:
    explicit ConfigSampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Matrix gaussian(int r, int c) {
        std::normal_distribution<double> n;
        Matrix m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = n(rng_);
        return m;
    }

    Matrix orthogonal(int d) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(gaussian(d, d)));
        return Matrix(qr.householderQ());
    }

    SymMatrix spd(int d, double lo, double hi) {
        const Matrix q = orthogonal(d);
        Vector ev(d);
        for (int i = 0; i < d; ++i) ev(i) = uniform(lo, hi);
        return SymMatrix(q * ev.asDiagonal() * q.transpose());
    }

    SymMatrix psd(int d, double scale) { return driftfilter::gram(gaussian(d, d) * scale); }

    /// A model satisfying every standing assumption, with moderate conditioning.
    driftfilter::MarketModel model(int d) {
        driftfilter::MarketModel m;
        m.alpha = spd(d, 0.3, 3.0);
        m.beta = gaussian(d, d) * 0.4 + Matrix::Identity(d, d) * 0.5;
        do {
            m.sigma = gaussian(d, d) * 0.1 + Matrix::Identity(d, d) * 0.3;
        } while (driftfilter::min_eig(driftfilter::gram(m.sigma)) < 0.01);
        m.sigma0 = psd(d, 0.3);
        m.delta = gaussian(d, 1) * 0.05;
        m.m0 = m.delta;
        m.horizon = 1.0;
        return m;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace testing
