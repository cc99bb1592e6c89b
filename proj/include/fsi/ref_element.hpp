#pragma once

/// @file ref_element.hpp
/// @brief Lagrange bases on the reference triangle and quadrature rules.
///
/// The reference triangle has vertices (0,0), (1,0), (0,1). Local node
/// order for order m: the three vertices, then the nodes of edge 0 (v0->v1),
/// edge 1 (v1->v2), edge 2 (v2->v0), then interior nodes row by row.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fsi/error.hpp"

namespace fsi {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Number of Lagrange nodes of order m on a triangle.
constexpr int lagrange_node_count(int m) { return (m + 1) * (m + 2) / 2; }

/// Equispaced Lagrange basis of order m (1..3) on the reference triangle.
class RefBasis {
public:
    explicit RefBasis(int m) : order_(m) {
        if (m < 1 || m > 3)
            throw Error("RefBasis: unsupported order " + std::to_string(m));
        build_lattice();
    }

    int order() const { return order_; }
    int size() const { return static_cast<int>(index_.size()); }

    /// Reference coordinates of local node p.
    Vec2 node(int p) const {
        const auto& a = index_[p];
        return Vec2(double(a[1]) / order_, double(a[2]) / order_);
    }

    /// Basis values at xh; out has size() entries.
    void values(const Vec2& xh, double* out) const {
        const std::array<double, 3> lam{1.0 - xh[0] - xh[1], xh[0], xh[1]};
        for (int p = 0; p < size(); ++p) {
            double v = 1.0;
            for (int k = 0; k < 3; ++k) v *= factor(index_[p][k], lam[k]);
            out[p] = v;
        }
    }

    /// Basis gradients w.r.t. reference coordinates; out[2p], out[2p+1].
    void gradients(const Vec2& xh, double* out) const {
        const std::array<double, 3> lam{1.0 - xh[0] - xh[1], xh[0], xh[1]};
        // d lambda_k / d (x,y)
        static constexpr double dlam[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
        for (int p = 0; p < size(); ++p) {
            std::array<double, 3> f{}, df{};
            for (int k = 0; k < 3; ++k) {
                f[k] = factor(index_[p][k], lam[k]);
                df[k] = factor_derivative(index_[p][k], lam[k]);
            }
            double gx = 0.0, gy = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double others = f[(k + 1) % 3] * f[(k + 2) % 3];
                gx += df[k] * dlam[k][0] * others;
                gy += df[k] * dlam[k][1] * others;
            }
            out[2 * p] = gx;
            out[2 * p + 1] = gy;
        }
    }

    std::vector<double> values(const Vec2& xh) const {
        std::vector<double> v(size());
        values(xh, v.data());
        return v;
    }

    std::vector<double> gradients(const Vec2& xh) const {
        std::vector<double> g(2 * size());
        gradients(xh, g.data());
        return g;
    }

private:
    // prod_{l<a} (m*lam - l)/(l+1)
    double factor(int a, double lam) const {
        double v = 1.0;
        for (int l = 0; l < a; ++l) v *= (order_ * lam - l) / (l + 1);
        return v;
    }

    double factor_derivative(int a, double lam) const {
        double d = 0.0;
        for (int j = 0; j < a; ++j) {
            double term = double(order_) / (j + 1);
            for (int l = 0; l < a; ++l)
                if (l != j) term *= (order_ * lam - l) / (l + 1);
            d += term;
        }
        return d;
    }

    void build_lattice() {
        const int m = order_;
        // barycentric multi-indices (a0, a1, a2), a0 + a1 + a2 = m
        index_.push_back({m, 0, 0});
        index_.push_back({0, m, 0});
        index_.push_back({0, 0, m});
        for (int k = 1; k < m; ++k) index_.push_back({m - k, k, 0});
        for (int k = 1; k < m; ++k) index_.push_back({0, m - k, k});
        for (int k = 1; k < m; ++k) index_.push_back({k, 0, m - k});
        for (int j = 1; j < m; ++j)
            for (int i = 1; i + j < m; ++i) index_.push_back({m - i - j, i, j});
    }

    int order_;
    std::vector<std::array<int, 3>> index_;
};

/// Quadrature rule on the reference triangle (weights sum to 1/2).
struct QuadRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int degree = 0;

    int size() const { return static_cast<int>(points.size()); }
};

/// Gauss-Legendre rule with n points on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw Error("gauss_legendre: need n >= 1");
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        // Newton on P_n starting from the Chebyshev-like guess
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Quadrature on the reference triangle exact for polynomials up to `degree`.
///
/// Degrees 1, 2 and 3..5 use fully symmetric closed-form rules (centroid,
/// three interior points, seven-point Radon). Higher degrees use the
/// collapsed (Duffy) tensor product of Gauss-Legendre rules.
inline QuadRule quad_rule(int degree) {
    if (degree < 1 || degree > 12)
        throw Error("quad_rule: unsupported degree " + std::to_string(degree));
    QuadRule q;
    q.degree = degree;
    if (degree == 1) {
        q.points = {Vec2(1.0 / 3.0, 1.0 / 3.0)};
        q.weights = {0.5};
        return q;
    }
    if (degree == 2) {
        q.points = {Vec2(1.0 / 6.0, 1.0 / 6.0), Vec2(2.0 / 3.0, 1.0 / 6.0),
                    Vec2(1.0 / 6.0, 2.0 / 3.0)};
        q.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
        return q;
    }
    if (degree <= 5) {
        const double s15 = std::sqrt(15.0);
        const double a = (6.0 - s15) / 21.0, b = (6.0 + s15) / 21.0;
        const double wa = (155.0 - s15) / 2400.0, wb = (155.0 + s15) / 2400.0;
        q.points = {Vec2(1.0 / 3.0, 1.0 / 3.0),
                    Vec2(a, a), Vec2(1.0 - 2.0 * a, a), Vec2(a, 1.0 - 2.0 * a),
                    Vec2(b, b), Vec2(1.0 - 2.0 * b, b), Vec2(b, 1.0 - 2.0 * b)};
        q.weights = {9.0 / 80.0, wa, wa, wa, wb, wb, wb};
        return q;
    }
    // x = u, y = v (1 - u); the Jacobian (1 - u) raises the degree in u by one.
    const int nu = (degree + 3) / 2;
    const int nv = (degree + 2) / 2;
    const auto [xu, wu] = gauss_legendre(nu);
    const auto [xv, wv] = gauss_legendre(nv);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            q.points.emplace_back(xu[i], xv[j] * (1.0 - xu[i]));
            q.weights.push_back(wu[i] * wv[j] * (1.0 - xu[i]));
        }
    return q;
}

/// Default volume rule degree for order-m elements.
constexpr int default_quad_degree(int m) { return 3 * m + 2; }

}  // namespace fsi
