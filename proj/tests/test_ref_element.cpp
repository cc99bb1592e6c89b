#include <gtest/gtest.h>

#include <random>

#include "fsi/ref_element.hpp"

using namespace fsi;

namespace {

// int_T x^a y^b = a! b! / (a + b + 2)!
double monomial_integral(int a, int b) {
    return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

std::vector<Vec2> random_points(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec2> pts;
    while (static_cast<int>(pts.size()) < n) {
        Vec2 x(u(rng), u(rng));
        if (x.sum() <= 1.0) pts.push_back(x);
    }
    return pts;
}

}  // namespace

TEST(RefBasis, KroneckerAllOrders) {
    for (int m = 1; m <= 3; ++m) {
        RefBasis b(m);
        ASSERT_EQ(b.size(), lagrange_node_count(m));
        for (int q = 0; q < b.size(); ++q) {
            const auto v = b.values(b.node(q));
            for (int p = 0; p < b.size(); ++p) EXPECT_NEAR(v[p], p == q ? 1.0 : 0.0, 1e-14);
        }
    }
}

TEST(RefBasis, P1AtOrigin) {
    const auto v = RefBasis(1).values(Vec2(0, 0));
    EXPECT_EQ(v, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(RefBasis, P2EdgeMidpointNode) {
    RefBasis b(2);
    const auto v = b.values(Vec2(0.5, 0.0));
    for (int p = 0; p < 6; ++p) EXPECT_NEAR(v[p], p == 3 ? 1.0 : 0.0, 1e-15);
    EXPECT_EQ(b.node(4), Vec2(0.5, 0.5));
    EXPECT_EQ(b.node(5), Vec2(0.0, 0.5));
}

TEST(RefBasis, PartitionOfUnity) {
    for (int m = 1; m <= 3; ++m) {
        RefBasis b(m);
        for (const auto& x : random_points(50, 7 + m)) {
            const auto v = b.values(x);
            const auto g = b.gradients(x);
            double s = 0, gx = 0, gy = 0;
            for (int p = 0; p < b.size(); ++p) {
                s += v[p];
                gx += g[2 * p];
                gy += g[2 * p + 1];
            }
            EXPECT_NEAR(s, 1.0, 1e-13);
            EXPECT_NEAR(gx, 0.0, 1e-12);
            EXPECT_NEAR(gy, 0.0, 1e-12);
        }
    }
}

TEST(RefBasis, GradientsMatchFiniteDifferences) {
    const double h = 1e-6;
    for (int m = 1; m <= 3; ++m) {
        RefBasis b(m);
        for (const auto& x : random_points(5, 3 * m)) {
            const auto g = b.gradients(x);
            const auto xp = b.values(x + Vec2(h, 0)), xm = b.values(x - Vec2(h, 0));
            const auto yp = b.values(x + Vec2(0, h)), ym = b.values(x - Vec2(0, h));
            for (int p = 0; p < b.size(); ++p) {
                EXPECT_NEAR(g[2 * p], (xp[p] - xm[p]) / (2 * h), 1e-6);
                EXPECT_NEAR(g[2 * p + 1], (yp[p] - ym[p]) / (2 * h), 1e-6);
            }
        }
    }
}

TEST(RefBasis, UnsupportedOrderThrows) {
    EXPECT_THROW(RefBasis(0), Error);
    EXPECT_THROW(RefBasis(4), Error);
}

TEST(QuadRule, DegreeOneIsCentroid) {
    const auto q = quad_rule(1);
    ASSERT_EQ(q.size(), 1);
    EXPECT_EQ(q.points[0], Vec2(1.0 / 3.0, 1.0 / 3.0));
    EXPECT_EQ(q.weights[0], 0.5);
}

TEST(QuadRule, AllMonomialsExact) {
    for (int deg = 1; deg <= 12; ++deg) {
        const auto q = quad_rule(deg);
        EXPECT_EQ(q.degree, deg);
        double wsum = 0;
        for (double w : q.weights) {
            EXPECT_GT(w, 0.0);
            wsum += w;
        }
        EXPECT_NEAR(wsum, 0.5, 1e-15);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                double s = 0;
                for (int k = 0; k < q.size(); ++k)
                    s += q.weights[k] * std::pow(q.points[k].x(), a) * std::pow(q.points[k].y(), b);
                EXPECT_NEAR(s, monomial_integral(a, b), 1e-13) << "deg " << deg << " x^" << a
                                                               << " y^" << b;
            }
    }
}

TEST(QuadRule, HandIntegrals) {
    for (int deg = 2; deg <= 12; ++deg) {
        const auto q = quad_rule(deg);
        double s = 0;
        for (int k = 0; k < q.size(); ++k) s += q.weights[k] * q.points[k].x() * q.points[k].y();
        EXPECT_NEAR(s, 1.0 / 24.0, 1e-15);
    }
    const auto q4 = quad_rule(4);
    double s = 0;
    for (int k = 0; k < q4.size(); ++k) s += q4.weights[k] * std::pow(q4.points[k].x(), 4);
    EXPECT_NEAR(s, 1.0 / 30.0, 1e-15);
}

TEST(QuadRule, UnsupportedDegreeThrows) {
    EXPECT_THROW(quad_rule(0), Error);
    EXPECT_THROW(quad_rule(13), Error);
}

TEST(QuadRule, GaussLegendreEdgeRuleExact) {
    // n points integrate degree 2n - 1; m = 2 edges need degree 5, i.e. 3 points
    for (int n = 1; n <= 6; ++n) {
        const auto [x, w] = gauss_legendre(n);
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], d);
            EXPECT_NEAR(s, 1.0 / (d + 1), 1e-14);
        }
    }
}

TEST(QuadRule, DefaultDegree) { EXPECT_EQ(default_quad_degree(2), 8); }
