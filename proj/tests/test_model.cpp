#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ewm/fd.hpp"
#include "ewm/model.hpp"

using namespace ewm;

TEST(Fd, CenteredWeightsMatchFornberg) {
    std::vector<double> xs = {-2, -1, 0, 1, 2};
    auto w = fornberg_weights<double>(0.0, xs, 2);
    double d1[] = {1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12};
    double d2[] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(w[1][i], d1[i], 1e-14);
        EXPECT_NEAR(w[2][i], d2[i], 1e-14);
    }
}

TEST(Fd, EdgeStencilsExactOnQuintics) {
    // six-node stencils must differentiate x^k, k<=5, exactly
    for (int p : {0, 1}) {
        auto e = edge_weights<double>(p);
        for (int k = 0; k <= 5; ++k) {
            double s1 = 0, s2 = 0;
            for (int i = 0; i < 6; ++i) {
                s1 += e.d1[i] * std::pow(i, k);
                s2 += e.d2[i] * std::pow(i, k);
            }
            double x = p;
            double ref1 = k >= 1 ? k * std::pow(x, k - 1) : 0.0;
            double ref2 = k >= 2 ? k * (k - 1) * std::pow(x, k - 2) : 0.0;
            EXPECT_NEAR(s1, ref1, 1e-12) << "p=" << p << " k=" << k;
            EXPECT_NEAR(s2, ref2, 1e-12) << "p=" << p << " k=" << k;
        }
    }
}

TEST(Fd, FourthOrderOnSine) {
    auto err = [](std::size_t n) {
        double h = 1.0 / double(n - 1);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(2.0 + 3.0 * i * h);
        double worst = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double x = 2.0 + 3.0 * i * h;
            double e1 = std::abs(deriv1_at(f, i, n, h) - 3.0 * std::cos(x));
            double e2 = std::abs(deriv2_at(f, i, n, h) + 9.0 * std::sin(x));
            worst = std::max({worst, e1, e2});
        }
        return worst;
    };
    double e1 = err(41), e2 = err(81);
    double order = std::log2(e1 / e2);
    EXPECT_NEAR(order, 4.0, 0.5);
}

TEST(Model, IndexValidation) {
    EXPECT_NO_THROW(EquivariantIndex(1));
    EXPECT_EQ(EquivariantIndex(3).L(), 12);
    EXPECT_THROW(EquivariantIndex(0), Error);
    EXPECT_THROW(EquivariantIndex(-2), Error);
}

TEST(Model, GridBasics) {
    RadialGrid<double> g(0.25, 9);
    EXPECT_EQ(g.r(0), 1.0);  // exact, not just close
    EXPECT_DOUBLE_EQ(g.r(8), 3.0);
    EXPECT_THROW(RadialGrid<double>(0.1, 8), Error);
    auto g2 = RadialGrid<double>::with_extent(5.0, 0.1);
    EXPECT_GE(g2.r_max(), 5.0);
    EXPECT_EQ(g2.r(0), 1.0);
}

TEST(Model, DegreeOf) {
    RadialGrid<double> g(0.5, 21);
    FieldState<double> s(21);
    EXPECT_EQ(degree_of(g, s), 0);
    for (std::size_t i = 0; i < 21; ++i) s.u[i] = 2 * M_PI * (1 - std::exp(-0.9 * i));
    EXPECT_EQ(degree_of(g, s), 2);
    s.u[20] = M_PI / 2;  // mid-transition: refuse to guess
    EXPECT_THROW(degree_of(g, s), Error);
}

TEST(Model, WaveRhsFourthOrder) {
    // manufactured u(r) = (r-1)^2 exp(-(r-1)); compare dv against the closed form
    EquivariantIndex idx(2);
    auto run = [&](double h) {
        auto g = RadialGrid<double>::with_extent(6.0, h);
        FieldState<double> s(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            double y = g.r(i) - 1.0;
            s.u[i] = y * y * std::exp(-y);
        }
        std::vector<double> du, dv;
        wave_rhs(idx, g, s, du, dv);
        double worst = 0;
        for (std::size_t i = 1; i + 1 < g.n; ++i) {
            double r = g.r(i), y = r - 1.0;
            double u = y * y * std::exp(-y);
            double up = (2 * y - y * y) * std::exp(-y);
            double upp = (2 - 4 * y + y * y) * std::exp(-y);
            double ref = upp + 2.0 / r * up - 6.0 / (2 * r * r) * std::sin(2 * u);
            worst = std::max(worst, std::abs(dv[i] - ref));
        }
        return worst;
    };
    double e1 = run(0.02), e2 = run(0.01);
    EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.4);
    EXPECT_LT(e2, 1e-7);
}

TEST(Model, WaveRhsReportsVelocity) {
    EquivariantIndex idx(1);
    RadialGrid<double> g(0.1, 11);
    FieldState<double> s(11);
    for (std::size_t i = 0; i < 11; ++i) s.v[i] = 0.5 * i;
    std::vector<double> du, dv;
    wave_rhs(idx, g, s, du, dv);
    for (std::size_t i = 0; i < 11; ++i) EXPECT_DOUBLE_EQ(du[i], s.v[i]);
}

TEST(Model, EnergyExactForConstantIntegrand) {
    // u = 0, v = 1/r makes the integrand identically 1/2
    EquivariantIndex idx(1);
    RadialGrid<double> g(0.1, 41);
    FieldState<double> s(g.n);
    for (std::size_t i = 0; i < g.n; ++i) s.v[i] = 1.0 / g.r(i);
    EXPECT_NEAR(energy(idx, g, s), 0.5 * (g.r_max() - 1.0), 1e-13);
    // odd interval count goes through the 3/8 patch
    RadialGrid<double> g2(0.1, 42);
    FieldState<double> s2(g2.n);
    for (std::size_t i = 0; i < g2.n; ++i) s2.v[i] = 1.0 / g2.r(i);
    EXPECT_NEAR(energy(idx, g2, s2), 0.5 * (g2.r_max() - 1.0), 1e-13);
}

TEST(Model, EnergyFourthOrder) {
    EquivariantIndex idx(2);
    auto eval = [&](double h) {
        auto g = RadialGrid<double>::with_extent(9.0, h);
        FieldState<double> s(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            double y = g.r(i) - 1.0;
            s.u[i] = 2.0 * std::atan(y * y);
            s.v[i] = y * std::exp(-y);
        }
        return energy(idx, g, s);
    };
    double ref = eval(0.00125);
    double e1 = std::abs(eval(0.01) - ref), e2 = std::abs(eval(0.005) - ref);
    EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.8);
}

TEST(Model, PotentialFormulaAndTail) {
    EquivariantIndex idx(1);
    RadialGrid<double> g(0.5, 9);
    std::vector<double> u(g.n);
    for (std::size_t i = 0; i < g.n; ++i) u[i] = 0.3 * i;
    double b = 4.847841;
    auto V = potential_of(idx, g, u, b);
    for (std::size_t i = 0; i < g.n; ++i) {
        double r = g.r(i), si = std::sin(u[i]);
        EXPECT_NEAR(V.values[i], -4.0 * si * si / (r * r), 1e-14);
    }
    EXPECT_NEAR(V.tail_coefficient, -4.0 * b * b, 1e-12);
}

TEST(Model, QuadLaneCompiles) {
    EquivariantIndex idx(1);
    RadialGrid<qreal> g(qreal("0.1"), 41);
    FieldState<qreal> s(g.n);
    for (std::size_t i = 0; i < g.n; ++i) s.v[i] = qreal(1) / g.r(i);
    qreal E = energy(idx, g, s);
    using std::abs;
    EXPECT_LT(to_double(abs(E - (g.r_max() - 1) / 2)), 1e-30);
    EXPECT_EQ(degree_of(g, s), 0);
}
