#pragma once

// Fourth-order finite differences on a uniform grid. Interior points use the
// standard centered five-point stencils; the two nodes adjacent to each end
// use six-node biased stencils so no ghost points are needed. Edge weights
// come from Fornberg's recursion, generated once per scalar type.

#include <array>
#include <cstddef>
#include <vector>

namespace ewm {

// Fornberg (1988): weights of the m-th derivative at x0 from nodes xs.
template <class R>
std::vector<std::vector<R>> fornberg_weights(const R& x0, const std::vector<R>& xs, int mmax) {
    const int n = static_cast<int>(xs.size()) - 1;
    std::vector<std::vector<std::vector<R>>> d(
        mmax + 1, std::vector<std::vector<R>>(n + 1, std::vector<R>(n + 1, R(0))));
    d[0][0][0] = R(1);
    R c1(1);
    for (int i = 1; i <= n; ++i) {
        R c2(1);
        for (int j = 0; j < i; ++j) {
            R c3 = xs[i] - xs[j];
            c2 *= c3;
            for (int m = 0; m <= std::min(i, mmax); ++m) {
                R prev = (m > 0) ? d[m - 1][i - 1][j] : R(0);
                d[m][i][j] = ((xs[i] - x0) * d[m][i - 1][j] - R(m) * prev) / c3;
            }
        }
        for (int m = 0; m <= std::min(i, mmax); ++m) {
            R prev = (m > 0) ? d[m - 1][i - 1][i - 1] : R(0);
            d[m][i][i] = c1 / c2 * (R(m) * prev - (xs[i - 1] - x0) * d[m][i - 1][i - 1]);
        }
        c1 = c2;
    }
    std::vector<std::vector<R>> w(mmax + 1, std::vector<R>(n + 1));
    for (int m = 0; m <= mmax; ++m)
        for (int j = 0; j <= n; ++j) w[m][j] = d[m][n][j];
    return w;
}

// weights for d/dx and d2/dx2 at offset p within a six-node block {0..5},
// unit spacing
template <class R> struct EdgeWeights {
    std::array<R, 6> d1, d2;
};

template <class R> EdgeWeights<R> edge_weights(int p) {
    std::vector<R> xs(6);
    for (int i = 0; i < 6; ++i) xs[i] = R(i);
    auto w = fornberg_weights<R>(R(p), xs, 2);
    EdgeWeights<R> e;
    for (int i = 0; i < 6; ++i) {
        e.d1[i] = w[1][i];
        e.d2[i] = w[2][i];
    }
    return e;
}

// derivative of f at node i; n = f.size(), h = spacing
template <class R, class V>
R deriv1_at(const V& f, std::size_t i, std::size_t n, const R& h) {
    static const auto e0 = edge_weights<R>(0);
    static const auto e1 = edge_weights<R>(1);
    auto sum6 = [&](const std::array<R, 6>& w, std::size_t base, bool flip) {
        R s(0);
        for (int k = 0; k < 6; ++k) s += w[k] * f[flip ? base - k : base + k];
        return flip ? -s : s;
    };
    if (i <= 1) return sum6(i == 0 ? e0.d1 : e1.d1, 0, false) / h;
    if (i >= n - 2) return sum6(i == n - 1 ? e0.d1 : e1.d1, n - 1, true) / h;
    return (f[i - 2] - R(8) * f[i - 1] + R(8) * f[i + 1] - f[i + 2]) / (R(12) * h);
}

template <class R, class V>
R deriv2_at(const V& f, std::size_t i, std::size_t n, const R& h) {
    static const auto e0 = edge_weights<R>(0);
    static const auto e1 = edge_weights<R>(1);
    auto sum6 = [&](const std::array<R, 6>& w, std::size_t base, bool flip) {
        R s(0);
        for (int k = 0; k < 6; ++k) s += w[k] * f[flip ? base - k : base + k];
        return s;  // even derivative: mirror-symmetric
    };
    if (i <= 1) return sum6(i == 0 ? e0.d2 : e1.d2, 0, false) / (h * h);
    if (i >= n - 2) return sum6(i == n - 1 ? e0.d2 : e1.d2, n - 1, true) / (h * h);
    return (-f[i - 2] + R(16) * f[i - 1] - R(30) * f[i] + R(16) * f[i + 1] - f[i + 2])
           / (R(12) * h * h);
}

}  // namespace ewm
