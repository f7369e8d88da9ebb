#pragma once

// Dense complex polynomials: Horner evaluation and a Durand-Kerner root
// finder with Newton polish. Coefficients are ascending, p(z) = c[0] +
// c[1] z + ... Shared by the Hankel quantization condition and the Prony
// characteristic polynomial.

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "ewm/model.hpp"
#include "ewm/precision.hpp"

namespace ewm {

template <class C>
C poly_eval(const std::vector<C>& c, const C& z) {
    C acc(0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
    return acc;
}

template <class C>
std::pair<C, C> poly_eval_d(const std::vector<C>& c, const C& z) {
    C p(0), dp(0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        dp = dp * z + p;
        p = p * z + *it;
    }
    return {p, dp};
}

// scale-free backward error |p(z)| / sum_k |c_k||z|^k; ~eps for a root
// computed as well as the coefficients allow
template <class C>
auto poly_residual(const std::vector<C>& c, const C& z) {
    using std::abs;
    using R = decltype(abs(z));
    R num = abs(poly_eval(c, z));
    R den(0), zp(1);
    const R az = abs(z);
    for (const C& ck : c) {
        den += abs(ck) * zp;
        zp *= az;
    }
    return den > R(0) ? num / den : num;
}

template <class C>
std::vector<C> poly_roots(std::vector<C> c) {
    using std::abs;
    using std::cos;
    using std::pow;
    using std::sin;
    using R = decltype(abs(c[0]));
    while (!c.empty() && abs(c.back()) == R(0)) c.pop_back();
    if (c.size() < 2) throw Error("domain", "poly_roots needs degree >= 1");
    std::vector<C> roots;
    while (abs(c.front()) == R(0)) {  // exact zero roots come off for free
        roots.push_back(C(0));
        c.erase(c.begin());
        if (c.size() < 2) {
            return roots;
        }
    }
    const int n = static_cast<int>(c.size()) - 1;
    // start on a circle at the geometric mean of the root moduli
    R radius = pow(abs(c.front()) / abs(c.back()), R(1) / R(n));
    if (!(radius > R(0))) radius = R(1);
    std::vector<C> z(n);
    const R two_pi = R(2) * pi<R>();
    for (int k = 0; k < n; ++k) {
        R th = two_pi * R(k) / R(n) + R(0.4);
        z[k] = radius * C(cos(th), sin(th));
    }
    for (int sweep = 0; sweep < 800; ++sweep) {
        R worst(0);
        for (int i = 0; i < n; ++i) {
            C denom = c.back();
            for (int j = 0; j < n; ++j)
                if (j != i) denom *= z[i] - z[j];
            if (abs(denom) == R(0)) {
                z[i] += radius * C(R(1e-6), R(1e-6));
                worst = R(1);
                continue;
            }
            C step = poly_eval(c, z[i]) / denom;
            z[i] -= step;
            R rel = abs(step) / (R(1) + abs(z[i]));
            if (rel > worst) worst = rel;
        }
        if (worst < R(100) * eps<R>()) break;
    }
    for (int i = 0; i < n; ++i) {  // a few guarded Newton steps per root
        for (int it = 0; it < 8; ++it) {
            auto [p, dp] = poly_eval_d(c, z[i]);
            if (abs(dp) == R(0)) break;
            C step = p / dp;
            if (abs(step) > R(0.1) * (R(1) + abs(z[i]))) break;
            z[i] -= step;
            if (abs(step) <= R(4) * eps<R>() * (R(1) + abs(z[i]))) break;
        }
    }
    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

}  // namespace ewm
