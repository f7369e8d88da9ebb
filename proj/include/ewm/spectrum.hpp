#pragma once

// Quasinormal modes of the linearization about the static solutions. The
// vacuum sector (N=0) reduces to zeros of a degree-l polynomial; for N >= 1
// a two-sided complex shooting in x = ln r matches logarithmic derivatives
// at a midpoint. The outer branch starts from the optimally truncated
// outgoing series, the pendulum state rides along with eta so no profile
// interpolation enters. Everything is templated on the scalar so the same
// code runs the double and float128 lanes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include "ewm/fd.hpp"
#include "ewm/model.hpp"
#include "ewm/ode.hpp"
#include "ewm/poly.hpp"
#include "ewm/precision.hpp"
#include "ewm/static_solver.hpp"

namespace ewm {

// lambda = Omega - i Gamma; Gamma > 0 is the damping rate. omega keeps the
// sign it converged with (modes come in +/-Omega pairs); representative()
// gives the Omega >= 0 partner.
template <class R> struct ComplexFrequency {
    R omega{}, gamma{};
    complex_t<R> lambda() const { return complex_t<R>(omega, -gamma); }
    static ComplexFrequency from_lambda(const complex_t<R>& l) {
        return {l.real(), -l.imag()};
    }
    ComplexFrequency representative() const {
        return {omega < R(0) ? R(-omega) : omega, gamma};
    }
};

namespace detail {

template <class R> complex_t<R> ipow(int m) {
    switch (((m % 4) + 4) % 4) {
        case 0: return complex_t<R>(R(1), R(0));
        case 1: return complex_t<R>(R(0), R(1));
        case 2: return complex_t<R>(R(-1), R(0));
        default: return complex_t<R>(R(0), R(-1));
    }
}

template <class C> bool finite_c(const C& z) {
    using std::abs;
    return z.real() == z.real() && z.imag() == z.imag() && abs(z) < decltype(abs(z))(1e12);
}

}  // namespace detail

// h_l^(1)(z) = e^{iz} p(z)/z^{l+1}; returns the ascending coefficients of p.
// Its l roots are the vacuum quasinormal frequencies.
template <class R = double>
std::vector<complex_t<R>> hankel_polynomial(int ell) {
    using C = complex_t<R>;
    std::vector<C> c(static_cast<std::size_t>(ell) + 1, C(0));
    C pref = detail::ipow<R>(-(ell + 1));  // (-i)^{l+1} = i^{-(l+1)}
    R binom(1);                            // (l+m)!/(m!(l-m)! 2^m)
    for (int m = 0; m <= ell; ++m) {
        if (m > 0) binom *= R((ell + m) * (ell - m + 1)) / R(2 * m);
        c[static_cast<std::size_t>(ell - m)] = pref * detail::ipow<R>(m) * binom;
    }
    return c;
}

template <class R = double>
std::vector<ComplexFrequency<R>> hankel_qnm(const EquivariantIndex& idx) {
    auto roots = poly_roots(hankel_polynomial<R>(idx.ell));
    std::sort(roots.begin(), roots.end(), [](const complex_t<R>& a, const complex_t<R>& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<ComplexFrequency<R>> out;
    out.reserve(roots.size());
    for (auto& z : roots) out.push_back(ComplexFrequency<R>::from_lambda(z));
    return out;
}

// direct evaluation through the upward recurrence, independent of the
// polynomial coefficients above; test oracle and sanity probe
template <class R = double>
complex_t<R> hankel_h1(int ell, const complex_t<R>& z) {
    using C = complex_t<R>;
    using std::exp;
    const C i(R(0), R(1));
    C e = exp(i * z);
    C h0 = -i * e / z;
    if (ell == 0) return h0;
    C h1 = -(z + i) * e / (z * z);
    for (int n = 1; n < ell; ++n) {
        C h2 = R(2 * n + 1) / z * h1 - h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// large-l estimate of the least damped Hankel zero from the first Airy
// function zero; O(nu^{-1}) accurate, used as a scan seed
template <class R = double>
ComplexFrequency<R> airy_estimate(const EquivariantIndex& idx) {
    using C = complex_t<R>;
    using std::cos;
    using std::pow;
    using std::sin;
    const R nu = R(idx.ell) + R(0.5);
    const R eta1 = R(-2.33810741);
    const R arg = R(-2) * pi<R>() / R(3);
    const C zeta = pow(R(2), R(-1) / R(3)) * C(cos(arg), sin(arg)) * eta1;
    const R nu13 = pow(nu, R(1) / R(3));
    C l = C(nu, R(0)) - zeta * nu13 + R(3) / R(10) * zeta * zeta / nu13;
    return ComplexFrequency<R>::from_lambda(l);
}

// sin^2(u_{l,N}) expanded in powers of rho = 1/r from the far-field series
// of the static solution; S[m] multiplies rho^m, leading term b^2 rho^{2l+2}
template <class R>
std::vector<R> sin2_profile_coefficients(const EquivariantIndex& idx, int N, const R& b,
                                         int max_power) {
    std::vector<R> S(static_cast<std::size_t>(max_power) + 1, R(0));
    if (N == 0 || b == R(0)) return S;
    const int k1 = idx.ell + 1;
    int n_terms = 0;
    while ((2 * (n_terms + 1) - 1) * k1 <= max_power) ++n_terms;
    if (n_terms == 0) return S;
    auto ex = u_expansion(idx, N, b, 2 * n_terms - 1);
    std::vector<R> phi(static_cast<std::size_t>(max_power) + 1, R(0));
    for (auto& term : ex.terms) {
        int p = static_cast<int>(to_double(term.first) + 0.5);
        if (p <= max_power) phi[static_cast<std::size_t>(p)] = term.second;
    }
    auto mul = [&](const std::vector<R>& p, const std::vector<R>& q) {
        std::vector<R> out(static_cast<std::size_t>(max_power) + 1, R(0));
        for (int i = 0; i <= max_power; ++i) {
            if (p[static_cast<std::size_t>(i)] == R(0)) continue;
            for (int j = 0; i + j <= max_power; ++j)
                if (q[static_cast<std::size_t>(j)] != R(0))
                    out[static_cast<std::size_t>(i + j)] +=
                        p[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(j)];
        }
        return out;
    };
    // sin^2 x = sum_{j>=1} (-1)^{j+1} 2^{2j-1} x^{2j}/(2j)!
    std::vector<R> p2 = mul(phi, phi), pw = p2;
    R coeff(1);
    for (int j = 1; 2 * j * k1 <= max_power; ++j) {
        if (j > 1) {
            pw = mul(pw, p2);
            coeff *= -R(4) / (R(2 * j) * R(2 * j - 1));
        }
        for (int m = 0; m <= max_power; ++m) S[static_cast<std::size_t>(m)] += coeff * pw[static_cast<std::size_t>(m)];
    }
    return S;
}

// eta(rho) = sum_j coeff[j] rho^j: free part for j <= l (the terminating
// Hankel asymptotic), corrections from j = 2l+3 on carrying the static tail
template <class R> struct OutgoingSeries {
    EquivariantIndex idx;
    int N = 0;
    R b{};
    complex_t<R> lambda{};
    std::vector<complex_t<R>> coeff;
};

template <class R>
OutgoingSeries<R> build_series(const EquivariantIndex& idx, int N, const R& b,
                               const complex_t<R>& lambda, int max_order) {
    using C = complex_t<R>;
    using std::abs;
    if (abs(lambda) == R(0)) throw Error("domain", "lambda must be nonzero");
    if (max_order < 2 * idx.ell + 3)
        throw Error("domain", "max_order must reach the first correction 2l+3");
    const R L(idx.L());
    auto S = sin2_profile_coefficients(idx, N, b, max_order);
    OutgoingSeries<R> out{idx, N, b, lambda, {}};
    auto& a = out.coeff;
    a.assign(static_cast<std::size_t>(max_order) + 1, C(0));
    a[0] = C(1);
    const C denom_unit = C(R(0), R(2)) * lambda;  // 2 i lambda
    for (int m = 0; m + 1 <= max_order; ++m) {
        C rhs = (R(m) * R(m + 1) - L) * a[static_cast<std::size_t>(m)];
        C conv(0);
        for (int k = 2 * idx.ell + 2; k <= m; ++k)
            if (S[static_cast<std::size_t>(k)] != R(0))
                conv += S[static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(m - k)];
        rhs += R(2) * L * conv;
        C d = denom_unit * R(m + 1);
        if (abs(d) == R(0)) throw Error("resonant-order", "vanishing leading coefficient at order " + std::to_string(m + 1));
        a[static_cast<std::size_t>(m + 1)] = rhs / d;
    }
    return out;
}

template <class R> struct OutgoingValue {
    complex_t<R> eta{}, deta{};  // value and d/drho
    R error{};                   // magnitude of the first omitted term
    int order = 0;               // highest power actually summed
};

// free part summed exactly; the correction tail is cut at its smallest term
// (optimal truncation), the error estimate is the first term left out
template <class R>
OutgoingValue<R> evaluate_outgoing(const OutgoingSeries<R>& s, const R& rho) {
    using C = complex_t<R>;
    using std::abs;
    if (!(rho > R(0))) throw Error("domain", "rho must be positive");
    if (rho > R(0.5))
        throw Error("rho-too-large", "asymptotic series unusable at rho = " + format_real(rho));
    const int ell = s.idx.ell;
    const int top = static_cast<int>(s.coeff.size()) - 1;
    OutgoingValue<R> out;
    C eta(0), deta(0);
    R zp(1);  // rho^{j-1} inside the loop below, rho^j after the value update
    for (int j = 0; j <= ell && j <= top; ++j) {
        const C& aj = s.coeff[static_cast<std::size_t>(j)];
        if (j > 0) deta += R(j) * aj * zp;
        if (j > 0) zp *= rho;
        eta += aj * zp;
    }
    out.order = ell;
    const int first = 2 * ell + 3;
    if (top >= first) {
        // term magnitudes |a_j| rho^j over the correction tail, -1 = absent
        std::vector<R> mag(static_cast<std::size_t>(top) + 1, R(-1));
        R zpj(1);
        for (int j = 1; j <= top; ++j) {
            zpj *= rho;
            R aj = abs(s.coeff[static_cast<std::size_t>(j)]);
            if (j >= first && aj > R(0)) mag[static_cast<std::size_t>(j)] = aj * zpj;
        }
        int jfirst = -1, jmin = -1;
        R tmin(0);
        for (int j = first; j <= top; ++j) {
            if (mag[static_cast<std::size_t>(j)] < R(0)) continue;
            if (jfirst < 0) jfirst = j;
            if (jmin < 0 || mag[static_cast<std::size_t>(j)] < tmin) {
                jmin = j;
                tmin = mag[static_cast<std::size_t>(j)];
            }
        }
        if (jmin >= 0) {
            if (jmin == jfirst && tmin > R(0.01))
                throw Error("rho-too-large",
                            "correction terms grow from the start at rho = " + format_real(rho));
            R zpc(1);  // rho^{j-1}
            for (int j = 1; j <= jmin; ++j) {
                const C& aj = s.coeff[static_cast<std::size_t>(j)];
                if (j >= first) {
                    deta += R(j) * aj * zpc;
                    eta += aj * zpc * rho;
                }
                zpc *= rho;
            }
            out.order = jmin;
            int jnext = -1;
            for (int j = jmin + 1; j <= top; ++j)
                if (mag[static_cast<std::size_t>(j)] >= R(0)) {
                    jnext = j;
                    break;
                }
            out.error = jnext > 0 ? mag[static_cast<std::size_t>(jnext)] : tmin;
        }
    }
    out.eta = eta;
    out.deta = deta;
    return out;
}

namespace detail {

// joint state {Re eta, Im eta, Re eta_x, Im eta_x, v, w} in x = ln r:
// eta_xx = -(2 i lambda e^x - 1) eta_x - L (2 sin^2 v - 1) eta, pendulum
// rows as in the static problem
template <class R> struct EtaRhs {
    R L;
    complex_t<R> lambda;
    void operator()(const std::array<R, 6>& y, std::array<R, 6>& dy, R x) const {
        using std::exp;
        using std::sin;
        const complex_t<R> eta(y[0], y[1]), etax(y[2], y[3]);
        const complex_t<R> cx =
            complex_t<R>(R(0), R(2)) * lambda * exp(x) - complex_t<R>(R(1), R(0));
        const R s = sin(y[4]);
        const complex_t<R> etaxx = -cx * etax - L * (R(2) * s * s - R(1)) * eta;
        dy[0] = etax.real();
        dy[1] = etax.imag();
        dy[2] = etaxx.real();
        dy[3] = etaxx.imag();
        dy[4] = y[5];
        dy[5] = -y[5] + L / R(2) * sin(R(2) * y[4]);
    }
};

template <class R> struct EtaState {
    complex_t<R> eta, etax;  // etax = d(eta)/dx
    R v, w;
};

// drives the joint system through the ascending or descending x targets,
// recording (eta, eta_x, v, w) at each
template <class R>
std::vector<EtaState<R>> eta_states(const StaticSolution<R>& sol, const complex_t<R>& lambda,
                                    std::array<R, 6> y, R x_from, const std::vector<R>& xs,
                                    R tol) {
    EtaRhs<R> rhs{R(sol.idx.L()), lambda};
    std::vector<EtaState<R>> out;
    out.reserve(xs.size());
    R x = x_from;
    for (const R& xt : xs) {
        if (xt != x)
            adaptive_drive<R>(rhs, y, x, xt, tol, R(0.25), [](R, const std::array<R, 6>&) {});
        x = xt;
        out.push_back({complex_t<R>(y[0], y[1]), complex_t<R>(y[2], y[3]), y[4], y[5]});
        if (!finite_c(out.back().eta) || !finite_c(out.back().etax))
            throw Error("integration-failure", "eta left the finite range");
    }
    return out;
}

template <class R>
std::array<R, 6> inner_seed(const StaticSolution<R>& sol) {
    return {R(0), R(0), R(1), R(0), R(0), sol.a};  // eta(1)=0, eta_x(1)=1
}

template <class R>
std::array<R, 6> outer_seed(const StaticSolution<R>& sol, const OutgoingSeries<R>& series,
                            const R& rho0, R& x0) {
    using std::log;
    x0 = log(R(1) / rho0);
    auto ev = evaluate_outgoing(series, rho0);
    std::vector<R> u, w;
    sol.sample({x0}, u, w);
    // d/dx = -rho d/drho
    return {ev.eta.real(),          ev.eta.imag(), (-rho0 * ev.deta).real(),
            (-rho0 * ev.deta).imag(), u[0],        w[0]};
}

template <class R> int default_series_order(int ell) {
    using std::log;
    return 2 * ell + 3 + static_cast<int>(2.5 * to_double(log(R(1) / eps<R>())));
}

// Start radius balancing two opposite effects: the series truncation error
// shrinks like exp(-|lambda|/rho0) while the inward integration amplifies
// ingoing-mode noise like exp(2*Gamma*(1/rho0 - 2)).  rho0 = 2|lambda|/ln(1/eps)
// keeps the truncation near sqrt(eps) and stays above the instability zone
// for every mode observed so far.  Clamped into [0.02, 0.1].
template <class R> R adaptive_rho0(const complex_t<R>& lambda) {
    using std::abs;
    using std::log;
    R r = R(2) * abs(lambda) / log(R(1) / eps<R>());
    if (r < R(0.02)) r = R(0.02);
    if (r > R(0.1)) r = R(0.1);
    return r;
}

}  // namespace detail

template <class R> struct EtaBranch {
    std::vector<R> rho;
    std::vector<complex_t<R>> eta, deta;  // deta = d(eta)/drho
};

enum class EtaStart { inner, outer };

// samples of the eqeta solution between rho0 and 1: inner branch launched
// with eta(1)=0, eta_x(1)=1, outer branch from the outgoing series at rho0
template <class R>
EtaBranch<R> integrate_eta(const EquivariantIndex& idx, int N, const StaticSolution<R>& sol,
                           const complex_t<R>& lambda, EtaStart from, R rho0 = R(0.1),
                           R tol = default_phase_tol<R>(), int n_samples = 65) {
    using std::exp;
    using std::log;
    if (sol.idx.ell != idx.ell || sol.N != N)
        throw Error("domain", "static solution does not belong to (l, N)");
    if (!(rho0 > R(0) && rho0 < R(1))) throw Error("domain", "rho0 must lie in (0, 1)");
    const R x_far = log(R(1) / rho0);
    std::vector<R> xs(static_cast<std::size_t>(n_samples));
    std::array<R, 6> y{};
    R x_from;
    if (from == EtaStart::inner) {
        x_from = R(0);
        for (int k = 0; k < n_samples; ++k)
            xs[static_cast<std::size_t>(k)] = x_far * R(k) / R(n_samples - 1);
        y = detail::inner_seed(sol);
    } else {
        auto series = build_series(idx, N, sol.b, lambda, detail::default_series_order<R>(idx.ell));
        y = detail::outer_seed(sol, series, rho0, x_from);
        for (int k = 0; k < n_samples; ++k)
            xs[static_cast<std::size_t>(k)] = x_far * R(n_samples - 1 - k) / R(n_samples - 1);
    }
    auto states = detail::eta_states(sol, lambda, y, x_from, xs, tol);
    EtaBranch<R> out;
    out.rho.resize(xs.size());
    out.eta.resize(xs.size());
    out.deta.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        R ex = exp(xs[k]);
        out.rho[k] = R(1) / ex;
        out.eta[k] = states[k].eta;
        out.deta[k] = -ex * states[k].etax;
    }
    return out;
}

template <class R> struct MatchOptions {
    R midpoint = R(0.5);  // rho where the branches meet
    R rho0 = R(0);        // outer start; 0 = adaptive placement
    R ode_tol = R(0);     // 0 = lane default
    int max_order = 0;    // 0 = precision-scaled default
};

// mismatch of logarithmic rho-derivatives at the midpoint; analytic in
// lambda away from midpoint zeros of eta, vanishes exactly at quasinormal
// frequencies. A midpoint hitting a zero of either branch is shifted
// outward by 0.05 and retried.
template <class R>
complex_t<R> qnm_match(const EquivariantIndex& idx, int N, const StaticSolution<R>& sol,
                       const complex_t<R>& lambda, const MatchOptions<R>& opt = {}) {
    using C = complex_t<R>;
    using std::abs;
    using std::exp;
    using std::log;
    if (sol.idx.ell != idx.ell || sol.N != N)
        throw Error("domain", "static solution does not belong to (l, N)");
    const R tol = opt.ode_tol > R(0) ? opt.ode_tol : default_phase_tol<R>();
    const int order = opt.max_order > 0 ? opt.max_order : detail::default_series_order<R>(idx.ell);
    // the vacuum series terminates, so it is exact at any radius; starting
    // just outside the midpoint keeps the inward noise amplification at bay
    const R rho0 = opt.rho0 > R(0)
                       ? opt.rho0
                       : (sol.b == R(0) ? std::min(R(0.45), R(0.9) * opt.midpoint)
                                        : detail::adaptive_rho0<R>(lambda));
    auto series = build_series(idx, N, sol.b, lambda, order);
    R x0;
    const auto yo0 = detail::outer_seed(sol, series, rho0, x0);
    const auto yi0 = detail::inner_seed(sol);
    R mid = opt.midpoint;
    for (int attempt = 0; attempt < 4; ++attempt) {
        const R xm = log(R(1) / mid);
        if (!(xm > R(0) && xm < x0))
            throw Error("domain", "midpoint must lie between rho0 and 1");
        auto si = detail::eta_states(sol, lambda, yi0, R(0), {xm}, tol).front();
        auto so = detail::eta_states(sol, lambda, yo0, x0, {xm}, tol).front();
        const R scale_i = abs(si.eta) + abs(si.etax);
        const R scale_o = abs(so.eta) + abs(so.etax);
        if (abs(si.eta) < R(1e-9) * scale_i || abs(so.eta) < R(1e-9) * scale_o) {
            mid += R(0.05);
            continue;
        }
        // d/drho = -e^x d/dx, inner minus outer
        return exp(xm) * (so.etax / so.eta - si.etax / si.eta);
    }
    throw Error("non-convergence", "midpoint keeps landing on a zero of eta");
}

template <class R> struct QnmMode {
    EquivariantIndex idx;
    int N = 0;
    int j = 0;  // position in the damping-ordered family, 0 = fundamental
    ComplexFrequency<R> freq;
    std::vector<R> r;
    std::vector<complex_t<R>> psi;  // eigenfunction samples, psi'(1) = 1
    R residual{};                   // |mismatch| at the converged frequency
};

template <class R> R default_qnm_tol() { return R(1e-10); }
template <> inline qreal default_qnm_tol<qreal>() { return qreal("1e-20"); }

// complex secant iteration on qnm_match; the eigenfunction is rebuilt from
// the inner branch through psi = eta e^{i lambda r}/r
template <class R>
QnmMode<R> qnm_solve(const EquivariantIndex& idx, int N, const StaticSolution<R>& sol,
                     const complex_t<R>& guess, R tol = default_qnm_tol<R>(),
                     const MatchOptions<R>& opt = {}) {
    using C = complex_t<R>;
    using std::abs;
    using std::exp;
    using std::log;
    C l0 = guess;
    C l1 = guess + C(R(1e-4), R(-1e-4)) * (R(1) + abs(guess));
    C f0 = qnm_match(idx, N, sol, l0, opt);
    C f1 = qnm_match(idx, N, sol, l1, opt);
    std::ostringstream trace;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        if (f1 == f0) {
            l1 += C(R(1e-7), R(1e-7)) * (R(1) + abs(l1));
            f1 = qnm_match(idx, N, sol, l1, opt);
            continue;
        }
        C l2 = l1 - f1 * (l1 - l0) / (f1 - f0);
        if (!detail::finite_c(l2) || abs(l2) > R(1e3))
            throw Error("non-convergence", "secant escaped: " + trace.str());
        l0 = l1;
        f0 = f1;
        l1 = l2;
        f1 = qnm_match(idx, N, sol, l1, opt);
        trace << "it " << it << " lambda (" << to_double(l1.real()) << ", "
              << to_double(l1.imag()) << ") |F| " << to_double(abs(f1)) << "\n";
        if (abs(l1 - l0) < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw Error("non-convergence", "secant stalled:\n" + trace.str());
    if (!(l1.imag() < R(0)))
        throw Error("spurious-root", "converged to a non-damped frequency (" +
                                         format_real(l1.real()) + ", " + format_real(l1.imag()) +
                                         ")");
    QnmMode<R> mode{idx, N, 0, ComplexFrequency<R>::from_lambda(l1), {}, {}, abs(f1)};
    const RadialGrid<R> grid(R(0.02), 201);
    std::vector<R> xs(grid.n);
    for (std::size_t k = 0; k < grid.n; ++k) xs[k] = log(grid.r(k));
    xs[0] = R(0);
    const R tol_ode = opt.ode_tol > R(0) ? opt.ode_tol : default_phase_tol<R>();
    auto states = detail::eta_states(sol, l1, detail::inner_seed(sol), R(0), xs, tol_ode);
    mode.r.resize(grid.n);
    mode.psi.resize(grid.n);
    const C i_unit(R(0), R(1));
    for (std::size_t k = 0; k < grid.n; ++k) {
        mode.r[k] = grid.r(k);
        mode.psi[k] = states[k].eta * exp(i_unit * l1 * (grid.r(k) - R(1))) / grid.r(k);
    }
    return mode;
}

template <class R> struct ScanRegion {
    R omega_lo{}, omega_hi{};  // real part window
    R gamma_lo{}, gamma_hi{};  // damping window, negative values reach the upper half-plane
    bool contains(const complex_t<R>& l) const {
        using std::abs;
        const R om = l.real(), ga = -l.imag();
        const R slack = R(1e-9) * (R(1) + abs(l));
        return om >= omega_lo - slack && om <= omega_hi + slack && ga >= gamma_lo - slack &&
               ga <= gamma_hi + slack;
    }
};

// seeds secant solves from the vacuum zeros, the Airy estimate and a coarse
// grid; keeps deduplicated in-region roots that survive a perturbed re-solve
// (moved matching point and outer start), which weeds out series-noise roots
template <class R>
std::vector<QnmMode<R>> qnm_scan(const EquivariantIndex& idx, int N, const StaticSolution<R>& sol,
                                 const ScanRegion<R>& region, R tol = default_qnm_tol<R>(),
                                 int nx = 7, int ny = 5) {
    using C = complex_t<R>;
    using std::abs;
    std::vector<C> seeds;
    for (auto& f : hankel_qnm<R>(idx)) seeds.push_back(f.lambda());
    seeds.push_back(airy_estimate<R>(idx).lambda());
    for (int i = 0; i < nx; ++i)
        for (int k = 0; k < ny; ++k) {
            R om = region.omega_lo +
                   (R(i) + R(0.5)) * (region.omega_hi - region.omega_lo) / R(nx);
            R ga = region.gamma_lo +
                   (R(k) + R(0.5)) * (region.gamma_hi - region.gamma_lo) / R(ny);
            seeds.push_back(C(om, -ga));
        }
    std::vector<QnmMode<R>> pool;
    for (const C& seed : seeds) {
        QnmMode<R>* found = nullptr;
        try {
            auto mode = qnm_solve(idx, N, sol, seed, tol);
            if (!region.contains(mode.freq.lambda())) continue;
            bool dup = false;
            for (auto& kept : pool)
                if (abs(kept.freq.lambda() - mode.freq.lambda()) <
                    R(1e-6) * (R(1) + abs(mode.freq.lambda()))) {
                    dup = true;
                    break;
                }
            if (!dup) {
                pool.push_back(std::move(mode));
                found = &pool.back();
            }
        } catch (const Error&) {
            continue;
        }
        (void)found;
    }
    MatchOptions<R> pert;
    pert.midpoint = R(0.55);
    pert.rho0 = sol.b == R(0) ? R(0.4) : R(0.08);
    std::vector<QnmMode<R>> out;
    for (auto& m : pool) {
        try {
            auto again = qnm_solve(idx, N, sol, m.freq.lambda(), tol, pert);
            if (abs(again.freq.lambda() - m.freq.lambda()) > R(0.01)) continue;
        } catch (const Error&) {
            continue;
        }
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), [](const QnmMode<R>& a, const QnmMode<R>& b) {
        using std::abs;
        if (a.freq.gamma != b.freq.gamma) return a.freq.gamma < b.freq.gamma;
        R aa = abs(a.freq.omega), ab = abs(b.freq.omega);
        if (aa != ab) return aa < ab;
        return a.freq.omega < b.freq.omega;
    });
    for (std::size_t k = 0; k < out.size(); ++k) out[k].j = static_cast<int>(k);
    return out;
}

template <class R> struct ZeroModeReport {
    R residual{};         // max |eqpsi at lambda = 0| applied to r u'
    int sign_changes = 0;  // zeros of r u' seen on the grid
    R at_unit{};          // psi(1) = u'(1) = a
};

// the generator of the scale-like symmetry broken by the boundary: r du/dr
// solves the lambda = 0 linearization; checked discretely on the grid
template <class R>
ZeroModeReport<R> zero_mode_residual(const StaticSolution<R>& sol, const RadialGrid<R>& grid) {
    using std::cos;
    using std::exp;
    std::vector<R> u, du;
    sol.profile_on(grid, u, du);
    const std::size_t n = grid.n;
    std::vector<R> psi(n);
    for (std::size_t i = 0; i < n; ++i) psi[i] = grid.r(i) * du[i];
    const R L(sol.idx.L());
    ZeroModeReport<R> rep;
    rep.at_unit = psi[0];
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (psi[i] * psi[i + 1] < R(0)) ++rep.sign_changes;
    // the profile handoff to the manifold series leaves a jump of the order
    // of the shooting tolerance; harmless in the samples but the divided
    // second difference turns it into jump/h^2, so stencils that straddle
    // the handoff are left out of the residual maximum
    const R r_switch = exp(sol.x_switch);
    for (std::size_t i = 0; i < n; ++i) {
        const R r = grid.r(i);
        R dist = r - r_switch;
        if (dist < R(0)) dist = -dist;
        if (dist <= R(3) * grid.h) continue;
        const R d1 = deriv1_at(psi, i, n, grid.h);
        const R d2 = deriv2_at(psi, i, n, grid.h);
        R res = d2 + R(2) / r * d1 - L / (r * r) * cos(R(2) * u[i]) * psi[i];
        if (res < R(0)) res = -res;
        if (res > rep.residual) rep.residual = res;
    }
    return rep;
}

}  // namespace ewm
