#pragma once

// Static solutions u_{l,N}(r) by shooting in the pendulum picture: with
// x = ln r and v(x) = u(e^x) the static equation becomes
//   v'' + v' - (1/2) l(l+1) sin(2v) = 0,
// a pendulum with constant friction. The degree-N solution is the separatrix
// from (0,a) into the saddle (N pi, 0); a is found by bisection on the capture
// basin, b parametrizes the stable manifold v = N pi - b e^{-(l+1)x} + ...

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

#include "ewm/model.hpp"
#include "ewm/ode.hpp"
#include "ewm/precision.hpp"

namespace ewm {

template <class R> struct PhasePoint {
    R x, v, w;  // w = dv/dx
};

enum class Classification { below, above, converged };

template <class R> struct PhaseTrajectory {
    std::vector<PhasePoint<R>> pts;
    bool captured = false;  // pendulum energy fell below the barrier level
    int well = 0;           // floor(v/pi) at capture
};

template <class R> struct PendulumRhs {
    R half_L;
    void operator()(const std::array<R, 2>& y, std::array<R, 2>& dy, R) const {
        using std::sin;
        dy[0] = y[1];
        dy[1] = -y[1] + half_L * sin(R(2) * y[0]);
    }
};

// H = w^2/2 + (L/4) cos 2v decreases monotonically (dH/dx = -w^2); once it
// drops below the barrier value L/4 the state is confined to one well forever.
template <class R> R pendulum_energy(const R& v, const R& w, const EquivariantIndex& idx) {
    using std::cos;
    const R L(idx.L());
    return w * w / R(2) + L / R(4) * cos(R(2) * v);
}

template <class R> R default_phase_tol() { return R(1e-13); }
template <> inline qreal default_phase_tol<qreal>() { return qreal("1e-30"); }

template <class R>
PhaseTrajectory<R> integrate_phase(const R& a, const EquivariantIndex& idx, const R& x_max,
                                   R tol = default_phase_tol<R>()) {
    using std::isfinite;
    const R L(idx.L());
    PhaseTrajectory<R> traj;
    if (a == R(0)) {
        traj.pts.push_back({R(0), R(0), R(0)});
        traj.pts.push_back({x_max, R(0), R(0)});
        return traj;
    }
    std::array<R, 2> y{R(0), a};
    PendulumRhs<R> rhs{L / R(2)};
    // cap the step so the saddle approach is densely sampled for b stations
    R dxmax = R(0.25) / R(idx.ell + 1);
    adaptive_drive<R>(rhs, y, R(0), x_max, tol, dxmax, [&](R x, const std::array<R, 2>& s) {
        if (!(isfinite(to_double(s[0])) && isfinite(to_double(s[1]))))
            throw Error("integration-failure", "pendulum state not finite");
        traj.pts.push_back({x, s[0], s[1]});
        if (!traj.captured) {
            R H = pendulum_energy(s[0], s[1], idx);
            if (H < L / R(4) * (R(1) - R(16) * eps<R>())) {
                traj.captured = true;
                traj.well = static_cast<int>(std::floor(to_double(s[0] / pi<R>())));
            }
        }
    });
    return traj;
}

template <class R>
Classification classify_endpoint(const PhaseTrajectory<R>& traj, int N, R conv_tol = R(1e-3)) {
    using std::abs;
    if (traj.pts.empty()) throw Error("domain", "empty trajectory");
    if (traj.captured) return traj.well <= N - 1 ? Classification::below : Classification::above;
    const auto& e = traj.pts.back();
    const R Npi = R(N) * pi<R>();
    if (abs(e.v - Npi) + abs(e.w) < conv_tol) return Classification::converged;
    // uncaptured and still moving fast: the side of N pi could flip later
    if (abs(e.w) > R(2) * pi<R>())
        throw Error("needs-longer-integration", "endpoint still in fast transit");
    return e.v < Npi ? Classification::below : Classification::above;
}

// sign of (a - a_separatrix) read off a finished trajectory: captured wells
// decide outright; otherwise the state hugs the separatrix network and the
// side of N pi is the side of the shooting parameter. The bisection uses this
// instead of classify_endpoint so the "converged" band does not stop it early.
template <class R> int departure_side(const PhaseTrajectory<R>& traj, int N) {
    if (traj.captured) return traj.well <= N - 1 ? -1 : +1;
    return traj.pts.back().v < R(N) * pi<R>() ? -1 : +1;
}

// linearization eigenvalues of X = (w, -w + (L/2) sin 2v) at an equilibrium
template <class R>
std::pair<complex_t<R>, complex_t<R>> phase_eigenvalues(const PhasePoint<R>& p,
                                                        const EquivariantIndex& idx) {
    using std::abs;
    using std::sqrt;
    using C = complex_t<R>;
    R m = p.v / (pi<R>() / R(2));
    long mr = std::lround(to_double(m));
    if (abs(p.w) > R(1e-12) || abs(m - R(static_cast<double>(mr))) > R(1e-9))
        throw Error("domain", "not an equilibrium point");
    if (mr % 2 == 0) return {C(R(idx.ell), R(0)), C(R(-idx.ell - 1), R(0))};
    R s = sqrt(R(4 * idx.L()) - R(1));
    return {C(R(-0.5), s / R(2)), C(R(-0.5), -s / R(2))};
}

// stable-manifold series: N pi - v = sum_k u_k E^(2k-1), E = e^{-(l+1)x} = r^{-(l+1)}.
// Substituting into the pendulum equation determines u_k recursively; the
// linear factor at order m is (l+1)m[(l+1)m - 1] - l(l+1), nonzero for odd m >= 3.
template <class R>
std::vector<R> manifold_coefficients(const EquivariantIndex& idx, const R& b, int n_terms) {
    const R L(idx.L());
    const int mmax = 2 * n_terms - 1;
    std::vector<R> phi(mmax + 1, R(0));  // phi[m] = coefficient of E^m
    phi[1] = b;
    auto mul = [&](const std::vector<R>& p, const std::vector<R>& q) {
        std::vector<R> out(mmax + 1, R(0));
        for (int i = 0; i <= mmax; ++i) {
            if (p[i] == R(0)) continue;
            for (int j = 0; i + j <= mmax; ++j)
                if (q[j] != R(0)) out[i + j] += p[i] * q[j];
        }
        return out;
    };
    std::vector<R> phi2 = mul(phi, phi);
    for (int m = 3; m <= mmax; m += 2) {
        // (L/2) sin 2phi - L phi = sum_{j>=1} (L/2) (-1)^j 2^{2j+1}/(2j+1)! phi^{2j+1};
        // its E^m coefficient involves phi-coefficients of order < m only
        R rhs(0);
        std::vector<R> pw = phi;
        R coeff(2);  // 2^{2j+1}/(2j+1)! at j=0
        for (int j = 1; 2 * j + 1 <= m; ++j) {
            pw = mul(pw, phi2);
            coeff *= R(4) / (R(2 * j) * R(2 * j + 1));
            R sign = (j % 2 == 0) ? R(1) : R(-1);
            rhs += L / R(2) * sign * coeff * pw[m];
        }
        R mm = R(m) * R(idx.ell + 1);
        phi[m] = rhs / (mm * (mm - R(1)) - L);
        phi2 = mul(phi, phi);
    }
    std::vector<R> u;
    for (int m = 1; m <= mmax; m += 2) u.push_back(phi[m]);
    return u;
}

// u = N pi - sum_k c_k r^{-p_k}, powers p_k = (2k-1)(l+1)
template <class R> struct AsymptoticExpansion {
    std::vector<std::pair<R, R>> terms;  // (power p_k, coefficient c_k)
};

template <class R>
AsymptoticExpansion<R> u_expansion(const EquivariantIndex& idx, int /*N*/, const R& b, int order) {
    if (order < 1) throw Error("domain", "order must be >= 1");
    int n_terms = (order + 1) / 2;
    auto u = manifold_coefficients(idx, b, n_terms);
    AsymptoticExpansion<R> ex;
    for (int k = 0; k < n_terms; ++k)
        ex.terms.emplace_back(R((2 * k + 1) * (idx.ell + 1)), u[k]);
    return ex;
}

template <class R> struct BStationPolicy {
    static R lo() { return R(0.02); }
    static R hi() { return R(0.2); }
    static constexpr int n_fit = 5;
    static R agree() { return R(1e-6); }
};
template <> struct BStationPolicy<qreal> {
    static qreal lo() { return qreal("0.005"); }
    static qreal hi() { return qreal("0.2"); }
    static constexpr int n_fit = 7;
    static qreal agree() { return qreal("1e-11"); }
};

// b from the trajectory tail. Plain readings b(x) = (N pi - v) e^{(l+1)x}
// carry relative corrections that are a power series in phi^2 (phi = N pi - v),
// so fitting several stations against {1, phi^2, phi^4, ...} and keeping the
// constant removes them. Stations sit at moderate phi: late enough for the fit
// to kill the corrections, early enough that the shooting error has not been
// amplified along the saddle's unstable direction.
template <class R>
R asymptotic_b(const PhaseTrajectory<R>& traj, const EquivariantIndex& idx, int N,
               R agree_tol = BStationPolicy<R>::agree()) {
    using std::abs;
    using std::exp;
    const R Npi = R(N) * pi<R>();
    struct Station {
        R phi, braw;
    };
    std::vector<Station> st;
    // keep only the first monotone descent through the window: after the
    // closest approach the trajectory departs along the unstable direction and
    // re-enters the window with the shooting error fully amplified
    for (const auto& p : traj.pts) {
        R phi = Npi - p.v;
        if (phi >= BStationPolicy<R>::hi()) continue;
        if (phi <= BStationPolicy<R>::lo()) {
            if (!st.empty()) break;
            continue;
        }
        if (!st.empty() && phi >= st.back().phi) break;
        st.push_back({phi, phi * exp(R(idx.ell + 1) * p.x)});
    }
    const int nf = BStationPolicy<R>::n_fit;
    if (static_cast<int>(st.size()) < nf + 2)
        throw Error("insufficient-convergence", "trajectory tail too short for b extraction");
    auto fit = [&](double f0, double f1, int n) {
        // n stations spread over [f0,f1] of the list; solve the Vandermonde
        // system in phi^2 and return the constant term
        std::vector<std::vector<R>> A(n, std::vector<R>(n + 1));
        for (int i = 0; i < n; ++i) {
            double f = f0 + (f1 - f0) * (n == 1 ? 0.0 : double(i) / (n - 1));
            const Station& s = st[static_cast<std::size_t>(f * (st.size() - 1) + 0.5)];
            R p2 = s.phi * s.phi, pw = R(1);
            for (int k = 0; k < n; ++k) {
                A[i][k] = pw;
                pw *= p2;
            }
            A[i][n] = s.braw;
        }
        for (int c = 0; c < n; ++c) {  // partial-pivot elimination
            int piv = c;
            for (int r = c + 1; r < n; ++r)
                if (abs(A[r][c]) > abs(A[piv][c])) piv = r;
            std::swap(A[c], A[piv]);
            for (int r = 0; r < n; ++r) {
                if (r == c) continue;
                R f = A[r][c] / A[c][c];
                for (int k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
            }
        }
        return A[0][n] / A[0][0];
    };
    R b1 = fit(0.0, 1.0, nf);
    R b2 = fit(0.08, 0.92, nf - 1);  // different stations and truncation order
    if (abs(b1 - b2) > agree_tol * abs(b1))
        throw Error("insufficient-convergence",
                    "b stations disagree: " + format_real(b1) + " vs " + format_real(b2));
    return b1;
}

template <class R> constexpr int series_terms() { return 12; }
template <> constexpr int series_terms<qreal>() { return 20; }

template <class R> struct StaticSolution {
    EquivariantIndex idx;
    int N = 0;
    R a{}, b{};
    R x_switch{};           // series takes over beyond this x = ln r
    std::vector<R> series;  // stable-manifold coefficients u_k

    // (v, w) = (u, r u') at x = ln r from the stable-manifold series
    std::pair<R, R> series_vw(const R& x) const {
        using std::exp;
        const R k1 = R(idx.ell + 1);
        R E = exp(-k1 * x);
        R E2 = E * E;
        R phi(0), dphi(0);
        R Epow = E;
        for (std::size_t k = 0; k < series.size(); ++k) {
            R m = R(2 * static_cast<int>(k) + 1);
            phi += series[k] * Epow;
            dphi -= series[k] * k1 * m * Epow;
            Epow *= E2;
        }
        return {R(N) * pi<R>() - phi, -dphi};
    }

    AsymptoticExpansion<R> expansion(int order) const {
        if (order < 1) throw Error("domain", "order must be >= 1");
        std::size_t n_terms = static_cast<std::size_t>((order + 1) / 2);
        std::vector<R> u = n_terms <= series.size()
                               ? series
                               : manifold_coefficients(idx, b, static_cast<int>(n_terms));
        AsymptoticExpansion<R> ex;
        for (std::size_t k = 0; k < n_terms; ++k)
            ex.terms.emplace_back(R((2 * static_cast<int>(k) + 1) * (idx.ell + 1)), u[k]);
        return ex;
    }

    // fills (u, w) = (u, r u') at ascending targets x = ln r: forward pendulum
    // integration up to x_switch, manifold series beyond. The handoff keeps the
    // amplified shooting error out of the far field.
    void sample(const std::vector<R>& xs, std::vector<R>& u, std::vector<R>& w,
                R tol = default_phase_tol<R>()) const {
        u.resize(xs.size());
        w.resize(xs.size());
        if (N == 0 || a == R(0)) {
            std::fill(u.begin(), u.end(), R(0));
            std::fill(w.begin(), w.end(), R(0));
            return;
        }
        PendulumRhs<R> rhs{R(idx.L()) / R(2)};
        std::array<R, 2> y{R(0), a};
        R x(0);
        std::size_t i = 0;
        for (; i < xs.size() && xs[i] <= x_switch; ++i) {
            if (xs[i] < x) throw Error("domain", "sample targets must be ascending from 0");
            if (xs[i] > x) {
                adaptive_drive<R>(rhs, y, x, xs[i], tol, R(0.5), [](R, const std::array<R, 2>&) {});
                x = xs[i];
            }
            u[i] = y[0];
            w[i] = y[1];
        }
        for (; i < xs.size(); ++i) {
            auto vw = series_vw(xs[i]);
            u[i] = vw.first;
            w[i] = vw.second;
        }
    }

    // profile on a radial grid; du = u'(r) = w/r
    void profile_on(const RadialGrid<R>& grid, std::vector<R>& u, std::vector<R>& du) const {
        using std::log;
        std::vector<R> xs(grid.n), w;
        for (std::size_t i = 0; i < grid.n; ++i) xs[i] = log(grid.r(i));
        xs[0] = R(0);
        sample(xs, u, w);
        du.resize(grid.n);
        for (std::size_t i = 0; i < grid.n; ++i) du[i] = w[i] / grid.r(i);
    }
};

template <class R> R default_shoot_tol() { return R(1e-10); }
template <> inline qreal default_shoot_tol<qreal>() { return qreal("1e-26"); }

namespace detail {

// evaluate the manifold series (v, w) at x for a trial b
template <class R>
std::array<R, 2> manifold_vw(const EquivariantIndex& idx, int N, const R& b, const R& x) {
    using std::exp;
    auto u = manifold_coefficients(idx, b, series_terms<R>());
    const R k1 = R(idx.ell + 1);
    R E = exp(-k1 * x), E2 = E * E;
    R phi(0), dphi(0), Epow = E;
    for (std::size_t k = 0; k < u.size(); ++k) {
        phi += u[k] * Epow;
        dphi -= u[k] * k1 * R(2 * static_cast<int>(k) + 1) * Epow;
        Epow *= E2;
    }
    return {R(N) * pi<R>() - phi, -dphi};
}

// solve v(0; b) = 0 by secant on backward integration from the series: the
// start point sits where the series is exact at working precision and close
// enough to r = 1 that backward error growth is harmless. Refines a double
// quality seed to full working precision without deep bisection.
template <class R>
void polish_from_series(StaticSolution<R>& sol) {
    using std::abs;
    using std::log;
    const EquivariantIndex idx = sol.idx;
    PendulumRhs<R> rhs{R(idx.L()) / R(2)};
    const R x_s = log(sol.b / R(0.05)) / R(idx.ell + 1);
    auto launch = [&](const R& b) {
        auto y = manifold_vw(idx, sol.N, b, x_s);
        adaptive_drive<R>(rhs, y, x_s, R(0), default_phase_tol<R>(), R(0.25),
                          [](R, const std::array<R, 2>&) {});
        return y;  // (v(0), w(0))
    };
    R b0 = sol.b, b1 = sol.b * (R(1) + R(1e-9));
    R g0 = launch(b0)[0];
    std::array<R, 2> y1 = launch(b1);
    R g1 = y1[0];
    for (int it = 0; it < 60; ++it) {
        if (g1 == g0) break;
        R b2 = b1 - g1 * (b1 - b0) / (g1 - g0);
        b0 = b1;
        g0 = g1;
        b1 = b2;
        y1 = launch(b1);
        g1 = y1[0];
        if (abs(b1 - b0) <= R(4) * eps<R>() * abs(b1)) break;
    }
    if (abs(b1 - sol.b) > R(1e-5) * abs(sol.b))
        throw Error("insufficient-convergence", "series polish moved b away from the seed");
    sol.b = b1;
    sol.a = y1[1];
    sol.series = manifold_coefficients(idx, sol.b, series_terms<R>());
}

}  // namespace detail

template <class R = double>
StaticSolution<R> shoot_static(const EquivariantIndex& idx, int N, R tol = default_shoot_tol<R>()) {
    using std::abs;
    using std::log;
    using std::max;
    if (N < 0) {
        auto s = shoot_static(idx, -N, tol);
        s.N = -s.N;
        s.a = -s.a;
        s.b = -s.b;
        for (auto& c : s.series) c = -c;
        return s;
    }
    StaticSolution<R> sol{idx, N};
    if (N == 0) return sol;
    // bisect somewhat past the requested tolerance: the b stations see the
    // residual shooting error amplified by e^{l x}, so spare digits are cheap
    // insurance there
    const R bis = max(tol * R(1e-2), R(1e-12));
    const R ode_tol = R(1e-13);
    const R x_max = max(R(40) / R(idx.ell + 1), (log(R(1) / bis) + R(14)) / R(idx.ell));
    auto side = [&](const R& a) {
        return departure_side(integrate_phase(a, idx, x_max, ode_tol), N);
    };
    R lo(0);  // a = 0 stays at the origin: below
    R hi = R(4 * (N + 1) * (idx.ell + 2));
    int grow = 0;
    while (side(hi) < 0) {
        hi *= R(2);
        if (++grow > 12) throw Error("bracket-failure", "no upper bracket for a");
    }
    while (hi - lo > bis) {
        R mid = lo + (hi - lo) / R(2);
        (side(mid) < 0 ? lo : hi) = mid;
    }
    sol.a = lo + (hi - lo) / R(2);
    auto traj = integrate_phase(sol.a, idx, x_max, ode_tol);
    sol.b = asymptotic_b(traj, idx, N, R(1e-6));
    sol.series = manifold_coefficients(idx, sol.b, series_terms<R>());
    // the bisection floor is set by double-grade integration; beyond it,
    // polish (a, b) against the manifold series at full working precision
    if (eps<R>() < R(1e-18)) detail::polish_from_series(sol);
    R phi_sw = R(0.2);
    if constexpr (std::is_same_v<R, qreal>) phi_sw = qreal("0.05");
    sol.x_switch = log(sol.b / phi_sw) / R(idx.ell + 1);
    return sol;
}

enum class ApproxVariant { two_over_b, half_over_b };

// closed-form profile guess for N=1, exact at both ends of the domain
template <class R>
R approx_profile(const EquivariantIndex& idx, const R& b, const R& x,
                 ApproxVariant variant = ApproxVariant::two_over_b) {
    using std::atan;
    using std::exp;
    if (x < R(0)) throw Error("domain", "x must be >= 0");
    R pref = variant == ApproxVariant::two_over_b ? R(2) / b : R(1) / (R(2) * b);
    return R(2) * atan(pref * (exp(R(idx.ell + 1) * x) - exp(-R(idx.ell + 2) * x)));
}

}  // namespace ewm
