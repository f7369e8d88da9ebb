#pragma once

// Asymptotics out of observer time series: damped-sinusoid fits
// (Levenberg-Marquardt with guesses from zero crossings and log-peak
// slopes), classical least-squares Prony, power-law tail exponents with a
// stationarity-based automatic window, and the ringdown profile comparison
// against a quasinormal eigenfunction.
//
// Conventions. A mode is Re(A e^{-i lambda t}) with lambda = Omega - i Gamma,
// matching the spectrum module. Damped-sinusoid amplitude and phase are
// referenced to absolute time t; Prony amplitudes are referenced to the first
// sample inside the window (the decayed-out factor e^{i lambda t1} would
// overflow long windows), with the realized window stored in the result.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ewm/evolve.hpp"
#include "ewm/poly.hpp"
#include "ewm/spectrum.hpp"

namespace ewm {

template <class R> struct TimeWindow {
    R t1{}, t2{};
};

template <class R> struct DampedSinusoidFit {
    R amplitude{};  // > 0
    R omega{};      // >= 0
    R gamma{};
    R phase{};  // in (-pi, pi]
    TimeWindow<R> window;
    R residual{};  // rms over the window
    int iterations = 0;
};

template <class R> struct PronyMode {
    complex_t<R> amplitude;  // contributes Re(A e^{-i lambda (t - t1)})
    complex_t<R> lambda;     // Omega - i Gamma, Omega >= 0
};

template <class R> struct PronyResult {
    std::vector<PronyMode<R>> modes;  // Gamma ascending, conjugate pairs merged
    int order = 0;
    TimeWindow<R> window;
    R residual{};   // rms of the reconstruction over the window
    R condition{};  // recurrence-matrix condition estimate (R-diagonal ratio)
    bool rank_warning = false;
};

template <class R> struct TailFit {
    R gamma{};
    R amplitude{};
    TimeWindow<R> window;
    R goodness{};                // rms of log|u| about the fitted line
    std::vector<R> local_gamma;  // running -dlog|u|/dlog t at interior samples
};

namespace detail {

// min ||A x - b||, A row-major m x n with m >= n, Householder QR. cond
// receives max|R_kk|/min|R_kk|; an exactly dependent column gets a zero
// pivot (cond = inf) and its solution component is set to zero.
template <class R>
std::vector<R> lstsq(std::vector<R> a, std::vector<R> b, std::size_t m, std::size_t n,
                     R* cond = nullptr) {
    using std::abs;
    using std::sqrt;
    if (n == 0 || m < n || a.size() != m * n || b.size() != m)
        throw Error("domain", "lstsq shape mismatch");
    std::vector<R> diag(n, R(0));
    for (std::size_t k = 0; k < n; ++k) {
        R nrm(0);
        for (std::size_t i = k; i < m; ++i) nrm += a[i * n + k] * a[i * n + k];
        nrm = sqrt(nrm);
        if (nrm == R(0)) continue;  // dependent column, pivot stays zero
        const R akk = a[k * n + k];
        const R alpha = akk >= R(0) ? -nrm : nrm;
        a[k * n + k] = akk - alpha;  // column now holds the Householder vector
        const R beta = R(1) / (nrm * (nrm + abs(akk)));
        for (std::size_t j = k + 1; j < n; ++j) {
            R s(0);
            for (std::size_t i = k; i < m; ++i) s += a[i * n + k] * a[i * n + j];
            s *= beta;
            for (std::size_t i = k; i < m; ++i) a[i * n + j] -= s * a[i * n + k];
        }
        R s(0);
        for (std::size_t i = k; i < m; ++i) s += a[i * n + k] * b[i];
        s *= beta;
        for (std::size_t i = k; i < m; ++i) b[i] -= s * a[i * n + k];
        diag[k] = alpha;
    }
    if (cond) {
        R dmax(0), dmin = std::numeric_limits<R>::infinity();
        for (const R& d : diag) {
            dmax = std::max(dmax, abs(d));
            dmin = std::min(dmin, abs(d));
        }
        *cond = dmin > R(0) ? dmax / dmin : std::numeric_limits<R>::infinity();
    }
    std::vector<R> x(n, R(0));
    for (std::size_t k = n; k-- > 0;) {
        if (diag[k] == R(0)) continue;
        R s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a[k * n + j] * x[j];
        x[k] = s / diag[k];
    }
    return x;
}

// slope and intercept of y ~ a + b x (centered one-column regression)
template <class R>
std::pair<R, R> line_fit(const std::vector<R>& x, const std::vector<R>& y) {
    const std::size_t m = x.size();
    R xm(0), ym(0);
    for (std::size_t i = 0; i < m; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= R(m);
    ym /= R(m);
    R num(0), den(0);
    for (std::size_t i = 0; i < m; ++i) {
        num += (x[i] - xm) * (y[i] - ym);
        den += (x[i] - xm) * (x[i] - xm);
    }
    const R b = den > R(0) ? num / den : R(0);
    return {ym - b * xm, b};
}

// [lo, hi) of samples with t inside the window; the window must lie inside
// the series up to half a sample of slack
template <class R>
std::pair<std::size_t, std::size_t> window_span(const TimeSeries<R>& s,
                                                const TimeWindow<R>& w) {
    if (s.times.size() < 2 || s.times.size() != s.values.size())
        throw Error("bad-window", "series too short or malformed");
    const R dt = s.times[1] - s.times[0];
    const R slack = dt / R(2);
    if (!(w.t2 > w.t1)) throw Error("bad-window", "empty fit window");
    if (w.t1 < s.times.front() - slack || w.t2 > s.times.back() + slack)
        throw Error("bad-window", "fit window extends outside the series");
    std::size_t lo = 0, hi = s.times.size();
    while (lo < hi && s.times[lo] < w.t1 - slack / R(2)) ++lo;
    while (hi > lo && s.times[hi - 1] > w.t2 + slack / R(2)) --hi;
    if (hi - lo < 2) throw Error("bad-window", "fewer than two samples in window");
    return {lo, hi};
}

template <class R> complex_t<R> from_polar(const R& rho, const R& th) {
    using std::cos;
    using std::sin;
    return complex_t<R>(rho * cos(th), rho * sin(th));
}

template <class R> R wrap_phase(R phi) {
    using std::floor;
    const R tp = R(2) * pi<R>();
    phi -= tp * floor((phi + pi<R>()) / tp);
    if (phi <= -pi<R>()) phi += tp;
    return phi;
}

}  // namespace detail

// Nonlinear least squares for A e^{-Gamma t} cos(Omega t + phi). With
// omega_zero the frequency and phase are pinned to zero and the model is the
// signed exponential (log-linear regression seeds it, LM polishes).
template <class R>
DampedSinusoidFit<R> fit_damped_sinusoid(const TimeSeries<R>& series,
                                         const TimeWindow<R>& window,
                                         bool omega_zero = false) {
    using std::abs;
    using std::atan2;
    using std::cos;
    using std::exp;
    using std::log;
    using std::sin;
    using std::sqrt;
    const auto [lo, hi] = detail::window_span(series, window);
    const std::size_t m = hi - lo;
    if (m < (omega_zero ? std::size_t(20) : std::size_t(10)))
        throw Error("bad-window", "too few samples for a damped-sinusoid fit");
    const R t1 = series.times[lo];
    std::vector<R> tau(m), y(m);
    R ymax(0);
    std::size_t imax = 0;
    for (std::size_t i = 0; i < m; ++i) {
        tau[i] = series.times[lo + i] - t1;
        y[i] = series.values[lo + i];
        if (abs(y[i]) > ymax) {
            ymax = abs(y[i]);
            imax = i;
        }
    }
    if (ymax == R(0)) throw Error("fit-failure", "signal is identically zero in the window");
    const R span = tau.back();

    // initial guesses: Omega from zero-crossing spacing, Gamma from the
    // log-slope through |y| peaks, then a linear solve for the amplitude
    R om0(0), ga0(0);
    if (!omega_zero) {
        std::vector<R> cross;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            if (y[i] == R(0)) cross.push_back(tau[i]);
            else if ((y[i] > R(0)) != (y[i + 1] > R(0)) && y[i + 1] != R(0))
                cross.push_back(tau[i] + (tau[i + 1] - tau[i]) * y[i] / (y[i] - y[i + 1]));
        }
        om0 = cross.size() >= 2
                  ? pi<R>() * R(cross.size() - 1) / (cross.back() - cross.front())
                  : pi<R>() / span;
    }
    {
        std::vector<R> tp, lp;
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const R a = abs(y[i]);
            if (a > R(0) && a >= abs(y[i - 1]) && a >= abs(y[i + 1])) {
                tp.push_back(tau[i]);
                lp.push_back(log(a));
            }
        }
        if (tp.size() >= 2) ga0 = -detail::line_fit(tp, lp).second;
        else {
            std::size_t f = 0, l = m - 1;
            while (f < l && y[f] == R(0)) ++f;
            while (l > f && y[l] == R(0)) --l;
            if (l > f) ga0 = (log(abs(y[f])) - log(abs(y[l]))) / (tau[l] - tau[f]);
        }
        const R cap = R(50) / span;
        ga0 = std::clamp(ga0, -cap, cap);
    }

    // parameters (A', Gamma, Omega, phi') in window time; A', phi' map back
    // to absolute time at the end
    R p[4] = {R(0), ga0, om0, R(0)};
    const bool freep[4] = {true, true, !omega_zero, !omega_zero};
    if (omega_zero) {
        std::vector<R> ts, ls;
        const R sgn = y[imax] > R(0) ? R(1) : R(-1);
        for (std::size_t i = 0; i < m; ++i)
            if (sgn * y[i] > R(0)) {
                ts.push_back(tau[i]);
                ls.push_back(log(sgn * y[i]));
            }
        if (ts.size() < 2) throw Error("fit-failure", "no consistent-sign samples for Omega = 0 fit");
        const auto [c0, sl] = detail::line_fit(ts, ls);
        p[0] = sgn * exp(c0);
        p[1] = -sl;
    } else {
        std::vector<R> a(m * 2), rhs(y);
        for (std::size_t i = 0; i < m; ++i) {
            const R e = exp(-ga0 * tau[i]);
            a[i * 2 + 0] = e * cos(om0 * tau[i]);
            a[i * 2 + 1] = e * sin(om0 * tau[i]);
        }
        const auto ab = detail::lstsq(std::move(a), std::move(rhs), m, 2);
        p[0] = sqrt(ab[0] * ab[0] + ab[1] * ab[1]);
        p[3] = atan2(-ab[1], ab[0]);
        if (p[0] == R(0)) throw Error("fit-failure", "degenerate initial amplitude");
    }

    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < 4; ++j)
        if (freep[j]) idx.push_back(j);
    const std::size_t k = idx.size();
    auto ssr_of = [&](const R q[4]) {
        R s(0);
        for (std::size_t i = 0; i < m; ++i) {
            const R e = q[0] * exp(-q[1] * tau[i]) * cos(q[2] * tau[i] + q[3]) - y[i];
            s += e * e;
        }
        return s;
    };
    R ssr = ssr_of(p);
    R lam = R(1e-3);
    int iters = 0;
    bool done = false;
    for (; iters < 300 && !done; ++iters) {
        // rows: Jacobian over the window, then sqrt(lam * colnorm) damping rows
        std::vector<R> a((m + k) * k, R(0)), rhs(m + k, R(0));
        for (std::size_t i = 0; i < m; ++i) {
            const R e = exp(-p[1] * tau[i]);
            const R c = cos(p[2] * tau[i] + p[3]);
            const R s = sin(p[2] * tau[i] + p[3]);
            const R model = p[0] * e * c;
            const R d[4] = {e * c, -tau[i] * model, -p[0] * tau[i] * e * s, -p[0] * e * s};
            for (std::size_t j = 0; j < k; ++j) a[i * k + j] = d[idx[j]];
            rhs[i] = y[i] - model;
        }
        std::vector<R> cn(k, R(0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) cn[j] += a[i * k + j] * a[i * k + j];
        for (std::size_t j = 0; j < k; ++j)
            a[(m + j) * k + j] = sqrt(lam * (cn[j] > R(0) ? cn[j] : R(1)));
        const auto dlt = detail::lstsq(std::move(a), std::move(rhs), m + k, k);
        R q[4] = {p[0], p[1], p[2], p[3]};
        for (std::size_t j = 0; j < k; ++j) q[idx[j]] += dlt[j];
        const R ssr_new = ssr_of(q);
        if (ssr_new <= ssr) {
            R rel(0);
            for (std::size_t j = 0; j < k; ++j)
                rel = std::max(rel, abs(dlt[j]) / (R(1) + abs(q[idx[j]])));
            for (std::size_t j = 0; j < 4; ++j) p[j] = q[j];
            ssr = ssr_new;
            lam = std::max(lam / R(3), R(1e-14));
            if (rel < R(100) * eps<R>()) done = true;
        } else {
            lam *= R(4);
            if (lam > R(1e10)) done = true;  // flat to rounding; accept current p
        }
    }
    if (!done)
        throw Error("fit-failure", "no convergence after 300 LM steps, rms = " +
                                       format_real(sqrt(ssr / R(m)), 6));

    DampedSinusoidFit<R> out;
    R A = p[0], ph = p[3], om = p[2];
    if (om < R(0)) {
        om = -om;
        ph = -ph;
    }
    if (A < R(0)) {
        A = -A;
        ph += pi<R>();
    }
    out.gamma = p[1];
    out.omega = om;
    out.amplitude = A * exp(out.gamma * t1);
    out.phase = detail::wrap_phase(ph - om * t1);
    out.window = {t1, series.times[hi - 1]};
    out.residual = sqrt(ssr / R(m));
    out.iterations = iters;
    if (!(out.residual == out.residual) || !(out.amplitude < R(1e300)))
        throw Error("fit-failure", "non-finite fit result");
    return out;
}

// Classical Prony: least-squares degree-p recurrence, characteristic roots
// z_j = e^{-i lambda_j dt} on the principal branch, amplitudes by a second
// linear solve on the merged real model. Clearly growing roots
// (Gamma < -sqrt(eps)/dt) are discarded; an ill-conditioned recurrence sets
// rank_warning and records the condition estimate.
template <class R>
PronyResult<R> prony(const TimeSeries<R>& series, const TimeWindow<R>& window, int p) {
    using std::abs;
    using std::atan2;
    using std::log;
    using std::sqrt;
    using C = complex_t<R>;
    if (p < 1) throw Error("domain", "prony order must be >= 1");
    const auto [lo, hi] = detail::window_span(series, window);
    const std::size_t m = hi - lo;
    const std::size_t up = static_cast<std::size_t>(p);
    if (m < 2 * up) throw Error("bad-window", "prony needs at least 2p samples");
    const R dt = series.times[lo + 1] - series.times[lo];
    const R* y = series.values.data() + lo;

    PronyResult<R> out;
    out.order = p;
    out.window = {series.times[lo], series.times[hi - 1]};

    const std::size_t rows = m - up;
    std::vector<R> a(rows * up), b(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < up; ++j) a[r * up + j] = y[up + r - 1 - j];
        b[r] = y[up + r];
    }
    const auto c = detail::lstsq(std::move(a), std::move(b), rows, up, &out.condition);
    out.rank_warning = !(out.condition * eps<R>() < R(1e-4));

    std::vector<C> poly(up + 1);
    poly[up] = C(R(1), R(0));
    for (std::size_t j = 0; j < up; ++j) poly[up - 1 - j] = C(-c[j], R(0));
    const auto roots = poly_roots(poly);

    // conjugate-pair merge; representatives take arg z <= 0 (Omega >= 0)
    const R im_tol = R(1000) * eps<R>();
    std::vector<char> used(roots.size(), 0);
    std::vector<std::pair<C, bool>> reps;  // (root, is_real_type)
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        const C z = roots[i];
        const R az = abs(z);
        if (az < R(1e-30)) {
            used[i] = 1;  // infinitely damped within one sample; carries nothing
            continue;
        }
        if (abs(z.imag()) <= im_tol * (R(1) + az)) {
            used[i] = 1;
            reps.push_back({C(z.real(), R(0)), true});
            continue;
        }
        std::size_t best = i;
        R bd = std::numeric_limits<R>::infinity();
        for (std::size_t j = 0; j < roots.size(); ++j) {
            if (j == i || used[j]) continue;
            const R d = abs(C(roots[j].real() - z.real(), roots[j].imag() + z.imag()));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        used[i] = 1;
        C zr = z;
        if (best != i && bd <= R(1e-3) * (R(1) + az)) {
            used[best] = 1;
            zr = C((z.real() + roots[best].real()) / R(2),
                   (z.imag() - roots[best].imag()) / R(2));
        }
        if (zr.imag() > R(0)) zr = C(zr.real(), -zr.imag());  // keep Omega >= 0
        reps.push_back({zr, false});
    }

    struct Cand {
        C z;
        R omega, gamma;
        bool real_type;
        std::size_t col;  // first amplitude column
    };
    std::vector<Cand> cands;
    const R keep = -sqrt(eps<R>()) / dt;
    std::size_t ncol = 0;
    for (const auto& [z, isreal] : reps) {
        const R ga = -log(abs(z)) / dt;
        if (ga < keep) continue;
        R om = -atan2(z.imag(), z.real()) / dt;
        if (isreal && z.real() < R(0)) om = pi<R>() / dt;  // Nyquist-alternating
        if (isreal) om = abs(om);
        cands.push_back({z, om, ga, isreal, ncol});
        ncol += isreal ? 1 : 2;
    }

    if (ncol > 0 && m >= ncol) {
        // columns Re e^{-i lambda tau_n} and -Im e^{-i lambda tau_n}
        std::vector<R> va(m * ncol, R(0)), vb(y, y + m);
        std::vector<C> pw(cands.size(), C(R(1), R(0)));
        for (std::size_t n = 0; n < m; ++n) {
            for (std::size_t q = 0; q < cands.size(); ++q) {
                va[n * ncol + cands[q].col] = pw[q].real();
                if (!cands[q].real_type) va[n * ncol + cands[q].col + 1] = -pw[q].imag();
                pw[q] *= cands[q].z;
            }
        }
        const auto amp = detail::lstsq(va, std::move(vb), m, ncol);
        for (const auto& cd : cands) {
            PronyMode<R> md;
            md.lambda = C(cd.omega, -cd.gamma);
            md.amplitude = cd.real_type ? C(amp[cd.col], R(0)) : C(amp[cd.col], amp[cd.col + 1]);
            out.modes.push_back(md);
        }
        R ssr(0);
        std::vector<C> pw2(cands.size(), C(R(1), R(0)));
        for (std::size_t n = 0; n < m; ++n) {
            R model(0);
            for (std::size_t q = 0; q < cands.size(); ++q) {
                const C& A = out.modes[q].amplitude;
                model += A.real() * pw2[q].real() - A.imag() * pw2[q].imag();
                pw2[q] *= cands[q].z;
            }
            const R e = model - y[n];
            ssr += e * e;
        }
        out.residual = sqrt(ssr / R(m));
    } else {
        R ssr(0);
        for (std::size_t n = 0; n < m; ++n) ssr += y[n] * y[n];
        out.residual = sqrt(ssr / R(m));
    }
    std::sort(out.modes.begin(), out.modes.end(), [](const auto& u, const auto& v) {
        if (u.lambda.imag() != v.lambda.imag()) return u.lambda.imag() > v.lambda.imag();
        return u.lambda.real() < v.lambda.real();
    });
    return out;
}

// gamma from the log-log slope over the window; sign changes mean the signal
// is still oscillatory and raise not-in-tail
template <class R>
TailFit<R> fit_tail(const TimeSeries<R>& series, const TimeWindow<R>& window) {
    using std::abs;
    using std::exp;
    using std::log;
    using std::sqrt;
    const auto [lo, hi] = detail::window_span(series, window);
    const std::size_t m = hi - lo;
    if (m < 5) throw Error("bad-window", "tail fit needs at least five samples");
    if (!(series.times[lo] > R(0))) throw Error("bad-window", "tail window must sit at t > 0");
    for (std::size_t i = lo; i < hi; ++i) {
        if (series.values[i] == R(0) ||
            (i + 1 < hi && (series.values[i] > R(0)) != (series.values[i + 1] > R(0))))
            throw Error("not-in-tail", "sign change at t = " + format_real(series.times[i], 6));
    }
    std::vector<R> lt(m), lv(m);
    for (std::size_t i = 0; i < m; ++i) {
        lt[i] = log(series.times[lo + i]);
        lv[i] = log(abs(series.values[lo + i]));
    }
    const auto [c0, sl] = detail::line_fit(lt, lv);
    TailFit<R> out;
    out.gamma = -sl;
    out.amplitude = exp(c0);
    out.window = {series.times[lo], series.times[hi - 1]};
    R ssr(0);
    for (std::size_t i = 0; i < m; ++i) {
        const R e = lv[i] - (c0 + sl * lt[i]);
        ssr += e * e;
    }
    out.goodness = sqrt(ssr / R(m));
    for (std::size_t i = 1; i + 1 < m; ++i)
        out.local_gamma.push_back(-(lv[i + 1] - lv[i - 1]) / (lt[i + 1] - lt[i - 1]));
    return out;
}

// Automatic tail window: the earliest start whose local logarithmic
// derivative is stationary within rel_band over half a decade in t; the
// window then extends until stationarity breaks down (sign flips or the
// slope drifts off), so a deep tail sinking into the rounding floor late in
// a long run still gets a clean fit.
template <class R>
TimeWindow<R> tail_window(const TimeSeries<R>& series, R rel_band = R(0.02)) {
    using std::abs;
    using std::log;
    using std::sqrt;
    const std::size_t n = series.times.size();
    if (n < 8 || series.values.size() != n)
        throw Error("bad-window", "series too short for automatic windowing");
    std::vector<char> ok(n, 0);  // sign-definite neighborhood at t > 0
    std::vector<R> g(n, R(0));
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const R a = series.values[i - 1], b = series.values[i], c = series.values[i + 1];
        if (!(series.times[i - 1] > R(0))) continue;
        if (a == R(0) || b == R(0) || c == R(0)) continue;
        if ((a > R(0)) != (b > R(0)) || (b > R(0)) != (c > R(0))) continue;
        ok[i] = 1;
        g[i] = -(log(abs(c)) - log(abs(a))) / (log(series.times[i + 1]) - log(series.times[i - 1]));
    }
    const R half_decade = sqrt(R(10));
    for (std::size_t s = 1; s + 1 < n; ++s) {
        if (!ok[s]) continue;
        const R ts = series.times[s];
        if (!(series.times[n - 2] >= ts * half_decade)) break;  // no room left
        R gmin = g[s], gmax = g[s], gsum(0);
        std::size_t cnt = 0, e = s;
        bool clean = true;
        while (e + 1 < n && series.times[e] <= ts * half_decade) {
            if (!ok[e]) {
                clean = false;
                break;
            }
            gmin = std::min(gmin, g[e]);
            gmax = std::max(gmax, g[e]);
            gsum += g[e];
            ++cnt;
            ++e;
        }
        if (!clean || cnt < 4) continue;
        const R mean = gsum / R(cnt);
        if (!(abs(mean) > R(0)) || gmax - gmin > rel_band * abs(mean)) continue;
        // Extend past the initial half decade while the samples keep tracking
        // the fitted log-log line. Sign flips, slope drift, or a rounding
        // floor all break the agreement and end the window. The line check is
        // far less jittery than the pointwise slope near a noise floor.
        R sx(0), sy(0), sxx(0), sxy(0);
        R m(0);
        for (std::size_t i = s; i < e; ++i) {
            const R x = log(series.times[i]), y = log(abs(series.values[i]));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += R(1);
        }
        const R dev_cap = R(12) * rel_band;
        while (e + 1 < n && ok[e]) {
            const R x = log(series.times[e]), y = log(abs(series.values[e]));
            const R xb = sx / m, yb = sy / m;
            const R slope = (sxy - sx * yb) / (sxx - sx * xb);
            if (abs(y - (yb + slope * (x - xb))) > dev_cap) break;
            if (abs(-slope - mean) > R(4) * rel_band * abs(mean)) break;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += R(1);
            ++e;
        }
        return {ts, e >= n - 2 ? series.times.back() : series.times[e - 1]};
    }
    throw Error("not-in-tail", "no stationary half-decade window in the series");
}

template <class R> struct RingdownCheck {
    complex_t<R> coefficient;  // c in w ~ Re(c e^{-i lambda t} psi)
    R amplitude{};             // c = A e^{i lambda t0}
    R t0{};
    std::vector<R> times;      // later snapshots
    std::vector<R> deviation;  // sup |w - model| behind the wavefront
};

// Fit the complex coefficient once at fit_time, then report the sup-norm
// mismatch against every later snapshot over r < 1 + t - margin.
template <class R>
RingdownCheck<R> ringdown_profile_check(const RadialGrid<R>& grid,
                                        const std::vector<Snapshot<R>>& snaps,
                                        const QnmMode<R>& mode, R fit_time,
                                        R margin = R(2)) {
    using std::abs;
    using std::atan2;
    using std::exp;
    using std::log;
    using C = complex_t<R>;
    if (snaps.empty()) throw Error("bad-window", "no snapshots to fit");
    std::size_t kf = 0;
    for (std::size_t k = 1; k < snaps.size(); ++k)
        if (abs(snaps[k].t - fit_time) < abs(snaps[kf].t - fit_time)) kf = k;

    // eigenfunction on the run grid; exact copy when nodes line up, cubic
    // interpolation otherwise
    const std::size_t n = grid.n;
    std::vector<C> psi(n, C(R(0), R(0)));
    const bool same = mode.r.size() == n && abs(mode.r.back() - grid.r_max()) < R(1e-9);
    R cover = mode.r.back();
    std::size_t ncov = n;
    while (ncov > 0 && grid.r(ncov - 1) > cover + R(1e-12)) --ncov;
    for (std::size_t i = 0; i < ncov; ++i) {
        if (same) {
            psi[i] = mode.psi[i];
            continue;
        }
        const R r = grid.r(i);
        std::size_t j = std::upper_bound(mode.r.begin(), mode.r.end(), r) - mode.r.begin();
        j = std::min(std::max<std::size_t>(j, 2), mode.r.size() - 2);
        C acc(R(0), R(0));
        for (std::size_t a = j - 2; a <= j + 1; ++a) {
            R w(1);
            for (std::size_t b = j - 2; b <= j + 1; ++b)
                if (b != a) w *= (r - mode.r[b]) / (mode.r[a] - mode.r[b]);
            acc += C(w, R(0)) * mode.psi[a];
        }
        psi[i] = acc;
    }

    const C lam = mode.freq.lambda();
    auto region_end = [&](R t) {
        const R rlim = R(1) + t - margin;
        if (rlim > cover + R(1e-9))
            throw Error("bad-window", "mode sampling does not cover the wavefront region");
        std::size_t e = 0;
        while (e < n && grid.r(e) < rlim) ++e;
        return e;
    };

    const R tf = snaps[kf].t;
    const std::size_t ef = region_end(tf);
    if (ef < 3) throw Error("bad-window", "wavefront region is empty at the fit time");
    const C ph = exp(C(R(0), R(-1)) * lam * tf);
    std::vector<R> a(ef * 2), b(ef);
    for (std::size_t i = 0; i < ef; ++i) {
        const C g = ph * psi[i];
        a[i * 2 + 0] = g.real();
        a[i * 2 + 1] = -g.imag();
        b[i] = snaps[kf].values[i];
    }
    const auto cc = detail::lstsq(std::move(a), std::move(b), ef, 2);
    RingdownCheck<R> out;
    out.coefficient = C(cc[0], cc[1]);
    const R om = mode.freq.omega, ga = mode.freq.gamma;
    out.t0 = om != R(0) ? atan2(cc[1], cc[0]) / om : R(0);
    out.amplitude = abs(out.coefficient) * exp(-ga * out.t0);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        if (!(snaps[k].t > tf)) continue;
        const std::size_t e = region_end(snaps[k].t);
        const C phk = exp(C(R(0), R(-1)) * lam * snaps[k].t);
        R dev(0);
        for (std::size_t i = 0; i < e; ++i) {
            const C mdl = out.coefficient * phk * psi[i];
            dev = std::max(dev, abs(snaps[k].values[i] - mdl.real()));
        }
        out.times.push_back(snaps[k].t);
        out.deviation.push_back(dev);
    }
    return out;
}

}  // namespace ewm
