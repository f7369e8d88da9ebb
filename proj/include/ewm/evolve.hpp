#pragma once

// Method-of-lines evolution of the exterior wave map and of its linearization:
// classic RK4 in time over the shared fourth-order stencils, sixth-order
// Kreiss-Oliger smoothing, Dirichlet walls at both ends with r_max placed out
// of causal contact. The nonlinear stepper advances the deviation
// w = u - u_static instead of u itself, via the exact rewrite
//   sin(2u) - sin(2u_s) = 2 cos(2u_s + w) sin(w).
// That keeps the sampled static profile an exact fixed point of the discrete
// flow and keeps round-off relative to the signal, so late-time tails stay
// measurable far below the h^4 deformation a raw u-evolution would settle into.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "ewm/fd.hpp"
#include "ewm/model.hpp"
#include "ewm/precision.hpp"
#include "ewm/static_solver.hpp"

namespace ewm {

enum class EvolveMode { nonlinear, linearized };

template <class R> struct EvolutionConfig {
    EquivariantIndex idx;
    int N = 1;
    RadialGrid<R> grid;
    R t_end;
    R cfl = R(1) / R(2);
    R dt = R(0);        // explicit step override; 0 means cfl * h
    R ko_eps = R(0.1);  // Kreiss-Oliger strength, [0, 1)
    R dt_sample = R(0.1);
    std::vector<R> observers;
    std::vector<R> snapshot_times;
    EvolveMode mode = EvolveMode::nonlinear;
    // For data supported near r=1 the region ahead of the outgoing pulse is
    // identically zero in the deviation variable; tracking the front skips it.
    bool track_support = false;
    R support_margin = R(12);

    EvolutionConfig(const EquivariantIndex& i, int n, const RadialGrid<R>& g, const R& tend)
        : idx(i), N(n), grid(g), t_end(tend) {}

    R step_size() const { return dt > R(0) ? dt : cfl * grid.h; }

    void validate() const {
        if (!(t_end > R(0))) throw Error("bad-config", "t_end must be positive");
        if (!(cfl > R(0)) || cfl > R(1)) throw Error("bad-config", "need 0 < cfl <= 1");
        if (!(step_size() <= grid.h * (R(1) + R(1e-12))))
            throw Error("bad-config", "time step exceeds grid spacing");
        if (ko_eps < R(0) || ko_eps >= R(1)) throw Error("bad-config", "need 0 <= ko_eps < 1");
        if (!(dt_sample > R(0))) throw Error("bad-config", "dt_sample must be positive");
        R obs_max(0);
        for (const R& ro : observers) {
            if (ro < R(1) || ro > grid.r_max())
                throw Error("bad-config", "observer outside grid: " + format_real(ro, 6));
            if (ro > obs_max) obs_max = ro;
        }
        R need = R(1) + R(2) * t_end + obs_max;  // boundary causally disconnected
        if (grid.r_max() < need)
            throw Error("bad-config", "r_max " + format_real(grid.r_max(), 6) + " < "
                                          + format_real(need, 6) + " required to keep the outer boundary silent");
        for (const R& ts : snapshot_times)
            if (ts < R(0) || ts > t_end + dt_sample)
                throw Error("bad-config", "snapshot time outside the run: " + format_real(ts, 6));
        if (!(support_margin > R(0))) throw Error("bad-config", "support_margin must be positive");
    }
};

template <class R> struct TimeSeries {
    R r_obs;
    std::vector<R> times;   // uniform, spacing dt_sample
    std::vector<R> values;  // u - u_static at r_obs, or w for a linearized run
};

template <class R> struct Snapshot {
    R t;
    std::vector<R> values;  // on the grid: u (nonlinear) or w (linearized)
};

template <class R> struct EvolveResult {
    std::vector<TimeSeries<R>> series;
    std::vector<Snapshot<R>> snapshots;
    std::vector<R> times;
    std::vector<R> energies;
    std::vector<int> degrees;
};

// static profile plus a localized velocity kick; the (r-1)^3 factor keeps the
// kick compatible with u(t,1)=0 through two derivatives
template <class R>
FieldState<R> data_kicked(const StaticSolution<R>& sol, const R& eps_kick, const R& r0,
                          const R& sigma, const RadialGrid<R>& grid) {
    if (!(sigma > R(0))) throw Error("domain", "sigma must be positive");
    using std::exp;
    FieldState<R> s(grid.n);
    std::vector<R> du;
    sol.profile_on(grid, s.u, du);
    for (std::size_t i = 1; i < grid.n; ++i) {
        R d = grid.r(i) - R(1);
        R z = (grid.r(i) - r0) / sigma;
        s.v[i] = eps_kick * d * d * d * exp(-z * z / R(2));
    }
    return s;
}

// degree-one data approaching pi at the slow O(1/r) rate:
// u = 2 (r-1)^2 / (1 + (r-1)^2) * arctan(r-1) = pi - 2/r - (2+pi)/r^2 + ...
template <class R> FieldState<R> data_polynomial(const RadialGrid<R>& grid) {
    using std::atan;
    FieldState<R> s(grid.n);
    for (std::size_t i = 1; i < grid.n; ++i) {
        R d = grid.r(i) - R(1);
        s.u[i] = R(2) * d * d / (R(1) + d * d) * atan(d);
    }
    return s;
}

// One RK4 step of dw/dt = v, dv/dt = F(w), then Kreiss-Oliger smoothing of
// both fields on the interior. F is the spatial operator around the static
// background,
//   F(w) = w'' + (2/r) w' - (L/r^2) cos(2 u_s + w) sin w        (nonlinear)
//   F(w) = w'' + (2/r) w' - (L/r^2 + V) w                       (linearized)
// The smoothing increment is +(ko_eps * dt/h / 64) * d6 q, the sign that damps
// the grid mode (the sixth central difference of (-1)^i is -64 (-1)^i); the
// dt/h factor makes the damping rate per unit time resolution-independent.
template <class R> class Stepper {
  public:
    Stepper(const EvolutionConfig<R>& cfg, const StaticSolution<R>& sol, const R& dt_override = R(0))
        : nonlinear_(true) {
        if (cfg.mode != EvolveMode::nonlinear)
            throw Error("bad-config", "linearized config given to the nonlinear stepper");
        if (sol.idx.ell != cfg.idx.ell || sol.N != cfg.N)
            throw Error("bad-config", "static background does not match the config sector");
        init(cfg, dt_override);
        us_.resize(n_);
        std::vector<R> du;
        sol.profile_on(cfg.grid, us_, du);
        c2_.resize(n_);
        s2_.resize(n_);
        using std::cos;
        using std::sin;
        for (std::size_t i = 0; i < n_; ++i) {
            c2_[i] = cos(R(2) * us_[i]);
            s2_[i] = sin(R(2) * us_[i]);
        }
    }

    Stepper(const EvolutionConfig<R>& cfg, const Potential<R>& V, const R& dt_override = R(0))
        : nonlinear_(false) {
        if (cfg.mode != EvolveMode::linearized)
            throw Error("bad-config", "nonlinear config given to the linearized stepper");
        init(cfg, dt_override);
        if (V.values.size() != n_) throw Error("bad-config", "potential sampled on a different grid");
        lin_.assign(n_, R(0));
        for (std::size_t i = 1; i + 1 < n_; ++i) lin_[i] = lr2_[i] + V.values[i];
    }

    const R& dt() const { return dt_; }
    const R& time() const { return t_; }
    const std::vector<R>& background() const { return us_; }

    void advance(FieldState<R>& s) {
        using std::abs;
        auto& w = s.u;
        auto& v = s.v;
        if (w.size() != n_ || v.size() != n_) throw Error("bad-state", "state size does not match the grid");
        if (track_ && !sup_set_) {
            std::size_t last = 0;
            for (std::size_t i = 0; i < n_; ++i)
                if (w[i] != R(0) || v[i] != R(0)) last = i;
            r_front_ = R(1) + R(static_cast<double>(last)) * h_ + margin_;
            sup_set_ = true;
        }
        std::size_t hi = n_ - 2;
        if (track_) {
            double fi = std::ceil((to_double(r_front_) - 1.0) / to_double(h_));
            if (fi < 8) fi = 8;
            if (static_cast<std::size_t>(fi) < hi) hi = static_cast<std::size_t>(fi);
        }
        const std::size_t sc = std::min(hi + 2, n_ - 2);
        tmp_[n_ - 1] = w[n_ - 1];  // frozen Dirichlet value seen by the biased stencil

        rhs(w, f1_, hi);  // k1
        for (std::size_t i = 1; i <= sc; ++i) tmp_[i] = w[i] + hdt_ * v[i];
        rhs(tmp_, f2_, hi);  // k2
        for (std::size_t i = 1; i <= sc; ++i) tmp_[i] = w[i] + hdt_ * v[i] + qdt_ * f1_[i];
        for (std::size_t i = 1; i <= hi; ++i) {
            aw_[i] = f1_[i] + f2_[i];
            av_[i] = f1_[i] + R(2) * f2_[i];
        }
        rhs(tmp_, f1_, hi);  // k3
        for (std::size_t i = 1; i <= sc; ++i) tmp_[i] = w[i] + dt_ * v[i] + hdt2_ * f2_[i];
        for (std::size_t i = 1; i <= hi; ++i) {
            aw_[i] += f1_[i];
            av_[i] += R(2) * f1_[i];
        }
        rhs(tmp_, f2_, hi);  // k4
        for (std::size_t i = 1; i <= hi; ++i) {
            w[i] += dt_ * v[i] + w6_ * aw_[i];
            v[i] += d6_ * (av_[i] + f2_[i]);
        }
        if (kof_ > R(0)) {
            smooth(w, hi);
            smooth(v, hi);
        }
        w[0] = R(0);
        v[0] = R(0);
        for (std::size_t i = 1; i <= hi; ++i)
            if (!(abs(w[i]) < R(1e60)) || !(abs(v[i]) < R(1e60)))
                throw Error("blow-up", "non-finite field value at t = " + format_real(t_ + dt_, 6));
        t_ += dt_;
        if (track_) r_front_ += dt_ * R(1.05);  // 5% slack over the unit characteristic speed
    }

  private:
    void init(const EvolutionConfig<R>& cfg, const R& dt_override) {
        n_ = cfg.grid.n;
        h_ = cfg.grid.h;
        dt_ = dt_override > R(0) ? dt_override : cfg.step_size();
        hdt_ = dt_ / R(2);
        qdt_ = dt_ * dt_ / R(4);
        hdt2_ = dt_ * dt_ / R(2);
        w6_ = dt_ * dt_ / R(6);
        d6_ = dt_ / R(6);
        kof_ = cfg.ko_eps * (dt_ / h_) / R(64);
        i12h_ = R(1) / (R(12) * h_);
        i12h2_ = R(1) / (R(12) * h_ * h_);
        const R L(cfg.idx.L());
        tor_.resize(n_);
        lr2_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            R r = cfg.grid.r(i);
            tor_[i] = R(2) / r;
            lr2_[i] = L / (r * r);
        }
        auto e1 = edge_weights<R>(1);
        for (int k = 0; k < 6; ++k) {
            e1d1_[k] = e1.d1[k] / h_;
            e1d2_[k] = e1.d2[k] / (h_ * h_);
        }
        track_ = cfg.track_support;
        margin_ = cfg.support_margin;
        f1_.assign(n_, R(0));
        f2_.assign(n_, R(0));
        aw_.assign(n_, R(0));
        av_.assign(n_, R(0));
        tmp_.assign(n_, R(0));
        t_ = R(0);
    }

    R source(std::size_t i, const R& wi) const {
        using std::cos;
        using std::sin;
        if (!nonlinear_) return lin_[i] * wi;
        R sw = sin(wi), cw = cos(wi);
        return lr2_[i] * (c2_[i] * cw - s2_[i] * sw) * sw;
    }

    // F on [1, hi]; entries past hi are left untouched (zero there by the
    // monotone growth of the active window)
    void rhs(const std::vector<R>& w, std::vector<R>& out, std::size_t hi) const {
        using std::cos;
        using std::sin;
        {
            R d1(0), d2(0);
            for (int k = 0; k < 6; ++k) {
                d1 += e1d1_[k] * w[k];
                d2 += e1d2_[k] * w[k];
            }
            out[1] = d2 + tor_[1] * d1 - source(1, w[1]);
        }
        const std::size_t top = std::min(hi, n_ - 3);
        if (nonlinear_) {
            for (std::size_t i = 2; i <= top; ++i) {
                R d2 = (R(16) * (w[i - 1] + w[i + 1]) - (w[i - 2] + w[i + 2]) - R(30) * w[i]) * i12h2_;
                R d1 = (w[i - 2] - w[i + 2] + R(8) * (w[i + 1] - w[i - 1])) * i12h_;
                R sw = sin(w[i]), cw = cos(w[i]);
                out[i] = d2 + tor_[i] * d1 - lr2_[i] * (c2_[i] * cw - s2_[i] * sw) * sw;
            }
        } else {
            for (std::size_t i = 2; i <= top; ++i) {
                R d2 = (R(16) * (w[i - 1] + w[i + 1]) - (w[i - 2] + w[i + 2]) - R(30) * w[i]) * i12h2_;
                R d1 = (w[i - 2] - w[i + 2] + R(8) * (w[i + 1] - w[i - 1])) * i12h_;
                out[i] = d2 + tor_[i] * d1 - lin_[i] * w[i];
            }
        }
        if (hi >= n_ - 2) {
            R d1m(0), d2m(0);
            for (int k = 0; k < 6; ++k) {
                d1m += e1d1_[k] * w[n_ - 1 - k];
                d2m += e1d2_[k] * w[n_ - 1 - k];
            }
            out[n_ - 2] = d2m - tor_[n_ - 2] * d1m - source(n_ - 2, w[n_ - 2]);
        }
    }

    void smooth(std::vector<R>& q, std::size_t hi) {
        const std::size_t top = std::min(hi, n_ - 4);
        if (top < 3) return;
        for (std::size_t i = 3; i <= top; ++i)
            tmp_[i] = q[i - 3] + q[i + 3] - R(6) * (q[i - 2] + q[i + 2]) + R(15) * (q[i - 1] + q[i + 1])
                      - R(20) * q[i];
        for (std::size_t i = 3; i <= top; ++i) q[i] += kof_ * tmp_[i];
    }

    bool nonlinear_;
    std::size_t n_ = 0;
    R h_{}, dt_{}, hdt_{}, qdt_{}, hdt2_{}, w6_{}, d6_{}, kof_{}, i12h_{}, i12h2_{}, t_{};
    std::array<R, 6> e1d1_{}, e1d2_{};
    std::vector<R> tor_, lr2_, lin_, us_, c2_, s2_;
    std::vector<R> f1_, f2_, aw_, av_, tmp_;
    bool track_ = false, sup_set_ = false;
    R margin_{}, r_front_{};
};

namespace detail {

// cubic Lagrange read-off at an off-grid radius; exact node hits bypass it
template <class R> struct ObserverStencil {
    std::size_t base = 0;
    std::array<R, 4> wgt{};
    long exact = -1;
};

template <class R>
ObserverStencil<R> observer_stencil(const RadialGrid<R>& grid, const R& r_obs) {
    using std::abs;
    ObserverStencil<R> st;
    R x = (r_obs - R(1)) / grid.h;
    double xd = to_double(x);
    long nearest = std::lround(xd);
    if (nearest >= 0 && nearest < static_cast<long>(grid.n) && abs(x - R(nearest)) < R(1e-9)) {
        st.exact = nearest;
        return st;
    }
    long j = static_cast<long>(std::floor(xd)) - 1;
    j = std::clamp(j, 0L, static_cast<long>(grid.n) - 4);
    st.base = static_cast<std::size_t>(j);
    for (int k = 0; k < 4; ++k) {
        R wk(1);
        for (int m = 0; m < 4; ++m)
            if (m != k) wk *= (x - R(static_cast<double>(j + m))) / R(k - m);
        st.wgt[k] = wk;
    }
    return st;
}

template <class R> R observe(const std::vector<R>& f, const ObserverStencil<R>& st) {
    if (st.exact >= 0) return f[static_cast<std::size_t>(st.exact)];
    R s(0);
    for (int k = 0; k < 4; ++k) s += st.wgt[k] * f[st.base + k];
    return s;
}

// largest step not exceeding the requested one that divides dt_sample evenly,
// so the sample instants are exact step boundaries
template <class R> std::pair<R, std::size_t> sample_step(const EvolutionConfig<R>& cfg) {
    double m = std::ceil(to_double(cfg.dt_sample / cfg.step_size()) - 1e-9);
    std::size_t k = m < 1.0 ? 1 : static_cast<std::size_t>(m);
    return {cfg.dt_sample / R(static_cast<double>(k)), k};
}

template <class R> void check_state(const RadialGrid<R>& grid, const FieldState<R>& s) {
    using std::abs;
    if (s.u.size() != grid.n || s.v.size() != grid.n)
        throw Error("bad-state", "field arrays do not match the grid");
    if (s.u[0] != R(0) || s.v[0] != R(0)) throw Error("bad-state", "u(1) and v(1) must vanish");
    for (std::size_t i = 0; i < grid.n; ++i)
        if (!(abs(s.u[i]) < R(1e60)) || !(abs(s.v[i]) < R(1e60)))
            throw Error("bad-state", "non-finite initial data");
}

// shared sampling loop; base != nullptr reconstructs u = base + w for the
// energy, degree and snapshot read-outs of a nonlinear run
template <class R>
EvolveResult<R> run_sampled(const EvolutionConfig<R>& cfg, Stepper<R>& step, std::size_t per_sample,
                            FieldState<R>& s, const std::vector<R>* base) {
    const auto& grid = cfg.grid;
    const std::size_t K =
        static_cast<std::size_t>(std::ceil(to_double(cfg.t_end / cfg.dt_sample) - 1e-9));
    EvolveResult<R> out;
    std::vector<ObserverStencil<R>> stencils;
    for (const R& ro : cfg.observers) {
        stencils.push_back(observer_stencil(grid, ro));
        out.series.push_back({ro, {}, {}});
    }
    std::vector<std::size_t> snap_at;
    for (const R& ts : cfg.snapshot_times)
        snap_at.push_back(std::min<std::size_t>(K, static_cast<std::size_t>(
                                                       std::lround(to_double(ts / cfg.dt_sample)))));
    std::sort(snap_at.begin(), snap_at.end());
    snap_at.erase(std::unique(snap_at.begin(), snap_at.end()), snap_at.end());
    std::size_t next_snap = 0;
    FieldState<R> full(base ? grid.n : 0);
    for (std::size_t k = 0; k <= K; ++k) {
        if (k > 0)
            for (std::size_t j = 0; j < per_sample; ++j) step.advance(s);
        R t = R(static_cast<double>(k)) * cfg.dt_sample;
        out.times.push_back(t);
        for (std::size_t o = 0; o < stencils.size(); ++o) {
            out.series[o].times.push_back(t);
            out.series[o].values.push_back(observe(s.u, stencils[o]));
        }
        const FieldState<R>* diag = &s;
        if (base) {
            for (std::size_t i = 0; i < grid.n; ++i) full.u[i] = (*base)[i] + s.u[i];
            full.v = s.v;
            diag = &full;
        }
        out.energies.push_back(energy(cfg.idx, grid, *diag));
        out.degrees.push_back(degree_of(grid, *diag));
        if (next_snap < snap_at.size() && snap_at[next_snap] == k) {
            out.snapshots.push_back({t, diag->u});
            ++next_snap;
        }
    }
    return out;
}

}  // namespace detail

template <class R>
EvolveResult<R> evolve(const EvolutionConfig<R>& cfg, const StaticSolution<R>& sol,
                       const FieldState<R>& init) {
    cfg.validate();
    if (cfg.mode != EvolveMode::nonlinear)
        throw Error("bad-config", "linearized config: call evolve_linear");
    detail::check_state(cfg.grid, init);
    auto [dt, m] = detail::sample_step(cfg);
    Stepper<R> step(cfg, sol, dt);
    const std::vector<R>& us = step.background();
    FieldState<R> s(cfg.grid.n);
    for (std::size_t i = 0; i < cfg.grid.n; ++i) s.u[i] = init.u[i] - us[i];
    s.v = init.v;
    return detail::run_sampled(cfg, step, m, s, &us);
}

template <class R>
EvolveResult<R> evolve_linear(const EvolutionConfig<R>& cfg, const Potential<R>& V,
                              const FieldState<R>& init) {
    cfg.validate();
    if (cfg.mode != EvolveMode::linearized)
        throw Error("bad-config", "nonlinear config: call evolve");
    detail::check_state(cfg.grid, init);
    auto [dt, m] = detail::sample_step(cfg);
    Stepper<R> step(cfg, V, dt);
    FieldState<R> s = init;
    return detail::run_sampled(cfg, step, m, s, static_cast<const std::vector<R>*>(nullptr));
}

}  // namespace ewm
