#pragma once

// Equivariant wave maps exterior to the unit ball:
//   u_tt = u_rr + (2/r) u_r - l(l+1) sin(2u) / (2 r^2),   r >= 1,  u(t,1) = 0.
// This header holds the grid/state types, the spatial operator, the energy
// integral, the linearization potential and the topological degree.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ewm/fd.hpp"
#include "ewm/precision.hpp"

namespace ewm {

struct Error : std::runtime_error {
    std::string kind;
    Error(std::string k, const std::string& msg) : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

struct EquivariantIndex {
    int ell;
    explicit EquivariantIndex(int l) : ell(l) {
        if (l < 1) throw Error("bad-index", "ell must be >= 1, got " + std::to_string(l));
    }
    int L() const { return ell * (ell + 1); }
};

// uniform grid with r[0] = 1 exactly
template <class R> struct RadialGrid {
    R h;
    std::size_t n;
    RadialGrid(R spacing, std::size_t n_points) : h(spacing), n(n_points) {
        if (n < 9) throw Error("bad-grid", "need at least 9 points");
        if (!(h > R(0))) throw Error("bad-grid", "spacing must be positive");
    }
    static RadialGrid with_extent(R r_max, R spacing) {
        std::size_t n = static_cast<std::size_t>(to_double((r_max - R(1)) / spacing)) + 1;
        while (R(1) + R(static_cast<double>(n - 1)) * spacing < r_max) ++n;
        return RadialGrid(spacing, n);
    }
    R r(std::size_t i) const { return R(1) + R(static_cast<double>(i)) * h; }
    R r_max() const { return r(n - 1); }
};

template <class R> struct FieldState {
    std::vector<R> u, v;  // v = du/dt
    explicit FieldState(std::size_t n = 0) : u(n, R(0)), v(n, R(0)) {}
    std::size_t size() const { return u.size(); }
};

template <class R> struct Potential {
    std::vector<R> values;   // V(r_i) = -2 l(l+1) sin^2(u_N) / r^2
    R tail_coefficient;      // V ~ tail_coefficient * r^-(2l+4)
};

// du/dt = v, dv/dt = spatial operator; boundary rows are left to the stepper
template <class R>
void wave_rhs(const EquivariantIndex& idx, const RadialGrid<R>& grid, const FieldState<R>& s,
              std::vector<R>& du, std::vector<R>& dv) {
    const std::size_t n = grid.n;
    const R L(idx.L());
    du = s.v;
    dv.assign(n, R(0));
    using std::sin;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        R r = grid.r(i);
        R upp = deriv2_at(s.u, i, n, grid.h);
        R up = deriv1_at(s.u, i, n, grid.h);
        dv[i] = upp + R(2) / r * up - L / (R(2) * r * r) * sin(R(2) * s.u[i]);
    }
}

// linearized operator: dv = w'' + (2/r) w' - l(l+1) w / r^2 - V w
template <class R>
void linear_rhs(const EquivariantIndex& idx, const RadialGrid<R>& grid, const Potential<R>& V,
                const FieldState<R>& s, std::vector<R>& du, std::vector<R>& dv) {
    const std::size_t n = grid.n;
    const R L(idx.L());
    du = s.v;
    dv.assign(n, R(0));
    for (std::size_t i = 1; i + 1 < n; ++i) {
        R r = grid.r(i);
        R upp = deriv2_at(s.u, i, n, grid.h);
        R up = deriv1_at(s.u, i, n, grid.h);
        dv[i] = upp + R(2) / r * up - (L / (r * r) + V.values[i]) * s.u[i];
    }
}

// E = 1/2 int_1^rmax ( r^2 v^2 + r^2 u'^2 + l(l+1) sin^2 u ) dr,
// composite Simpson with a 3/8 patch when the interval count is odd
template <class R>
R energy(const EquivariantIndex& idx, const RadialGrid<R>& grid, const FieldState<R>& s) {
    const std::size_t n = grid.n;
    const R L(idx.L());
    using std::sin;
    std::vector<R> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        R r = grid.r(i);
        R up = deriv1_at(s.u, i, n, grid.h);
        R si = sin(s.u[i]);
        f[i] = (r * r * (s.v[i] * s.v[i] + up * up) + L * si * si) / R(2);
    }
    std::size_t m = n - 1;  // interval count
    R sum(0);
    std::size_t i0 = 0;
    if (m % 2 == 1) {  // leading 3/8 block over three intervals
        sum += R(3) * grid.h / R(8) * (f[0] + R(3) * f[1] + R(3) * f[2] + f[3]);
        i0 = 3;
    }
    for (std::size_t i = i0; i + 2 < n; i += 2)
        sum += grid.h / R(3) * (f[i] + R(4) * f[i + 1] + f[i + 2]);
    return sum;
}

template <class R>
Potential<R> potential_of(const EquivariantIndex& idx, const RadialGrid<R>& grid,
                          const std::vector<R>& u_static, const R& b) {
    const R L(idx.L());
    Potential<R> V;
    V.values.resize(grid.n);
    using std::sin;
    for (std::size_t i = 0; i < grid.n; ++i) {
        R r = grid.r(i);
        R si = sin(u_static[i]);
        V.values[i] = -R(2) * L * si * si / (r * r);
    }
    V.tail_coefficient = -R(2) * L * b * b;
    return V;
}

// winding number u(r_max)/pi, guarded against reading mid-transition
template <class R>
int degree_of(const RadialGrid<R>& grid, const FieldState<R>& s) {
    using std::abs;
    R x = s.u[grid.n - 1] / pi<R>();
    double xd = to_double(x);
    int k = static_cast<int>(std::lround(xd));
    if (abs(x - R(k)) >= R(0.25))
        throw Error("degree-ambiguous",
                    "u(r_max)/pi = " + format_real(x, 6) + " is not within 1/4 of an integer");
    return k;
}

}  // namespace ewm
