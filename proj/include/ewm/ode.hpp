#pragma once

// Thin driver around odeint's controlled RKF78: adaptive inside, but with a
// step-size cap and exact landing on requested output points, which odeint's
// free integrate_* functions don't give in one place.

#include <array>
#include <cstddef>

#include "ewm/model.hpp"
#include "ewm/precision.hpp"

namespace ewm {

namespace ode = boost::numeric::odeint;

template <class State, class R>
using rkf78 = ode::runge_kutta_fehlberg78<State, R, State, R>;

// integrates sys from x0 to x1 (monotone either way); calls observe(x, y)
// at x0, after every accepted step, and at x1. |dx| never exceeds dxmax.
template <class R, class State, class Sys, class Obs>
void adaptive_drive(Sys sys, State& y, R x0, R x1, R tol, R dxmax, Obs observe) {
    using std::abs;
    auto ctrl = ode::make_controlled(tol, tol, rkf78<State, R>());
    const R dir = x1 >= x0 ? R(1) : R(-1);
    R x = x0;
    R dx = dir * dxmax;
    observe(x, y);
    std::size_t tries = 0;
    while (dir * (x1 - x) > R(0)) {
        if (abs(dx) > dxmax) dx = dir * dxmax;
        if (dir * (x + dx - x1) > R(0)) dx = x1 - x;
        R dx_try = dx;
        auto res = ctrl.try_step(sys, y, x, dx_try);
        if (res == ode::success) {
            observe(x, y);
            dx = dx_try;  // suggested next size
        } else {
            dx = dx_try;  // reduced size, retry
        }
        if (++tries > 2000000) throw Error("integration-failure", "step count exceeded");
    }
}

}  // namespace ewm
