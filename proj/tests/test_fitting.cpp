#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ewm/fitting.hpp"

using namespace ewm;

namespace {

template <class R, class F>
TimeSeries<R> make_series(R t0, R dt, int n, F f) {
    TimeSeries<R> s;
    s.r_obs = R(0);
    for (int i = 0; i < n; ++i) {
        const R t = t0 + dt * R(i);
        s.times.push_back(t);
        s.values.push_back(f(t));
    }
    return s;
}

}  // namespace

TEST(Lstsq, OverdeterminedAndRankDeficient) {
    // rows (1, t) against 2 - 3t, consistent: exact recovery
    std::vector<double> a, b;
    for (int i = 0; i < 7; ++i) {
        a.push_back(1.0);
        a.push_back(0.5 * i);
        b.push_back(2.0 - 1.5 * i);
    }
    double cond = 0;
    auto x = detail::lstsq(a, b, 7, 2, &cond);
    EXPECT_NEAR(x[0], 2.0, 1e-13);
    EXPECT_NEAR(x[1], -3.0, 1e-13);
    EXPECT_LT(cond, 20.0);

    // duplicate column: near-zero pivot, huge condition estimate, but the
    // returned combination still reproduces the data
    std::vector<double> a2, b2;
    for (int i = 0; i < 6; ++i) {
        a2.push_back(1.0 + i);
        a2.push_back(1.0 + i);
        b2.push_back(4.0 * (1.0 + i));
    }
    auto x2 = detail::lstsq(a2, b2, 6, 2, &cond);
    EXPECT_GT(cond, 1e12);
    EXPECT_NEAR(x2[0] + x2[1], 4.0, 1e-9);

    // exactly zero column: zero pivot, component pinned to zero, cond = inf
    std::vector<double> a3, b3;
    for (int i = 0; i < 6; ++i) {
        a3.push_back(2.0 + i);
        a3.push_back(0.0);
        b3.push_back(5.0 * (2.0 + i));
    }
    auto x3 = detail::lstsq(a3, b3, 6, 2, &cond);
    EXPECT_TRUE(std::isinf(cond));
    EXPECT_NEAR(x3[0], 5.0, 1e-12);
    EXPECT_EQ(x3[1], 0.0);
}

TEST(DampedSinusoid, RecoversSyntheticWithNoise) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1e-10, 1e-10);
    auto s = make_series<double>(0.0, 0.05, 801, [&](double t) {
        return 2.0 * std::exp(-0.3 * t) * std::cos(0.9 * t + 1.0) + u(rng);
    });
    auto fit = fit_damped_sinusoid(s, TimeWindow<double>{2.0, 38.0});
    EXPECT_NEAR(fit.amplitude, 2.0, 1e-6);
    EXPECT_NEAR(fit.gamma, 0.3, 1e-6);
    EXPECT_NEAR(fit.omega, 0.9, 1e-6);
    EXPECT_NEAR(fit.phase, 1.0, 1e-6);
    EXPECT_LT(fit.residual, 1e-9);
    EXPECT_GT(fit.gamma, 0.0);
}

TEST(DampedSinusoid, PureExponentialLockedOmega) {
    auto s = make_series<double>(0.0, 0.1, 301,
                                 [](double t) { return 1.5 * std::exp(-0.42 * t); });
    auto fit = fit_damped_sinusoid(s, TimeWindow<double>{0.0, 25.0}, true);
    EXPECT_NEAR(fit.amplitude, 1.5, 1e-10);
    EXPECT_NEAR(fit.gamma, 0.42, 1e-10);
    EXPECT_EQ(fit.omega, 0.0);
    EXPECT_NEAR(fit.phase, 0.0, 1e-12);

    // sign lives in the phase, amplitude stays positive
    for (auto& v : s.values) v = -v;
    auto neg = fit_damped_sinusoid(s, TimeWindow<double>{0.0, 25.0}, true);
    EXPECT_NEAR(neg.amplitude, 1.5, 1e-10);
    EXPECT_NEAR(neg.phase, 3.14159265358979324, 1e-12);
}

TEST(DampedSinusoid, WindowAndFailureModes) {
    auto s = make_series<double>(0.0, 0.05, 1201, [](double t) {
        return std::exp(-0.2 * t) * std::cos(1.1 * t);
    });
    EXPECT_THROW(
        {
            try {
                fit_damped_sinusoid(s, TimeWindow<double>{100.0, 200.0});
            } catch (const Error& e) {
                EXPECT_EQ(e.kind, "bad-window");
                throw;
            }
        },
        Error);
    EXPECT_THROW(fit_damped_sinusoid(s, TimeWindow<double>{5.0, 5.2}), Error);
    EXPECT_THROW(fit_damped_sinusoid(s, TimeWindow<double>{10.0, 5.0}), Error);

    auto z = make_series<double>(0.0, 0.1, 101, [](double) { return 0.0; });
    try {
        fit_damped_sinusoid(z, TimeWindow<double>{0.0, 10.0});
        FAIL() << "zero signal must not fit";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind, "fit-failure");
    }
}

TEST(Prony, TwoModeQuadRecovery) {
    using C = qcomplex;
    const C l1(qreal("6.2925"), qreal("-0.1718"));
    const C l2(qreal("1.6862"), qreal("-9.1606e-10"));
    const C a1 = detail::from_polar(qreal("0.7"), qreal("0.3"));
    const C a2 = detail::from_polar(qreal("1.2"), qreal("-1.1"));
    const C mi(qreal(0), qreal(-1));
    auto s = make_series<qreal>(qreal(0), qreal("0.1"), 401, [&](qreal t) {
        return (a1 * exp(mi * l1 * t) + a2 * exp(mi * l2 * t)).real();
    });
    auto res = prony(s, TimeWindow<qreal>{qreal(0), qreal(40)}, 4);
    ASSERT_EQ(res.modes.size(), 2u);
    EXPECT_EQ(res.order, 4);
    EXPECT_FALSE(res.rank_warning);
    // damping-ordered: the nearly undamped mode comes first
    EXPECT_LT(to_double(abs(res.modes[0].lambda - l2) / abs(l2)), 1e-6);
    EXPECT_LT(to_double(abs(res.modes[1].lambda - l1) / abs(l1)), 1e-6);
    EXPECT_LT(to_double(abs(res.modes[0].amplitude - a2) / abs(a2)), 1e-6);
    EXPECT_LT(to_double(abs(res.modes[1].amplitude - a1) / abs(a1)), 1e-6);
    EXPECT_LT(to_double(res.residual), 1e-25);
}

TEST(Prony, SingleModeMatchesSinusoidFit) {
    auto s = make_series<double>(0.0, 0.05, 601, [](double t) {
        return 0.8 * std::exp(-0.21 * t) * std::cos(1.3 * t + 0.4);
    });
    const TimeWindow<double> w{0.0, 30.0};
    auto pf = prony(s, w, 2);
    auto sf = fit_damped_sinusoid(s, w);
    ASSERT_EQ(pf.modes.size(), 1u);
    EXPECT_NEAR(pf.modes[0].lambda.real(), sf.omega, 1e-8);
    EXPECT_NEAR(-pf.modes[0].lambda.imag(), sf.gamma, 1e-8);
    EXPECT_NEAR(std::abs(pf.modes[0].amplitude), sf.amplitude, 1e-8);
    EXPECT_NEAR(-std::arg(pf.modes[0].amplitude), sf.phase, 1e-8);

    // overdamped cross-check at p = 1
    auto e = make_series<double>(0.0, 0.1, 301,
                                 [](double t) { return 2.5 * std::exp(-0.15 * t); });
    auto pe = prony(e, TimeWindow<double>{0.0, 30.0}, 1);
    auto se = fit_damped_sinusoid(e, TimeWindow<double>{0.0, 30.0}, true);
    ASSERT_EQ(pe.modes.size(), 1u);
    EXPECT_NEAR(pe.modes[0].lambda.real(), 0.0, 1e-12);
    EXPECT_NEAR(-pe.modes[0].lambda.imag(), se.gamma, 1e-8);
    EXPECT_NEAR(pe.modes[0].amplitude.real(), se.amplitude, 1e-8);
}

TEST(Prony, ConstantGivesZeroFrequency) {
    auto s = make_series<double>(0.0, 0.1, 101, [](double) { return 3.7; });
    auto res = prony(s, TimeWindow<double>{0.0, 10.0}, 1);
    ASSERT_EQ(res.modes.size(), 1u);
    EXPECT_LT(std::abs(res.modes[0].lambda), 1e-12);
    EXPECT_NEAR(res.modes[0].amplitude.real(), 3.7, 1e-12);
    EXPECT_LT(res.residual, 1e-12);
}

TEST(Prony, RankWarningOnOverfit) {
    // one exponential fitted with p = 3: the recurrence matrix is rank one
    auto s = make_series<double>(0.0, 0.1, 60, [](double t) {
        return 2.0 * std::exp(std::log(0.9) * 10.0 * t);
    });
    auto res = prony(s, TimeWindow<double>{0.0, 5.9}, 3);
    EXPECT_TRUE(res.rank_warning);
    EXPECT_GT(res.condition, 1e8);
    ASSERT_GE(res.modes.size(), 1u);
    std::size_t dom = 0;
    for (std::size_t i = 1; i < res.modes.size(); ++i)
        if (std::abs(res.modes[i].amplitude) > std::abs(res.modes[dom].amplitude)) dom = i;
    EXPECT_NEAR(-res.modes[dom].lambda.imag(), -std::log(0.9) * 10.0, 1e-6);
    EXPECT_NEAR(res.modes[dom].lambda.real(), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(res.modes[dom].amplitude), 2.0, 1e-6);
}

TEST(TailFit, PowerLawExact) {
    auto s = make_series<double>(10.0, 0.1, 901,
                                 [](double t) { return 3.0 * std::pow(t, -5.0); });
    auto fit = fit_tail(s, TimeWindow<double>{10.0, 100.0});
    EXPECT_NEAR(fit.gamma, 5.0, 1e-10);
    EXPECT_NEAR(fit.amplitude, 3.0, 1e-8);
    EXPECT_LT(fit.goodness, 1e-12);
    ASSERT_FALSE(fit.local_gamma.empty());
    for (double g : fit.local_gamma) EXPECT_NEAR(g, 5.0, 1e-8);
}

TEST(TailFit, SignChangeRejected) {
    auto s = make_series<double>(1.0, 0.1, 301,
                                 [](double t) { return std::cos(t) / (t * t); });
    try {
        fit_tail(s, TimeWindow<double>{1.0, 30.0});
        FAIL() << "oscillatory window must be rejected";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind, "not-in-tail");
    }
}

TEST(TailFit, AutoWindowAfterRingdown) {
    auto s = make_series<double>(0.5, 0.1, 1496, [](double t) {
        return 5.0 * std::exp(-0.8 * t) * std::cos(2.1 * t) + 0.02 * std::pow(t, -4.0);
    });
    auto w = tail_window(s);
    EXPECT_GT(w.t1, 23.0);   // ringdown still visible before that
    EXPECT_LT(w.t1, 60.0);   // but the window must not start needlessly late
    EXPECT_NEAR(w.t2, s.times.back(), 1e-12);
    auto fit = fit_tail(s, w);
    EXPECT_NEAR(fit.gamma, 4.0, 0.05);

    auto osc = make_series<double>(1.0, 0.1, 300, [](double t) { return std::cos(t); });
    EXPECT_THROW(tail_window(osc), Error);

    // Tail sinking into a rounding floor: the window must stop before the
    // noise takes over instead of running to the end of the series.
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> noise(-1e-9, 1e-9);
    auto floor_s = make_series<double>(5.0, 0.25, 1581, [&](double t) {
        return std::pow(t, -4.0) + noise(rng);
    });
    auto wf = tail_window(floor_s);
    EXPECT_LT(wf.t2, 300.0);  // t^-4 crosses 1e-9 near t = 178
    EXPECT_GT(wf.t2, 60.0);
    auto ff = fit_tail(floor_s, wf);
    EXPECT_NEAR(ff.gamma, 4.0, 0.1);
}

TEST(Fits, WindowShiftRobustness) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1e-10, 1e-10);
    auto s = make_series<double>(0.0, 0.05, 1201, [&](double t) {
        return 2.0 * std::exp(-0.3 * t) * std::cos(0.9 * t + 1.0) + u(rng);
    });
    const double period = 2.0 * 3.14159265358979324 / 0.9;
    auto f1 = fit_damped_sinusoid(s, TimeWindow<double>{5.0, 30.0});
    auto f2 = fit_damped_sinusoid(s, TimeWindow<double>{5.0 + period, 30.0 + period});
    EXPECT_LT(std::abs(f1.omega - f2.omega), 1e-4);
    EXPECT_LT(std::abs(f1.gamma - f2.gamma), 1e-4);
}

TEST(Ringdown, ModeSeededSnapshots) {
    using C = std::complex<double>;
    RadialGrid<double> grid(0.05, 601);  // [1, 31]
    EquivariantIndex l1(1);
    const C lam(0.9, -0.3);
    const C c0 = std::polar(0.6, 0.8);
    auto psi_of = [](double r) { return (r - 1.0) * std::exp(C(0.0, 0.35) * (r - 1.0)); };

    QnmMode<double> mode{l1, 1, 0, ComplexFrequency<double>::from_lambda(lam), {}, {}, 0.0};
    for (std::size_t i = 0; i < grid.n; ++i) {
        mode.r.push_back(grid.r(i));
        mode.psi.push_back(psi_of(grid.r(i)));
    }
    std::vector<Snapshot<double>> snaps;
    for (double t : {4.5, 6.0, 8.0, 10.0}) {
        Snapshot<double> sn;
        sn.t = t;
        for (std::size_t i = 0; i < grid.n; ++i)
            sn.values.push_back((c0 * std::exp(C(0, -1) * lam * t) * psi_of(grid.r(i))).real());
        snaps.push_back(std::move(sn));
    }

    auto chk = ringdown_profile_check(grid, snaps, mode, 4.5);
    EXPECT_LT(std::abs(chk.coefficient - c0), 1e-10);
    EXPECT_NEAR(chk.t0, 0.8 / 0.9, 1e-10);
    EXPECT_NEAR(chk.amplitude, 0.6 * std::exp(-0.3 * 0.8 / 0.9), 1e-10);
    ASSERT_EQ(chk.deviation.size(), 3u);
    for (double d : chk.deviation) EXPECT_LT(d, 1e-12);

    // eigenfunction sampled on its own (finer) grid exercises interpolation
    QnmMode<double> fine{l1, 1, 0, ComplexFrequency<double>::from_lambda(lam), {}, {}, 0.0};
    for (double r = 1.0; r <= 31.0 + 1e-9; r += 0.01) {
        fine.r.push_back(r);
        fine.psi.push_back(psi_of(r));
    }
    auto chk2 = ringdown_profile_check(grid, snaps, fine, 4.5);
    EXPECT_LT(std::abs(chk2.coefficient - c0), 1e-6);
    for (double d : chk2.deviation) EXPECT_LT(d, 1e-6);

    // nothing after the fit instant: empty report
    auto tail = ringdown_profile_check(grid, snaps, mode, 10.0);
    EXPECT_TRUE(tail.times.empty());
    EXPECT_TRUE(tail.deviation.empty());

    // wavefront region empty at the fit time
    EXPECT_THROW(ringdown_profile_check(grid, snaps, mode, 4.5, 50.0), Error);

    // mode sampling must cover the comparison region
    QnmMode<double> shortm{l1, 1, 0, ComplexFrequency<double>::from_lambda(lam), {}, {}, 0.0};
    for (double r = 1.0; r <= 5.0 + 1e-9; r += 0.05) {
        shortm.r.push_back(r);
        shortm.psi.push_back(psi_of(r));
    }
    try {
        ringdown_profile_check(grid, snaps, shortm, 4.5);
        FAIL() << "short mode sampling must be rejected";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind, "bad-window");
    }
}
