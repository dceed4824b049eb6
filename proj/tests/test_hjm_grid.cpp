#include "discount_ts/hjm_grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "discount_ts/errors.hpp"

namespace dts {
namespace {

CurveGrid sampled(double level, double decay, double step, double max_maturity) {
    CurveGrid c;
    const auto n = static_cast<std::size_t>(std::llround(max_maturity / step));
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) * step;
        c.maturities.push_back(x);
        c.h_values.push_back(level * std::exp(-decay * x));
    }
    return c;
}

SimSettings settings(double dt, std::size_t n_steps, std::size_t n_paths, std::uint64_t seed = 0) {
    return SimSettings{dt, n_steps, n_paths, seed, 1};
}

VolSpec constant_vol(double s) { return VolSpec{VolKind::constant, {s}}; }

TEST(CurveGrid, ValidationAndIntegral) {
    EXPECT_THROW((CurveGrid{0.0, {0.0, 0.0}, {1.0, 1.0}}.validate()), InvalidArgument);
    EXPECT_THROW((CurveGrid{0.0, {0.0, 1.0}, {1.0}}.validate()), InvalidArgument);
    EXPECT_THROW((CurveGrid{0.5, {0.0, 1.0}, {1.0, 1.0}}.validate()), InvalidArgument);
    EXPECT_THROW((CurveGrid{0.0, {0.0, 1.0}, {1.0, NAN}}.validate()), InvalidArgument);
    EXPECT_DOUBLE_EQ((CurveGrid{0.0, {0.0, 1.0, 3.0}, {0.1, 0.1, 0.1}}.discount_integral()), 0.3);
}

TEST(VolSpec, Shapes) {
    EXPECT_EQ(VolSpec{}.n_factors(), 0u);
    EXPECT_EQ(constant_vol(0.2).sigma(0, 5.0), 0.2);
    EXPECT_EQ((VolSpec{VolKind::proportional, {0.1, 0.3}}.sigma(1, 2.0)), 0.6);
    EXPECT_THROW((VolSpec{VolKind::constant, {}}.validate()), InvalidArgument);
}

TEST(SpdeFlow, InitialTimeReturnsInitialCurve) {
    const auto c = exponential_curve(0.02, 0.1);
    for (double x : {0.0, 1.0, 7.3}) EXPECT_EQ(spde_flow(c, 0.0, x), c.psi(x));
    const auto s = sampled(0.02, 0.1, 0.5, 10.0);
    for (std::size_t i = 0; i < s.maturities.size(); ++i)
        EXPECT_EQ(spde_flow(s, 0.0, s.maturities[i]), s.h_values[i]);
}

TEST(SpdeFlow, StationaryCurve) {
    const double theta = 0.05;
    const auto c = exponential_curve(theta, theta);
    for (double t : {0.0, 1.0, 10.0, 50.0})
        for (double x : {0.0, 2.5, 20.0}) EXPECT_NEAR(spde_flow(c, t, x), theta * std::exp(-theta * x), 1e-12);
}

TEST(SpdeFlow, ConstantCurve) {
    const double c = 0.5;
    const auto curve = exponential_curve(c, 0.0);
    for (double t : {0.0, 0.5, 1.9})
        for (double x : {0.0, 1.0}) EXPECT_NEAR(spde_flow(curve, t, x), c / (1.0 - c * t), 1e-12);
    try {
        spde_flow(curve, 2.5, 0.0);
        FAIL() << "expected explosion";
    } catch (const ExplosionError& e) {
        EXPECT_NEAR(e.time(), 2.0, 1e-9);
    }
    EXPECT_NEAR(critical_time(curve, 3.0), 2.0, 1e-12);
    EXPECT_TRUE(std::isinf(critical_time(exponential_curve(0.02, 0.1), 100.0)));
}

TEST(SpdeFlow, CriticalTimeOfDecayingCurve) {
    // int_0^t a e^{-b s} ds = 1  <=>  t = -log(1 - b/a) / b
    const double a = 0.5, b = 0.1;
    EXPECT_NEAR(critical_time(exponential_curve(a, b), 10.0), -std::log1p(-b / a) / b, 1e-10);
}

TEST(SpdeFlow, SampledMatchesAnalyticOnFineGrid) {
    const auto c = exponential_curve(0.02, 0.1);
    const auto s = sampled(0.02, 0.1, 1e-3, 20.0);
    for (double t : {0.5, 3.0, 10.0})
        for (double x : {0.0, 1.25, 9.0}) EXPECT_NEAR(spde_flow(s, t, x), spde_flow(c, t, x), 1e-10);
    EXPECT_THROW(spde_flow(s, 15.0, 9.0), InvalidArgument);
    EXPECT_THROW(spde_flow(s, -1.0, 0.0), InvalidArgument);
}

TEST(SpdeFlow, SampledCriticalTime) {
    const auto s = sampled(0.5, 0.0, 0.01, 3.0);
    EXPECT_NEAR(critical_time(s, 3.0), 2.0, 1e-9);
    EXPECT_THROW(spde_flow(s, 2.5, 0.0), ExplosionError);
}

TEST(SpdeFlow, PreservesPositivityCondition) {
    // int_0^T psi_0 < 1 on the horizon  =>  int_0^{T-t} psi_t < 1 for every t.
    const auto s = sampled(0.08, 0.05, 0.05, 12.0);
    ASSERT_LT(s.discount_integral(), 1.0);
    for (double t = 0.0; t < 12.0; t += 0.5) {
        CurveGrid now;
        for (double x : s.maturities) {
            if (t + x > 12.0 + 1e-9) break;
            now.maturities.push_back(x);
            now.h_values.push_back(spde_flow(s, t, x));
        }
        if (now.maturities.size() < 2) continue;
        EXPECT_LT(now.discount_integral(), 1.0) << "t = " << t;
    }
}

TEST(SimulateGrid, ZeroVolMatchesSampledFlow) {
    for (const auto& [level, decay] : {std::pair{0.05, 0.05}, std::pair{0.02, 0.1}}) {
        const auto init = sampled(level, decay, 0.05, 10.0);
        const auto ens = simulate_grid(init, VolSpec{}, GridOptions{}, settings(0.05, 200, 1));
        for (std::size_t rec = 0; rec < ens.n_records(); ++rec) {
            const double t = ens.record_time(rec);
            for (std::size_t j = ens.diagonal_node(ens.record_step(rec)); j < ens.n_nodes(); ++j)
                EXPECT_NEAR(ens.h(0, rec, j), spde_flow(init, t, ens.maturities()[j] - t), 1e-10);
        }
    }
}

TEST(SimulateGrid, ZeroVolMatchesAnalyticFlowOnFineLattice) {
    const auto curve = exponential_curve(0.02, 0.1);
    const auto init = sampled(0.02, 0.1, 1e-3, 3.0);
    const auto ens = simulate_grid(init, VolSpec{}, GridOptions{}, settings(1e-3, 3000, 1));
    double worst = 0.0;
    for (std::size_t rec = 0; rec < ens.n_records(); rec += 50) {
        const double t = ens.record_time(rec);
        for (std::size_t j = ens.diagonal_node(ens.record_step(rec)); j < ens.n_nodes(); ++j)
            worst = std::max(worst, std::abs(ens.h(0, rec, j) - spde_flow(curve, t, ens.maturities()[j] - t)));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(SimulateGrid, ExpiredNodesAreNaN) {
    const auto ens = simulate_grid(sampled(0.03, 0.1, 0.1, 2.0), VolSpec{}, GridOptions{}, settings(0.1, 5, 1));
    const std::size_t last = ens.n_records() - 1;
    EXPECT_EQ(ens.diagonal_node(5), 5u);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_TRUE(std::isnan(ens.h(0, last, j)));
    EXPECT_FALSE(std::isnan(ens.h(0, last, 5)));
}

TEST(SimulateGrid, ConstantCurveExplodesNearCriticalTime) {
    const auto ens =
        simulate_grid(sampled(0.5, 0.0, 0.01, 3.0), VolSpec{}, GridOptions{}, settings(0.01, 300, 1));
    ASSERT_EQ(ens.explosions().size(), 1u);
    const double t = ens.explosions()[0].time;
    EXPECT_GT(t, 1.9);
    EXPECT_LT(t, 2.1);
    EXPECT_TRUE(ens.exploded(0));
    try {
        ens.require_no_explosion();
        FAIL() << "expected explosion";
    } catch (const ExplosionError& e) {
        EXPECT_EQ(e.time(), t);
    }
}

TEST(SimulateGrid, EulerSchemeIsFirstOrderClose) {
    const auto init = sampled(0.02, 0.1, 0.01, 5.0);
    GridOptions euler;
    euler.scheme = GridScheme::euler;
    const auto ens = simulate_grid(init, VolSpec{}, euler, settings(0.01, 200, 1));
    const std::size_t rec = ens.n_records() - 1;
    const double t = ens.record_time(rec);
    for (std::size_t j = 200; j < ens.n_nodes(); j += 50) {
        const double exact = spde_flow(init, t, ens.maturities()[j] - t);
        EXPECT_NEAR(ens.h(0, rec, j), exact, 10.0 * 0.01 * exact);
        EXPECT_NE(ens.h(0, rec, j), exact);
    }
}

TEST(SimulateGrid, ZeroDriftKeepsZeroVolCurveFrozen) {
    const auto init = sampled(0.02, 0.1, 0.1, 3.0);
    GridOptions opt;
    opt.drift = GridDrift::zero;
    const auto ens = simulate_grid(init, VolSpec{}, opt, settings(0.1, 10, 1));
    for (std::size_t j = 10; j < ens.n_nodes(); ++j) EXPECT_EQ(ens.h(0, ens.n_records() - 1, j), init.h_values[j]);
}

TEST(SimulateGrid, MarketPriceOfRiskShiftsMean) {
    // Zero drift, constant vol: h(t,T) = h0 + s (m t + W_t).
    const double s = 0.01, m = 0.5;
    GridOptions opt;
    opt.drift = GridDrift::zero;
    opt.market_price_of_risk = {m};
    const std::size_t n = 20000;
    const auto ens = simulate_grid(sampled(0.02, 0.0, 0.1, 2.0), constant_vol(s), opt, settings(0.1, 10, n, 4));
    const std::size_t rec = ens.n_records() - 1;
    double sum = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double v = ens.h(p, rec, 15);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean - (0.02 + s * m * 1.0)), 3.0 * se);
    EXPECT_THROW(simulate_grid(sampled(0.02, 0.0, 0.1, 2.0), VolSpec{VolKind::constant, {s, s}}, opt,
                               settings(0.1, 10, 1)),
                 InvalidArgument);
}

TEST(SimulateGrid, RequiresDiagonalOnLattice) {
    EXPECT_THROW(simulate_grid(sampled(0.02, 0.1, 0.25, 5.0), VolSpec{}, GridOptions{}, settings(0.1, 10, 1)),
                 InvalidArgument);
    CurveGrid shifted{0.1, {0.1, 0.2, 0.3}, {0.02, 0.02, 0.02}};
    EXPECT_THROW(simulate_grid(shifted, VolSpec{}, GridOptions{}, settings(0.1, 1, 1)), InvalidArgument);
}

TEST(SimulateGrid, IndependentOfThreadCount) {
    auto run = [](unsigned threads) {
        set_max_threads(threads);
        const auto ens = simulate_grid(sampled(0.03, 0.05, 0.1, 3.0), VolSpec{VolKind::proportional, {0.2, 0.1}},
                                       GridOptions{}, settings(0.1, 20, 23, 7));
        std::vector<double> out;
        for (std::size_t p = 0; p < ens.n_paths(); ++p) out.push_back(ens.h(p, ens.n_records() - 1, 25));
        return out;
    };
    const auto one = run(1);
    EXPECT_EQ(one, run(2));
    EXPECT_EQ(one, run(5));
    set_max_threads(0);
}

TEST(SimulateGrid, HMaxGuard) {
    GridOptions opt;
    opt.h_max = 0.05;
    const auto ens = simulate_grid(sampled(0.04, 0.0, 0.1, 10.0), VolSpec{}, opt, settings(0.1, 60, 1));
    ASSERT_EQ(ens.explosions().size(), 1u);
    // 0.04 / (1 - 0.04 t) reaches 0.05 at t = 5.
    EXPECT_GE(ens.explosions()[0].time, 5.0 - 1e-9);
    EXPECT_LE(ens.explosions()[0].time, 5.1 + 1e-9);
}

TEST(Toy, ClosedForms) {
    const ToyParams p{0.05, 0.0};
    EXPECT_EQ(toy_h(p, 0.03, 0.0), 0.03);
    EXPECT_EQ(toy_discount(p, 0.03, 0.0), 0.0);
    EXPECT_EQ(toy_bond(p, 0.03, 0.0), 1.0);
    EXPECT_NEAR(toy_discount(p, 0.03, 10.0), 0.236082, 5e-7);
    EXPECT_NEAR(toy_bond(p, 0.03, 10.0), 0.763918, 5e-7);
    EXPECT_NEAR(toy_bond(p, 0.05, 500.0), std::exp(-0.05 * 500.0), 1e-10);
    EXPECT_GE(toy_bond(p, 0.05, 500.0), 0.0);
    EXPECT_TRUE(toy_in_domain(p, 0.0));
    EXPECT_TRUE(toy_in_domain(p, 0.05));
    EXPECT_FALSE(toy_in_domain(p, 0.06));
    EXPECT_FALSE(toy_in_domain(p, -0.01));
    EXPECT_THROW(toy_h(p, 0.03, -1.0), InvalidArgument);
    EXPECT_THROW(toy_h(ToyParams{0.0, 0.0}, 0.03, 1.0), InvalidArgument);
}

TEST(Toy, RateVolatilityVanishesAtBoundaries) {
    const ToyParams p{0.05, 0.02};
    EXPECT_EQ(p.short_rate_vol(0.0), 0.0);
    EXPECT_EQ(p.short_rate_vol(0.05), 0.0);
    EXPECT_NEAR(p.short_rate_vol(0.025), 0.02 * 0.25, 1e-16);
}

TEST(SimulateToyRate, LogisticOde) {
    const double theta = 0.05, r0 = 0.025;
    const auto b = simulate_toy_rate(ToyParams{theta, 0.0}, r0, settings(1e-4, 10000, 1));
    // r' = -(theta - r) r
    const double exact = theta * r0 / (r0 + (theta - r0) * std::exp(theta * 1.0));
    EXPECT_NEAR(b.terminal(0)[0], exact, 1e-6);
}

TEST(SimulateToyRate, FixedPoints) {
    for (double r0 : {0.0, 0.05}) {
        const auto b = simulate_toy_rate(ToyParams{0.05, 0.02}, r0, settings(1e-3, 100, 3));
        for (std::size_t rec = 0; rec < b.n_records(); ++rec) EXPECT_EQ(b.state(2, rec)[0], r0);
    }
}

TEST(SimulateToyRate, StaysInDomain) {
    const double theta = 0.05;
    const auto b = simulate_toy_rate(ToyParams{theta, 0.5 * theta}, 0.01, settings(1e-3, 1000, 1000, 3));
    for (std::size_t p = 0; p < b.n_paths(); ++p)
        for (std::size_t rec = 0; rec < b.n_records(); ++rec) {
            EXPECT_GE(b.state(p, rec)[0], 0.0);
            EXPECT_LE(b.state(p, rec)[0], theta);
        }
    EXPECT_LT(b.clamp_fraction(), 0.01);
    EXPECT_THROW(simulate_toy_rate(ToyParams{theta, 0.0}, 0.06, settings(1e-3, 10, 1)), InvalidArgument);
}

TEST(BondReturnVol, Cases) {
    const auto grid = sampled(0.03, 0.0, 0.25, 5.0);
    EXPECT_EQ(bond_return_vol(grid, VolSpec{}, 2.0), (std::vector<double>{0.0}));
    EXPECT_EQ(bond_return_vol(grid, constant_vol(0.01), 0.0), (std::vector<double>{0.0}));
    const double p = 1.0 - 0.03 * 2.0;
    EXPECT_NEAR(bond_return_vol(grid, constant_vol(0.01), 2.0)[0], -0.01 * 2.0 / p, 1e-12);
    const auto two = bond_return_vol(grid, VolSpec{VolKind::proportional, {0.1, 0.2}}, 2.0);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_NEAR(two[1], -0.2 * 0.03 * 2.0 / p, 1e-12);
    EXPECT_THROW(bond_return_vol(grid, constant_vol(0.01), 2.1), InvalidArgument);
    EXPECT_THROW(bond_return_vol(sampled(0.5, 0.0, 0.25, 5.0), constant_vol(0.01), 3.0), DegenerateCurve);
}

}  // namespace
}  // namespace dts
