#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "decumulate/errors.hpp"
#include "decumulate/hjb.hpp"
#include "decumulate/rng.hpp"

using namespace decumulate;

namespace {

GridSpec small_grid(std::size_t n = 64, std::size_t n_debt = 128) {
    GridSpec g = GridSpec::square(n);
    g.n_debt = n_debt;
    return g;
}

MarketParams no_jumps() {
    auto m = MarketParams::calibrated();
    m.stock.lambda = 0.0;
    m.bond.lambda = 0.0;
    return m;
}

std::vector<double> solvent_of(const HjbGrid& g, double (*f)(double, double)) {
    std::vector<double> v(g.x.size() * g.y.size());
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (std::size_t j = 0; j < g.y.size(); ++j) v[i * g.y.size() + j] = f(std::exp(g.x[i]), std::exp(g.y[j]));
    return v;
}

// Largest relative first-moment error over nodes with both holdings in [1, 100].
double stock_moment_error(const MarketParams& m) {
    const HjbGrid g(small_grid(256, 256));
    const MarketKernel k(g, m, 1.0);
    auto v = solvent_of(g, [](double s, double) { return s; });
    k.pide_advance(v);
    const double growth = std::exp(m.stock.mu);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (std::size_t j = 0; j < g.y.size(); ++j) {
            const double s = std::exp(g.x[i]);
            const double b = std::exp(g.y[j]);
            if (s < 1.0 || s > 100.0 || b < 1.0 || b > 100.0) continue;
            worst = std::max(worst, std::abs(v[i * g.y.size() + j] / (s * growth) - 1.0));
        }
    return worst;
}

double debt_moment_error(const MarketParams& m) {
    const HjbGrid g(small_grid(64, 2048));
    const MarketKernel k(g, m, 1.0);
    std::vector<double> d(g.z.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = -std::exp(g.z[i]);
    k.debt_advance(d);
    const double growth = std::exp(m.bond.mu + m.borrow_spread);
    double worst = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = std::exp(g.z[i]);
        if (w < 1.0 || w > 100.0) continue;
        worst = std::max(worst, std::abs(d[i] / (-w * growth) - 1.0));
    }
    return worst;
}

}  // namespace

TEST(TerminalCondition, Examples) {
    ScenarioConfig s;
    s.epsilon = 0.0;
    EXPECT_EQ(terminal_value(500.0, 58.0, s), 58.0);
    EXPECT_DOUBLE_EQ(terminal_value(0.0, 58.0, s), -1102.0);
    EXPECT_DOUBLE_EQ(terminal_value(-10.0, 0.0, s), -200.0);
    s.kappa = 2.0;
    EXPECT_EQ(terminal_value(500.0, 58.0, s), 116.0);
    s.epsilon = 1e-6;
    EXPECT_DOUBLE_EQ(terminal_value(500.0, 58.0, s), 116.0 + 5e-4);
    s.es_only = true;
    EXPECT_DOUBLE_EQ(terminal_value(500.0, 58.0, s), 58.0 + 5e-4);
}

TEST(TerminalCondition, SolventGridIsFlatAtZeroWstar) {
    ScenarioConfig s;
    s.epsilon = 0.0;
    const HjbGrid g(small_grid(32, 32));
    const auto t = terminal_condition(g, 0.0, s);
    for (double v : t.solvent) EXPECT_EQ(v, 0.0);
    for (std::size_t k = 0; k < g.z.size(); ++k) EXPECT_DOUBLE_EQ(t.debt[k], -std::exp(g.z[k]) / s.alpha);
}

TEST(HjbGrid, WealthAxisLayout) {
    const HjbGrid g(small_grid(32, 16));
    ASSERT_EQ(g.wealth.size(), 16u + 1u + 64u);
    EXPECT_EQ(g.wealth[g.zero_index], 0.0);
    for (std::size_t k = 1; k < g.wealth.size(); ++k) EXPECT_LT(g.wealth[k - 1], g.wealth[k]);
    EXPECT_NEAR(g.wealth.back(), 2e5, 1e-6);
    EXPECT_NEAR(g.wealth.front(), -1e5, 1e-6);
    GridSpec bad = small_grid(48);
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(PideAdvance, PreservesConstants) {
    const HjbGrid g(small_grid(128, 128));
    const MarketKernel k(g, MarketParams::calibrated(), 1.0);
    std::vector<double> v(g.x.size() * g.y.size(), 1234.5);
    k.pide_advance(v);
    for (double x : v) EXPECT_NEAR(x, 1234.5, 1e-10 * 1234.5);
    std::vector<double> d(g.z.size(), -7.0);
    k.debt_advance(d);
    for (double x : d) EXPECT_NEAR(x, -7.0, 1e-10 * 7.0);
    EXPECT_LE(k.boundary_mass(), 1e-8);
}

TEST(PideAdvance, FirstMomentWithoutJumps) { EXPECT_LE(stock_moment_error(no_jumps()), 1e-6); }

TEST(PideAdvance, FirstMomentWithJumps) { EXPECT_LE(stock_moment_error(MarketParams::calibrated()), 1e-6); }

TEST(PideAdvance, BondMomentWithCorrelation) {
    const auto m = MarketParams::calibrated();
    GridSpec spec = small_grid(256, 128);
    spec.n_b = 1024;
    const HjbGrid g(spec);
    const MarketKernel k(g, m, 1.0);
    auto v = solvent_of(g, [](double s, double b) { return s * b; });
    k.pide_advance(v);
    // E[R_s R_b] = e^{mu_s + mu_b + rho sigma_s sigma_b} for independent jumps.
    const double growth = std::exp(m.stock.mu + m.bond.mu + m.rho_sb * m.stock.sigma * m.bond.sigma);
    const std::size_t i = 128;
    const std::size_t j = 480;
    const double sb = std::exp(g.x[i]) * std::exp(g.y[j]);
    EXPECT_NEAR(v[i * g.y.size() + j] / (sb * growth), 1.0, 1e-6);
}

TEST(DebtAdvance, FirstMoment) {
    EXPECT_LE(debt_moment_error(no_jumps()), 1e-6);
    EXPECT_LE(debt_moment_error(MarketParams::calibrated()), 1e-6);
    auto m = no_jumps();
    m.borrow_spread = 0.02;
    EXPECT_LE(debt_moment_error(m), 1e-6);
}

TEST(MarketKernel, RefusesLooseTailTolerance) {
    ScenarioConfig s;
    GridSpec g = small_grid(32, 32);
    g.tail_tolerance = 1e-3;
    EXPECT_THROW(HjbSolver(s, MarketParams::calibrated(), g), NumericalError);
}

TEST(WithdrawalSearch, Examples) {
    ScenarioConfig s;
    const std::function<double(double)> zero = [](double) { return 0.0; };
    EXPECT_EQ(withdrawal_search(100.0, zero, s, 101).q, 60.0);
    EXPECT_EQ(withdrawal_search(100.0, zero, s, 101).value, 60.0);
    const std::function<double(double)> identity = [](double x) { return x; };
    EXPECT_EQ(withdrawal_search(100.0, identity, s, 101).q, 60.0);
    double seen = 0.0;
    const std::function<double(double)> probe = [&](double x) {
        seen = x;
        return 0.0;
    };
    EXPECT_EQ(withdrawal_search(30.0, probe, s, 101).q, 35.0);
    EXPECT_EQ(seen, -5.0);
    EXPECT_EQ(withdrawal_search(47.3, zero, s, 101).q, 47.3);
    s.es_only = true;
    EXPECT_EQ(withdrawal_search(1000.0, identity, s, 101).q, 35.0);
}

TEST(AllocationSearch, TieGoesToSmallestFraction) {
    const HjbGrid g(small_grid(32, 32));
    const std::vector<double> flat(g.x.size() * g.y.size(), 3.0);
    EXPECT_EQ(allocation_search(g, flat, 100.0, 101).p, 0.0);
    const auto stock = solvent_of(g, [](double s, double) { return s; });
    EXPECT_EQ(allocation_search(g, stock, 100.0, 101).p, 1.0);
}

TEST(RebalanceOptimize, ZeroContinuationTakesMaximum) {
    ScenarioConfig s;
    const HjbGrid g(small_grid(32, 32));
    const std::vector<double> v(g.x.size() * g.y.size(), 0.0);
    const std::vector<double> d(g.z.size(), 0.0);
    const auto r = rebalance_optimize(g, v, d, 0.0, s);
    for (std::size_t k = 0; k < g.wealth.size(); ++k) {
        const double w = g.wealth[k];
        const double expected = w <= s.q_min ? s.q_min : std::min(w, s.q_max);
        EXPECT_EQ(r.q[k], expected) << "w = " << w;
    }
}

// The sampled kernel is a nonnegative density only once the grid resolves both volatilities.
TEST(RebalanceOptimize, MonotoneInContinuation) {
    ScenarioConfig s;
    GridSpec spec = small_grid(256, 2048);
    spec.n_b = 1024;
    spec.n_wealth = 512;
    const HjbGrid g(spec);
    const MarketKernel k(g, MarketParams::calibrated(), 1.0);
    const auto t = terminal_condition(g, 58.0, s);
    Stream rng(5, 0);
    auto lo = t.solvent;
    auto hi = t.solvent;
    for (double& x : hi) x += 5.0 * rng.uniform();
    auto dlo = t.debt;
    auto dhi = t.debt;
    for (double& x : dhi) x += 5.0 * rng.uniform();
    k.pide_advance(lo);
    k.pide_advance(hi);
    k.debt_advance(dlo);
    k.debt_advance(dhi);
    for (std::size_t i = 0; i < lo.size(); ++i) EXPECT_LE(lo[i], hi[i] + 1e-9);
    for (std::size_t i = 0; i < dlo.size(); ++i) EXPECT_LE(dlo[i], dhi[i] + 1e-9);
    const double z = terminal_value(0.0, 58.0, s);
    const auto a = rebalance_optimize(g, lo, dlo, z, s);
    const auto b = rebalance_optimize(g, hi, dhi, z + 1.0, s);
    for (std::size_t i = 0; i < a.value.size(); ++i) EXPECT_LE(a.value[i], b.value[i] + 1e-9);
}

TEST(Solve, SinglePeriodMatchesEnumeration) {
    ScenarioConfig s;
    s.M = 0;
    s.T = 1.0;
    for (double w0 : {1000.0, 47.0, 20.0}) {
        s.W0 = w0;
        const double w_star = 58.0;
        const auto vg = solve_fixed_wstar(w_star, s, MarketParams::calibrated(), small_grid(32, 32));
        double best = -std::numeric_limits<double>::infinity();
        if (w0 <= s.q_min) {
            best = s.q_min + terminal_value(w0 - s.q_min, w_star, s);
        } else {
            for (int k = 0; k <= 100; ++k) {
                const double q = k == 100 ? s.q_max : s.q_min + 0.25 * k;
                if (q <= w0) best = std::max(best, q + terminal_value(w0 - q, w_star, s));
            }
            if (w0 < s.q_max) best = std::max(best, w0 + terminal_value(0.0, w_star, s));
        }
        EXPECT_DOUBLE_EQ(vg.value_t0, best) << "W0 = " << w0;
    }
}

TEST(Solve, StoredControlsAreAdmissible) {
    ScenarioConfig s;
    const auto vg = solve_fixed_wstar(58.0, s, MarketParams::calibrated(), small_grid(64, 128));
    ASSERT_EQ(vg.q.size(), s.M + 1);
    for (std::size_t n = 0; n <= s.M; ++n) {
        for (std::size_t k = 0; k < vg.wealth.size(); ++k) {
            const double w = vg.wealth[k];
            EXPECT_GE(vg.q[n][k], s.q_min);
            EXPECT_LE(vg.q[n][k], std::max(s.q_min, std::min(s.q_max, w)));
            EXPECT_GE(vg.p[n][k], 0.0);
            EXPECT_LE(vg.p[n][k], 1.0);
            if (w <= 0.0 || n == s.M) EXPECT_EQ(vg.p[n][k], 0.0);
        }
    }
    EXPECT_TRUE(std::isfinite(vg.value_t0));
    EXPECT_LE(vg.boundary_mass, 1e-8);
}

TEST(Solve, WithdrawalsAreNearlyBangBang) {
    ScenarioConfig s;
    const auto vg = solve_fixed_wstar(58.0, s, MarketParams::calibrated(), GridSpec::square(512));
    std::size_t interior = 0;
    std::size_t total = 0;
    for (std::size_t n = 0; n <= s.M; ++n)
        for (std::size_t k = 0; k < vg.wealth.size(); ++k) {
            const double w = vg.wealth[k];
            const double q = vg.q[n][k];
            ++total;
            if (q != s.q_min && q != s.q_max && q != w) ++interior;
        }
    EXPECT_LT(static_cast<double>(interior) / static_cast<double>(total), 0.02);
}

TEST(OptimizeWstar, AttainsCoarseMaximum) {
    ScenarioConfig s;
    s.M = 10;
    s.T = 10.0;
    WstarSearch search;
    search.lo = -200.0;
    search.hi = 600.0;
    search.n_coarse = 9;
    search.tol = 0.5;
    const auto r = optimize_wstar(s, MarketParams::calibrated(), small_grid(32, 64), search);
    ASSERT_GE(r.evaluations.size(), 9u);
    for (const auto& [w, v] : r.evaluations) EXPECT_LE(v, r.value);
    EXPECT_EQ(r.controls.w_star, r.w_star);
    EXPECT_EQ(r.controls.value_t0, r.value);
}

TEST(StoredControls, ConstantControlDepletesDeterministically) {
    ScenarioConfig s;
    ValueGrid vg;
    vg.scenario = s;
    vg.wealth = {-2000.0, 0.0, 500.0, 2000.0};
    vg.q.assign(s.M + 1, std::vector<double>(4, 35.0));
    vg.p.assign(s.M + 1, std::vector<double>(4, 0.0));
    vg.value.assign(s.M + 1, std::vector<double>(4, 0.0));
    const PathSet paths(3, s.M, std::vector<double>(3 * s.M * 2, 1.0), PathSource::synthetic);
    const auto r = rollout_stored_controls(vg, paths, MarketParams::calibrated());
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_DOUBLE_EQ(r.result.terminal_wealth[j], -85.0);
        EXPECT_DOUBLE_EQ(r.result.withdrawal_sums[j], 1085.0);
    }
    EXPECT_EQ(r.clamped, 0u);
}

TEST(StoredControls, ClampsIntoAdmissibleSets) {
    ScenarioConfig s;
    ValueGrid vg;
    vg.scenario = s;
    vg.wealth = {0.0, 100.0};
    vg.q.assign(s.M + 1, {70.0, 70.0});
    vg.p.assign(s.M + 1, {1.4, -0.2});
    vg.value.assign(s.M + 1, {0.0, 0.0});
    const StoredControlPolicy pol(vg);
    EXPECT_EQ(pol.withdrawal(50.0, 0), 50.0);
    EXPECT_EQ(pol.withdrawal(30.0, 0), 35.0);
    EXPECT_EQ(pol.allocation(0.0, 0), 1.0);
    EXPECT_EQ(pol.allocation(100.0, 0), 0.0);
}

TEST(ControlsFile, RoundTrip) {
    ScenarioConfig s;
    s.M = 3;
    s.T = 3.0;
    const auto vg = solve_fixed_wstar(40.0, s, MarketParams::calibrated(), small_grid(32, 32));
    const auto file = std::filesystem::temp_directory_path() / "decumulate_controls.dctl";
    write_controls(vg, file);
    const auto back = read_controls(file);
    EXPECT_EQ(back.w_star, vg.w_star);
    EXPECT_EQ(back.value_t0, vg.value_t0);
    EXPECT_EQ(back.wealth, vg.wealth);
    EXPECT_EQ(back.q, vg.q);
    EXPECT_EQ(back.p, vg.p);
    EXPECT_EQ(back.value, vg.value);
    EXPECT_EQ(back.scenario, vg.scenario);
    EXPECT_EQ(back.spec.n_s, vg.spec.n_s);
    std::filesystem::resize_file(file, std::filesystem::file_size(file) - 16);
    EXPECT_THROW(read_controls(file), DataError);
    std::filesystem::remove(file);
}
