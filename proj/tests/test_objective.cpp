#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "decumulate/objective.hpp"
#include "decumulate/rng.hpp"

using namespace decumulate;

namespace {

struct FixedPolicy {
    double q = 35.0;
    double p = 0.5;
    double withdrawal(double, std::size_t) const { return q; }
    double allocation(double, std::size_t) const { return p; }
};

PathSet constant_paths(std::size_t n, std::size_t m, double rs = 1.0, double rb = 1.0) {
    std::vector<double> data;
    for (std::size_t k = 0; k < n * m; ++k) {
        data.push_back(rs);
        data.push_back(rb);
    }
    return PathSet(n, m, std::move(data), PathSource::synthetic);
}

// Brute-force sup of the Rockafellar form over every sample value.
double sup_over_samples(const std::vector<double>& x, double alpha) {
    double best = -std::numeric_limits<double>::infinity();
    for (double w : x) best = std::max(best, rockafellar_es(x, w, alpha));
    return best;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("decumulate_objective_" + name);
}

}  // namespace

TEST(Rollout, ConstantMinimumWithdrawalGoesInsolvent) {
    ScenarioConfig s;
    const auto r = rollout(FixedPolicy{35.0, 0.5}, constant_paths(1, 30), s, MarketParams::calibrated());
    EXPECT_DOUBLE_EQ(r.terminal_wealth[0], -85.0);
    EXPECT_DOUBLE_EQ(r.withdrawal_sums[0], 1085.0);
}

TEST(Rollout, OnePeriodHandArithmetic) {
    ScenarioConfig s;
    s.T = 1.0;
    s.M = 1;
    const auto r = rollout(FixedPolicy{35.0, 1.0}, constant_paths(1, 1, 2.0, 1.0), s, MarketParams::calibrated());
    EXPECT_EQ(r.terminal_wealth[0], 1895.0);
    EXPECT_EQ(r.withdrawal_sums[0], 70.0);
}

TEST(Rollout, BengenDepletesLinearly) {
    ScenarioConfig s;
    const auto r = rollout(bengen_policy(40.0, 0.5), constant_paths(2, 30), s, MarketParams::calibrated(), true);
    for (std::size_t i = 0; i <= s.M; ++i) {
        EXPECT_DOUBLE_EQ(r.wealth_trace[i], 1000.0 - 40.0 * static_cast<double>(i));
        EXPECT_EQ(r.q_trace[i], 40.0);
    }
    EXPECT_DOUBLE_EQ(r.terminal_wealth[1], 1000.0 - 31.0 * 40.0);
    EXPECT_THROW(bengen_policy(40.0, 1.5), std::invalid_argument);
}

TEST(Rollout, DebtGrowsWithBondAndSpread) {
    ScenarioConfig s;
    s.T = 2.0;
    s.M = 2;
    auto m = MarketParams::calibrated();
    m.borrow_spread = 0.02;
    // 1000 - 1100 = -100 after the first withdrawal, then two periods of debt growth.
    const auto r = rollout(FixedPolicy{1100.0, 0.7}, constant_paths(1, 2, 3.0, 1.05), s, m, true);
    const double g = 1.05 * std::exp(0.02);
    EXPECT_NEAR(r.wealth_trace[1], -100.0 * g, 1e-12);
    EXPECT_EQ(r.p_trace[0], 0.0);
    EXPECT_NEAR(r.terminal_wealth[0], (-100.0 * g - 1100.0) * g - 1100.0, 1e-9);
}

TEST(Rollout, RejectsPeriodMismatch) {
    ScenarioConfig s;
    EXPECT_THROW(rollout(FixedPolicy{}, constant_paths(1, 10), s, MarketParams::calibrated()),
                 std::invalid_argument);
}

TEST(Rollout, TracesReplayTheBudgetIdentity) {
    ScenarioConfig s;
    const auto m = MarketParams::calibrated();
    const auto paths = simulate_paths(m, 400, s.M, s.dt(), 2);
    const auto r = rollout(bengen_policy(45.0, 0.6), paths, s, m, true);
    const std::size_t k = s.M + 1;
    for (std::size_t j = 0; j < paths.n_paths(); ++j) {
        double w = s.W0;
        double sum = 0.0;
        for (std::size_t i = 0; i <= s.M; ++i) {
            EXPECT_EQ(r.wealth_trace[j * k + i], w);
            const double q = r.q_trace[j * k + i];
            sum += q;
            const double wp = w - q;
            if (i == s.M) {
                w = wp;
                break;
            }
            const double p = r.p_trace[j * k + i];
            w = wp > 0.0 ? wp * (p * paths.gross(j, i, 0) + (1.0 - p) * paths.gross(j, i, 1))
                         : wp * paths.gross(j, i, 1);
        }
        EXPECT_EQ(r.terminal_wealth[j], w);
        EXPECT_EQ(r.withdrawal_sums[j], sum);
    }
    const auto plain = rollout(bengen_policy(45.0, 0.6), paths, s, m, false);
    EXPECT_EQ(plain.terminal_wealth, r.terminal_wealth);
}

TEST(Rollout, MonotoneInReturns) {
    ScenarioConfig s;
    const auto m = MarketParams::calibrated();
    const auto paths = simulate_paths(m, 2000, s.M, s.dt(), 6);
    std::vector<double> stock_up(paths.raw().begin(), paths.raw().end());
    auto both_up = stock_up;
    for (std::size_t k = 0; k < stock_up.size(); k += 2) {
        stock_up[k] *= 1.01;
        both_up[k] *= 1.01;
        both_up[k + 1] *= 1.01;
    }
    const PathSet ps(paths.n_paths(), s.M, stock_up, PathSource::synthetic);
    const PathSet pb(paths.n_paths(), s.M, both_up, PathSource::synthetic);
    const auto policy = bengen_policy(45.0, 0.5);
    const auto base = rollout(policy, paths, s, m, true);
    const auto rs = rollout(policy, ps, s, m);
    const auto rb = rollout(policy, pb, s, m);
    std::size_t solvent = 0;
    for (std::size_t j = 0; j < paths.n_paths(); ++j) {
        EXPECT_GE(rs.terminal_wealth[j], base.terminal_wealth[j]);
        // Higher bond returns also grow debt, so the joint shift is only monotone while solvent.
        const auto* w = base.wealth_trace.data() + j * (s.M + 1);
        if (std::all_of(w, w + s.M + 1, [](double v) { return v > 45.0; })) {
            ++solvent;
            EXPECT_GE(rb.terminal_wealth[j], base.terminal_wealth[j]);
        }
    }
    EXPECT_GT(solvent, 1000u);
}

TEST(EmpiricalEs, Examples) {
    const std::vector<double> x = {20.0, -5.0, 10.0, 0.0};
    EXPECT_EQ(empirical_es(x, 0.25), -5.0);
    EXPECT_DOUBLE_EQ(empirical_es(x, 1.0), 6.25);
    EXPECT_EQ(empirical_es(x, 0.5), -2.5);
}

TEST(EmpiricalEs, EqualsSupOfRockafellarForm) {
    Stream rng(21, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 20 * (1 + trial % 10);
        std::vector<double> x(n);
        for (double& v : x) v = trial % 2 ? rng.uniform() : 300.0 * rng.normal();
        const double es = empirical_es(x, 0.05);
        EXPECT_NEAR(es, sup_over_samples(x, 0.05), 1e-9 * (1.0 + std::abs(es))) << "trial " << trial;
    }
    std::vector<double> u(1000);
    for (double& v : u) v = rng.uniform();
    EXPECT_NEAR(empirical_es(u, 0.05), sup_over_samples(u, 0.05), 1e-12);
}

TEST(EmpiricalEs, TranslationEquivariant) {
    Stream rng(22, 0);
    std::vector<double> x(500);
    for (double& v : x) v = 100.0 * rng.normal();
    auto y = x;
    for (double& v : y) v += 37.5;
    EXPECT_NEAR(empirical_es(y, 0.05), empirical_es(x, 0.05) + 37.5, 1e-10);
}

TEST(RockafellarEs, Examples) {
    const std::vector<double> x = {5.0, 7.0, 9.0};
    EXPECT_EQ(rockafellar_es(x, 4.0, 0.05), 4.0);
    const std::vector<double> one = {10.0};
    EXPECT_EQ(rockafellar_es(one, 20.0, 0.5), 0.0);
    std::vector<double> ramp;
    for (int k = 1; k <= 100; ++k) ramp.push_back(k);
    EXPECT_DOUBLE_EQ(rockafellar_es(ramp, nearest_rank(ramp, 5.0), 0.05), empirical_es(ramp, 0.05));
    EXPECT_DOUBLE_EQ(empirical_es(ramp, 0.05), 3.0);
}

TEST(ObjectiveValue, HandArithmetic) {
    ScenarioConfig s;
    const auto r = rollout(FixedPolicy{35.0, 0.5}, constant_paths(1, 30), s, MarketParams::calibrated());
    EXPECT_NEAR(objective_value(r, s, 0.0), -615.0 - 85.0 * s.epsilon, 1e-9);
}

TEST(ObjectiveValue, RewardOnlyIgnoresTerminalWealth) {
    ScenarioConfig s;
    s.kappa = 0.0;
    s.epsilon = 0.0;
    RolloutResult r;
    r.n_paths = 3;
    r.n_withdrawals = 31;
    r.withdrawal_sums = {1100.0, 1200.0, 1300.0};
    r.terminal_wealth = {-500.0, 0.0, 900.0};
    EXPECT_DOUBLE_EQ(objective_value(r, s, 12.0), 1200.0);
    r.terminal_wealth = {1e6, -1e6, 3.0};
    EXPECT_DOUBLE_EQ(objective_value(r, s, -80.0), 1200.0);
}

TEST(Summarize, SupFormAndShortfallOnly) {
    ScenarioConfig s;
    RolloutResult r;
    r.n_paths = 20;
    r.n_withdrawals = 31;
    for (int k = 0; k < 20; ++k) {
        r.withdrawal_sums.push_back(1500.0 + k);
        r.terminal_wealth.push_back(10.0 * k - 50.0);
    }
    const auto f = summarize(r, s, 0.0);
    EXPECT_DOUBLE_EQ(f.ew_per_event, 1509.5 / 31.0);
    EXPECT_EQ(f.es, -50.0);
    EXPECT_EQ(f.median_wt, 40.0);
    EXPECT_NEAR(f.objective, 1509.5 - 50.0 + s.epsilon * 45.0, 1e-9);
    s.es_only = true;
    const auto g = summarize(r, s, 0.0);
    EXPECT_TRUE(std::isinf(g.kappa));
    EXPECT_NEAR(g.objective, -50.0 + s.epsilon * 45.0, 1e-9);
}

TEST(FrontierCsv, RoundTripWithInfinity) {
    std::vector<FrontierPoint> pts(2);
    pts[0] = {.kappa = 1.0, .ew_per_event = 51.97, .es = -42.62, .median_wt = 227.84, .objective = 1568.45,
              .w_star = 58.0};
    pts[1] = {.kappa = std::numeric_limits<double>::infinity(), .ew_per_event = 35.0, .es = 29.9,
              .median_wt = 1003.47, .objective = 29.9, .w_star = 120.0, .es_only = true};
    const auto file = temp_file("frontier.csv");
    write_frontier_csv(pts, file);
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "kappa,EW_per_event,ES,median_WT,objective,w_star");
    const auto back = read_frontier_csv(file);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].es, -42.62);
    EXPECT_TRUE(std::isinf(back[1].kappa));
    EXPECT_TRUE(back[1].es_only);
    std::filesystem::remove(file);
}

TEST(PercentileReport, NearestRankExamples) {
    ScenarioConfig s;
    s.T = 1.0;
    s.M = 1;
    RolloutResult r;
    r.n_paths = 3;
    r.n_withdrawals = 2;
    r.withdrawal_sums = {0, 0, 0};
    r.terminal_wealth = {0, 0, 0};
    r.wealth_trace = {3.0, 10.0, 1.0, 20.0, 2.0, 30.0};
    r.q_trace = {35.0, 35.0, 60.0, 35.0, 40.0, 35.0};
    r.p_trace = {0.1, 0.0, 0.3, 0.0, 0.2, 0.0};
    const std::vector<double> levels = {50.0};
    const auto rep = percentile_report(r, s, levels);
    EXPECT_EQ(rep.wealth.values[0][0], 2.0);
    EXPECT_EQ(rep.wealth.values[0][1], 20.0);
    EXPECT_EQ(rep.withdrawal.values[0][0], 40.0);
    EXPECT_EQ(rep.stock_fraction.values[0][0], 0.2);
    RolloutResult bare;
    EXPECT_THROW(percentile_report(bare, s, levels), std::invalid_argument);
}

TEST(PercentileReport, ConstantPolicyOnConstantPathsIsFlat) {
    ScenarioConfig s;
    const auto r = rollout(bengen_policy(40.0, 0.4), constant_paths(50, 30, 1.02, 1.01), s,
                           MarketParams::calibrated(), true);
    const auto rep = percentile_report(r, s);
    ASSERT_EQ(rep.wealth.levels.size(), 3u);
    for (std::size_t i = 0; i <= s.M; ++i) {
        EXPECT_EQ(rep.wealth.values[0][i], rep.wealth.values[2][i]);
        EXPECT_EQ(rep.withdrawal.values[1][i], 40.0);
        EXPECT_EQ(rep.stock_fraction.values[0][i], i == s.M ? 0.0 : 0.4);
    }
    const auto file = temp_file("pct.csv");
    write_percentile_csv(rep.wealth, file);
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,p5,p50,p95");
    std::filesystem::remove(file);
}

TEST(Heatmap, ForcedMinimumAndInsolventRows) {
    ScenarioConfig s;
    struct Greedy {
        double withdrawal(double w, std::size_t) const { return std::clamp(w, 35.0, 60.0); }
        double allocation(double, std::size_t) const { return 0.9; }
    };
    const std::vector<double> wealth = {-10.0, 0.0, 20.0, 50.0, 2000.0};
    const std::vector<std::size_t> times = {0, 15, 30};
    const auto h = heatmap_report(Greedy{}, wealth, times, s);
    ASSERT_EQ(h.normalized_withdrawal.values.size(), 3u);
    EXPECT_EQ(h.normalized_withdrawal.values[0][2], 0.0);
    EXPECT_DOUBLE_EQ(h.normalized_withdrawal.values[0][3], 0.6);
    EXPECT_EQ(h.normalized_withdrawal.values[0][4], 1.0);
    EXPECT_EQ(h.stock_fraction.values[1][0], 0.0);
    EXPECT_EQ(h.stock_fraction.values[1][1], 0.0);
    EXPECT_EQ(h.stock_fraction.values[1][3], 0.9);
    EXPECT_EQ(h.stock_fraction.values[2][3], 0.0);
    EXPECT_EQ(h.stock_fraction.times[1], 15.0);
    const auto file = temp_file("heat.csv");
    write_heatmap_csv(h.stock_fraction, file);
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.substr(0, 4), ",-10");
    std::filesystem::remove(file);
}
