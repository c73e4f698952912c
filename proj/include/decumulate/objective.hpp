#pragma once

// Rolling a withdrawal/allocation policy over sampled return paths, and the
// reward/risk statistics reported on the resulting terminal wealth.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "decumulate/market.hpp"
#include "decumulate/parallel.hpp"
#include "decumulate/policy.hpp"
#include "decumulate/scenario.hpp"

namespace decumulate {

/// Anything that maps (wealth before withdrawal, t_i) to a withdrawal and
/// (wealth after withdrawal, t_i) to a stock fraction.
template <typename P>
concept Policy = requires(const P& p, double w, std::size_t i) {
    { p.withdrawal(w, i) } -> std::convertible_to<double>;
    { p.allocation(w, i) } -> std::convertible_to<double>;
};

/// Stock fraction after the insolvency and liquidation rules: zero when
/// w_plus <= 0 or at the final time.
template <Policy P>
double admissible_allocation(const P& policy, double w_plus, std::size_t i, std::size_t M) {
    if (i >= M || !(w_plus > 0.0)) return 0.0;
    return policy.allocation(w_plus, i);
}

struct NeuralPolicy {
    const PolicyPair& pair;
    double withdrawal(double w, std::size_t i) const { return withdrawal_forward(pair, w, i); }
    double allocation(double w, std::size_t i) const { return allocation_forward(pair, w, i); }
};

/// Fixed real withdrawal every period (even when it drives wealth negative)
/// with a constant rebalanced stock fraction.
struct BengenPolicy {
    double amount = 40.0;
    double stock_fraction = 0.5;
    double withdrawal(double, std::size_t) const { return amount; }
    double allocation(double, std::size_t) const { return stock_fraction; }
};

BengenPolicy bengen_policy(double withdrawal, double stock_fraction);

struct RolloutResult {
    std::size_t n_paths = 0;
    std::size_t n_withdrawals = 0;  // M + 1
    std::vector<double> withdrawal_sums;
    std::vector<double> terminal_wealth;
    // Optional traces, n_paths x (M + 1): wealth before withdrawal, withdrawal, stock fraction.
    std::vector<double> wealth_trace;
    std::vector<double> q_trace;
    std::vector<double> p_trace;

    bool has_traces() const { return !wealth_trace.empty(); }
};

/// Wealth recursion on one path. Solvent: W+ = W- - q, W-_{i+1} = W+ (p R_s + (1-p) R_b).
/// Insolvent (W+ <= 0): p = 0 and the debt grows with the bond return times exp(spread dt).
/// At t_M the last withdrawal is taken and the portfolio liquidated.
template <Policy P>
void rollout_path(const P& policy, std::span<const double> returns, const ScenarioConfig& s,
                  double debt_growth, double& withdrawal_sum, double& terminal_wealth, double* w_trace,
                  double* q_trace, double* p_trace) {
    double w = s.W0;
    double sum = 0.0;
    for (std::size_t i = 0; i <= s.M; ++i) {
        const double q = policy.withdrawal(w, i);
        const double w_plus = w - q;
        sum += q;
        const double p = admissible_allocation(policy, w_plus, i, s.M);
        if (w_trace) {
            w_trace[i] = w;
            q_trace[i] = q;
            p_trace[i] = p;
        }
        if (i == s.M) {
            w = w_plus;
            break;
        }
        const double rs = returns[2 * i];
        const double rb = returns[2 * i + 1];
        if (w_plus > 0.0) {
            w = w_plus * (p * rs + (1.0 - p) * rb);
        } else {
            w = w_plus * rb * debt_growth;
        }
    }
    withdrawal_sum = sum;
    terminal_wealth = w;
}

template <Policy P>
RolloutResult rollout(const P& policy, const PathSet& paths, const ScenarioConfig& scenario,
                      const MarketParams& market, bool keep_traces = false) {
    if (paths.n_periods() != scenario.M)
        throw std::invalid_argument("rollout: path set has " + std::to_string(paths.n_periods()) +
                                    " periods but the scenario has M = " + std::to_string(scenario.M));
    const std::size_t n = paths.n_paths();
    const std::size_t k = scenario.M + 1;
    RolloutResult r;
    r.n_paths = n;
    r.n_withdrawals = k;
    r.withdrawal_sums.resize(n);
    r.terminal_wealth.resize(n);
    if (keep_traces) {
        r.wealth_trace.resize(n * k);
        r.q_trace.resize(n * k);
        r.p_trace.resize(n * k);
    }
    const double debt_growth = std::exp(market.borrow_spread * scenario.dt());
    for_each_chunk(n, 512, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            double* wt = keep_traces ? r.wealth_trace.data() + j * k : nullptr;
            double* qt = keep_traces ? r.q_trace.data() + j * k : nullptr;
            double* pt = keep_traces ? r.p_trace.data() + j * k : nullptr;
            rollout_path(policy, paths.path(j), scenario, debt_growth, r.withdrawal_sums[j],
                         r.terminal_wealth[j], wt, qt, pt);
        }
    });
    return r;
}

/// Mean of the ceil(alpha N) smallest values.
double empirical_es(std::span<const double> terminal_wealth, double alpha);

/// Sample average of w* + min(W_T - w*, 0) / alpha.
double rockafellar_es(std::span<const double> terminal_wealth, double w_star, double alpha);

/// Nearest-rank quantile, level in (0, 100].
double nearest_rank(std::span<const double> values, double level_percent);

/// Sampled objective (1/N) sum_j [reward_weight * sum_i q_i + es_weight * (w* + min(W_T - w*, 0)/alpha)
///                                + epsilon * W_T].
double objective_value(const RolloutResult& result, const ScenarioConfig& scenario, double w_star);

struct FrontierPoint {
    double kappa = 0.0;
    double ew_per_event = 0.0;  // E[sum q] / (M + 1)
    double es = 0.0;
    double median_wt = 0.0;
    double objective = 0.0;     // (M + 1) EW + kappa ES + epsilon E[W_T]; ES alone when es_only
    double w_star = 0.0;
    bool es_only = false;
};

FrontierPoint summarize(const RolloutResult& result, const ScenarioConfig& scenario, double w_star);

/// Header `kappa,EW_per_event,ES,median_WT,objective,w_star`; kappa = inf for the shortfall-only point.
void write_frontier_csv(std::span<const FrontierPoint> points, const std::filesystem::path& file);
std::vector<FrontierPoint> read_frontier_csv(const std::filesystem::path& file);

struct PercentileTable {
    std::vector<double> times;
    std::vector<double> levels;
    std::vector<std::vector<double>> values;  // values[level][time]
};

struct PercentileReport {
    PercentileTable wealth;
    PercentileTable stock_fraction;
    PercentileTable withdrawal;
};

/// Nearest-rank percentiles per rebalance time of the rollout traces.
PercentileReport percentile_report(const RolloutResult& result, const ScenarioConfig& scenario,
                                   std::span<const double> levels = std::vector<double>{5.0, 50.0, 95.0});

/// Header `t,p5,p50,p95` (one column per level).
void write_percentile_csv(const PercentileTable& table, const std::filesystem::path& file);

struct Heatmap {
    std::vector<double> wealth;
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // values[time][wealth]
};

struct HeatmapReport {
    Heatmap stock_fraction;        // evaluated at wealth after withdrawal
    Heatmap normalized_withdrawal; // (q - q_min) / (q_max - q_min), wealth before withdrawal
};

template <Policy P>
HeatmapReport heatmap_report(const P& policy, std::span<const double> wealth_grid,
                             std::span<const std::size_t> time_indices, const ScenarioConfig& s) {
    if (wealth_grid.empty() || time_indices.empty())
        throw std::invalid_argument("heatmap_report: grids must be nonempty");
    HeatmapReport r;
    for (Heatmap* h : {&r.stock_fraction, &r.normalized_withdrawal}) {
        h->wealth.assign(wealth_grid.begin(), wealth_grid.end());
        for (auto i : time_indices) h->times.push_back(s.time(i));
    }
    const double width = s.q_max - s.q_min;
    for (auto i : time_indices) {
        std::vector<double> prow;
        std::vector<double> qrow;
        for (double w : wealth_grid) {
            prow.push_back(admissible_allocation(policy, w, i, s.M));
            const double q = policy.withdrawal(w, i);
            qrow.push_back(width > 0.0 ? (q - s.q_min) / width : 0.0);
        }
        r.stock_fraction.values.push_back(std::move(prow));
        r.normalized_withdrawal.values.push_back(std::move(qrow));
    }
    return r;
}

/// First row = wealth grid (leading empty cell), first column = time.
void write_heatmap_csv(const Heatmap& map, const std::filesystem::path& file);

}  // namespace decumulate
