#include "decumulate/objective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "decumulate/errors.hpp"

namespace decumulate {

BengenPolicy bengen_policy(double withdrawal, double stock_fraction) {
    if (!(stock_fraction >= 0.0 && stock_fraction <= 1.0))
        throw std::invalid_argument("bengen_policy: stock fraction must lie in [0, 1]");
    return BengenPolicy{withdrawal, stock_fraction};
}

double empirical_es(std::span<const double> terminal_wealth, double alpha) {
    if (terminal_wealth.empty()) throw std::invalid_argument("empirical_es: empty sample");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("empirical_es: alpha must lie in (0, 1]");
    const std::size_t n = terminal_wealth.size();
    // ceil(alpha n) with a guard against alpha * n landing a hair above an integer.
    const double an = alpha * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::ceil(an - 1e-9 * std::max(1.0, an)));
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<double> v(terminal_wealth.begin(), terminal_wealth.end());
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += v[i];
    return sum / static_cast<double>(k);
}

double rockafellar_es(std::span<const double> terminal_wealth, double w_star, double alpha) {
    if (terminal_wealth.empty()) throw std::invalid_argument("rockafellar_es: empty sample");
    double sum = 0.0;
    for (double w : terminal_wealth) sum += std::min(w - w_star, 0.0);
    return w_star + sum / (alpha * static_cast<double>(terminal_wealth.size()));
}

double nearest_rank(std::span<const double> values, double level_percent) {
    if (values.empty()) throw std::invalid_argument("nearest_rank: empty sample");
    const std::size_t n = values.size();
    const double pos = level_percent / 100.0 * static_cast<double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(pos - 1e-9 * std::max(1.0, pos)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
    return v[rank - 1];
}

double objective_value(const RolloutResult& result, const ScenarioConfig& s, double w_star) {
    if (result.withdrawal_sums.size() != result.terminal_wealth.size() || result.n_paths == 0)
        throw std::invalid_argument("objective_value: inconsistent rollout result");
    double total = 0.0;
    for (std::size_t j = 0; j < result.n_paths; ++j) {
        const double wt = result.terminal_wealth[j];
        total += s.reward_weight() * result.withdrawal_sums[j] +
                 s.es_weight() * (w_star + std::min(wt - w_star, 0.0) / s.alpha) + s.epsilon * wt;
    }
    return total / static_cast<double>(result.n_paths);
}

FrontierPoint summarize(const RolloutResult& result, const ScenarioConfig& s, double w_star) {
    FrontierPoint p;
    p.kappa = s.es_only ? std::numeric_limits<double>::infinity() : s.kappa;
    p.es_only = s.es_only;
    const double n = static_cast<double>(result.n_paths);
    const double sum_q = std::accumulate(result.withdrawal_sums.begin(), result.withdrawal_sums.end(), 0.0);
    const double mean_wt = std::accumulate(result.terminal_wealth.begin(), result.terminal_wealth.end(), 0.0) / n;
    p.ew_per_event = sum_q / n / static_cast<double>(result.n_withdrawals);
    p.es = empirical_es(result.terminal_wealth, s.alpha);
    p.median_wt = nearest_rank(result.terminal_wealth, 50.0);
    p.objective = s.reward_weight() * sum_q / n + s.es_weight() * p.es + s.epsilon * mean_wt;
    p.w_star = w_star;
    return p;
}

void write_frontier_csv(std::span<const FrontierPoint> points, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.precision(10);
    out << "kappa,EW_per_event,ES,median_WT,objective,w_star\n";
    for (const auto& p : points) {
        if (p.es_only)
            out << "inf";
        else
            out << p.kappa;
        out << ',' << p.ew_per_event << ',' << p.es << ',' << p.median_wt << ',' << p.objective << ','
            << p.w_star << '\n';
    }
}

std::vector<FrontierPoint> read_frontier_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("kappa,EW_per_event,ES,median_WT,objective,w_star", 0) != 0)
        throw DataError(file.string() + ": not a frontier CSV");
    std::vector<FrontierPoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw DataError(file.string() + ": malformed frontier row");
        FrontierPoint p;
        p.es_only = cells[0] == "inf";
        p.kappa = p.es_only ? std::numeric_limits<double>::infinity() : std::stod(cells[0]);
        p.ew_per_event = std::stod(cells[1]);
        p.es = std::stod(cells[2]);
        p.median_wt = std::stod(cells[3]);
        p.objective = std::stod(cells[4]);
        p.w_star = std::stod(cells[5]);
        points.push_back(p);
    }
    return points;
}

PercentileReport percentile_report(const RolloutResult& result, const ScenarioConfig& s,
                                   std::span<const double> levels) {
    if (!result.has_traces()) throw std::invalid_argument("percentile_report: rollout was run without traces");
    const std::size_t k = result.n_withdrawals;
    PercentileReport report;
    auto fill = [&](PercentileTable& table, const std::vector<double>& trace) {
        table.levels.assign(levels.begin(), levels.end());
        table.values.assign(levels.size(), std::vector<double>(k));
        std::vector<double> column(result.n_paths);
        for (std::size_t i = 0; i < k; ++i) {
            table.times.push_back(s.time(i));
            for (std::size_t j = 0; j < result.n_paths; ++j) column[j] = trace[j * k + i];
            for (std::size_t l = 0; l < levels.size(); ++l) table.values[l][i] = nearest_rank(column, levels[l]);
        }
    };
    fill(report.wealth, result.wealth_trace);
    fill(report.stock_fraction, result.p_trace);
    fill(report.withdrawal, result.q_trace);
    return report;
}

void write_percentile_csv(const PercentileTable& table, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.precision(10);
    out << 't';
    for (double level : table.levels) out << ",p" << level;
    out << '\n';
    for (std::size_t i = 0; i < table.times.size(); ++i) {
        out << table.times[i];
        for (const auto& row : table.values) out << ',' << row[i];
        out << '\n';
    }
}

void write_heatmap_csv(const Heatmap& map, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.precision(10);
    for (double w : map.wealth) out << ',' << w;
    out << '\n';
    for (std::size_t t = 0; t < map.times.size(); ++t) {
        out << map.times[t];
        for (double v : map.values[t]) out << ',' << v;
        out << '\n';
    }
}

}  // namespace decumulate
