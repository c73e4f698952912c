#include "decumulate/market_data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "decumulate/errors.hpp"
#include "decumulate/parallel.hpp"

namespace decumulate {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

double parse_number(const std::string& cell, std::size_t row) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw DataError("series row " + std::to_string(row) + ": cannot parse number '" + cell + "'");
    }
}

}  // namespace

void ReturnSeries::validate() const {
    if (stock_gross.size() != dates.size() || bond_gross.size() != dates.size())
        throw DataError("series: column lengths differ");
    for (std::size_t i = 0; i < size(); ++i) {
        if (!(stock_gross[i] > 0.0 && std::isfinite(stock_gross[i])) ||
            !(bond_gross[i] > 0.0 && std::isfinite(bond_gross[i])))
            throw DataError("series row " + std::to_string(i) + ": gross return must be positive");
        if (i > 0 && !(dates[i - 1] < dates[i]))
            throw DataError("series row " + std::to_string(i) + ": dates not strictly increasing");
    }
}

ReturnSeries load_series(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open series file " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(file.string() + ": empty file");
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "date") throw DataError(file.string() + ": unexpected header");
    bool net = false;
    if (header[1] == "stock_return" && header[2] == "bond_return") {
        net = true;
    } else if (header[1] != "stock_gross" || header[2] != "bond_gross") {
        throw DataError(file.string() + ": header must be date,stock_gross,bond_gross or date,stock_return,bond_return");
    }
    ReturnSeries s;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3)
            throw DataError("series row " + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(cells.size()));
        double stock = parse_number(cells[1], row);
        double bond = parse_number(cells[2], row);
        if (net) {
            stock += 1.0;
            bond += 1.0;
        }
        if (!(stock > 0.0) || !(bond > 0.0))
            throw DataError("series row " + std::to_string(row) + ": gross return must be positive");
        if (!s.dates.empty() && !(s.dates.back() < cells[0]))
            throw DataError("series row " + std::to_string(row) + ": dates not strictly increasing");
        s.dates.push_back(cells[0]);
        s.stock_gross.push_back(stock);
        s.bond_gross.push_back(bond);
        ++row;
    }
    s.validate();
    return s;
}

void write_series(const ReturnSeries& s, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.precision(17);
    out << "date,stock_gross,bond_gross\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << s.dates[i] << ',' << s.stock_gross[i] << ',' << s.bond_gross[i] << '\n';
}

void BootstrapConfig::validate() const {
    if (!(expected_block_months >= 1.0))
        throw std::invalid_argument("bootstrap: expected block size must be at least one month");
    if (n_paths == 0) throw std::invalid_argument("bootstrap: n_paths must be positive");
    if (periods_per_rebalance == 0 || n_rebalances == 0)
        throw std::invalid_argument("bootstrap: periods_per_rebalance and n_rebalances must be positive");
}

std::size_t sample_block_length(Stream& rng, double expected_block_months) {
    const double v = 1.0 / expected_block_months;
    if (v >= 1.0) return 1;
    // Inversion of the geometric CDF 1 - (1 - v)^k.
    const double k = std::ceil(std::log(rng.uniform()) / std::log1p(-v));
    return static_cast<std::size_t>(std::max(1.0, k));
}

std::vector<std::size_t> bootstrap_month_indices(std::size_t series_length, const BootstrapConfig& config,
                                                 std::size_t path) {
    const std::size_t months = config.periods_per_rebalance * config.n_rebalances;
    std::vector<std::size_t> idx;
    idx.reserve(months);
    Stream rng(config.seed, path);
    while (idx.size() < months) {
        std::size_t start = rng.below(series_length);
        const std::size_t len = sample_block_length(rng, config.expected_block_months);
        for (std::size_t k = 0; k < len && idx.size() < months; ++k) {
            idx.push_back(start);
            start = (start + 1) % series_length;
        }
    }
    return idx;
}

PathSet stationary_block_bootstrap(const ReturnSeries& series, const BootstrapConfig& config) {
    config.validate();
    series.validate();
    if (series.size() < 12) throw DataError("bootstrap: series must contain at least 12 months");
    const std::size_t n = config.n_paths;
    const std::size_t m = config.n_rebalances;
    const std::size_t per = config.periods_per_rebalance;
    std::vector<double> data(n * m * PathSet::kAssets);
    for_each_chunk(n, 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const auto idx = bootstrap_month_indices(series.size(), config, j);
            double* out = data.data() + j * m * PathSet::kAssets;
            for (std::size_t i = 0; i < m; ++i) {
                double rs = 1.0;
                double rb = 1.0;
                for (std::size_t k = 0; k < per; ++k) {
                    rs *= series.stock_gross[idx[i * per + k]];
                    rb *= series.bond_gross[idx[i * per + k]];
                }
                out[2 * i] = rs;
                out[2 * i + 1] = rb;
            }
        }
    });
    return PathSet(n, m, std::move(data), PathSource::bootstrap);
}

}  // namespace decumulate
