#pragma once

// Historical monthly real returns and paired stationary block bootstrap.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "decumulate/market.hpp"
#include "decumulate/rng.hpp"

namespace decumulate {

struct ReturnSeries {
    std::vector<std::string> dates;  // e.g. "1926-01"; strictly increasing
    std::vector<double> stock_gross;
    std::vector<double> bond_gross;

    std::size_t size() const { return dates.size(); }
    void validate() const;
};

/// Reads `date,stock_gross,bond_gross`, or `date,stock_return,bond_return`
/// (net returns, converted to gross). Throws DataError naming the row.
ReturnSeries load_series(const std::filesystem::path& file);
void write_series(const ReturnSeries& s, const std::filesystem::path& file);

struct BootstrapConfig {
    double expected_block_months = 3.0;
    std::size_t n_paths = 1;
    std::size_t periods_per_rebalance = 12;
    std::size_t n_rebalances = 30;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Geometric block length with P(b = k) = (1 - v)^(k-1) v, v = 1 / expected.
std::size_t sample_block_length(Stream& rng, double expected_block_months);

/// Paired stationary block bootstrap: blocks of geometric length starting at
/// uniform positions with circular wrap-around, stock and bond drawn from the
/// same months, compounded into per-rebalance gross returns.
PathSet stationary_block_bootstrap(const ReturnSeries& series, const BootstrapConfig& config);

/// The resampled monthly pairs of one path, before compounding (testing and diagnostics).
std::vector<std::size_t> bootstrap_month_indices(std::size_t series_length, const BootstrapConfig& config,
                                                 std::size_t path);

}  // namespace decumulate
