#pragma once

// Synthetic market: correlated double-exponential (Kou) jump diffusions for a
// real stock index and a real constant-maturity bond index, sampled exactly
// once per rebalancing period.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "decumulate/rng.hpp"

namespace decumulate {

struct AssetJumpParams {
    double mu = 0.0;      // real drift per year
    double sigma = 0.0;   // volatility per sqrt(year)
    double lambda = 0.0;  // jump intensity per year
    double u_up = 0.0;    // probability a jump is upward
    double eta1 = 2.0;    // upward log-jump rate, > 1
    double eta2 = 1.0;    // downward log-jump rate, > 0

    void validate() const;
};

struct MarketParams {
    AssetJumpParams stock;
    AssetJumpParams bond;
    double rho_sb = 0.0;
    double borrow_spread = 0.0;  // extra drift on negative (debt) balances

    void validate() const;

    /// Real CRSP value-weighted index and real 10-year Treasury, 1926:1-2019:12.
    static MarketParams calibrated();
};

/// E[xi - 1] for the double-exponential jump multiplier.
double jump_compensator(const AssetJumpParams& p);

/// log E[exp(i w X)] for the one-period log return X of a single asset,
/// including the compensated drift, diffusion and jump parts.
std::complex<double> log_characteristic(const AssetJumpParams& p, double dt, double omega);

/// One-period gross return exp((mu - lambda*gamma - sigma^2/2) dt + sigma sqrt(dt) z) * prod(xi_i),
/// with the jump count and sizes drawn from `rng`.
double sample_period_return(const AssetJumpParams& p, double dt, double z, Stream& rng);

enum class PathSource : std::uint8_t { synthetic, bootstrap };

std::string to_string(PathSource s);

/// N joint paths of per-period gross real returns, laid out path-major,
/// period-minor, asset-innermost (stock = 0, bond = 1). Immutable once built.
class PathSet {
public:
    static constexpr std::size_t kAssets = 2;
    static constexpr std::size_t kStock = 0;
    static constexpr std::size_t kBond = 1;

    PathSet() = default;
    PathSet(std::size_t n_paths, std::size_t n_periods, std::vector<double> gross_returns,
            PathSource source);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_periods() const { return n_periods_; }
    PathSource source() const { return source_; }

    double gross(std::size_t path, std::size_t period, std::size_t asset) const {
        return data_[(path * n_periods_ + period) * kAssets + asset];
    }
    /// The 2 * n_periods returns of one path.
    std::span<const double> path(std::size_t j) const {
        return {data_.data() + j * n_periods_ * kAssets, n_periods_ * kAssets};
    }
    std::span<const double> raw() const { return data_; }

    friend bool operator==(const PathSet&, const PathSet&) = default;

private:
    std::size_t n_paths_ = 0;
    std::size_t n_periods_ = 0;
    std::vector<double> data_;
    PathSource source_ = PathSource::synthetic;
};

/// Exact one-step simulation per period. Path j depends only on (seed, j).
PathSet simulate_paths(const MarketParams& m, std::size_t n_paths, std::size_t n_periods, double dt,
                       std::uint64_t seed);

/// Binary layout: "DPTH", u32 version = 1, u64 n_paths, u32 n_periods,
/// u32 n_assets = 2, then little-endian f64 returns in PathSet order.
void write_pathset(const PathSet& paths, const std::filesystem::path& file);
PathSet read_pathset(const std::filesystem::path& file, PathSource source = PathSource::synthetic);

/// CSV with header `path,period,stock_gross,bond_gross`.
void write_pathset_csv(const PathSet& paths, const std::filesystem::path& file);

}  // namespace decumulate
