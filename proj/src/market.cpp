#include "decumulate/market.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "decumulate/errors.hpp"
#include "decumulate/io.hpp"
#include "decumulate/parallel.hpp"

namespace decumulate {

void AssetJumpParams::validate() const {
    if (!(sigma > 0.0)) throw std::domain_error("asset params: sigma must be positive");
    if (!(lambda >= 0.0)) throw std::domain_error("asset params: lambda must be nonnegative");
    if (!(u_up >= 0.0 && u_up <= 1.0)) throw std::domain_error("asset params: u_up must lie in [0, 1]");
    if (!(eta1 > 1.0)) throw std::domain_error("asset params: eta1 must exceed 1");
    if (!(eta2 > 0.0)) throw std::domain_error("asset params: eta2 must be positive");
}

void MarketParams::validate() const {
    stock.validate();
    bond.validate();
    if (!(std::abs(rho_sb) <= 1.0)) throw std::domain_error("market params: |rho_sb| must not exceed 1");
    if (!(borrow_spread >= 0.0)) throw std::domain_error("market params: borrow_spread must be nonnegative");
}

MarketParams MarketParams::calibrated() {
    MarketParams m;
    m.stock = {.mu = 0.0877, .sigma = 0.1459, .lambda = 0.3191, .u_up = 0.2333, .eta1 = 4.3608, .eta2 = 5.504};
    m.bond = {.mu = 0.0239, .sigma = 0.0538, .lambda = 0.3830, .u_up = 0.6111, .eta1 = 16.19, .eta2 = 17.27};
    m.rho_sb = 0.04554;
    m.borrow_spread = 0.0;
    return m;
}

double jump_compensator(const AssetJumpParams& p) {
    if (!(p.eta1 > 1.0)) throw std::domain_error("jump_compensator: eta1 must exceed 1");
    if (!(p.eta2 > 0.0)) throw std::domain_error("jump_compensator: eta2 must be positive");
    return p.u_up * p.eta1 / (p.eta1 - 1.0) + (1.0 - p.u_up) * p.eta2 / (p.eta2 + 1.0) - 1.0;
}

std::complex<double> log_characteristic(const AssetJumpParams& p, double dt, double omega) {
    using namespace std::complex_literals;
    const double gamma = p.lambda > 0.0 ? jump_compensator(p) : 0.0;
    const double drift = (p.mu - p.lambda * gamma - 0.5 * p.sigma * p.sigma) * dt;
    std::complex<double> jump = 0.0;
    if (p.lambda > 0.0) {
        const std::complex<double> e_y =
            p.u_up * p.eta1 / (p.eta1 - 1i * omega) + (1.0 - p.u_up) * p.eta2 / (p.eta2 + 1i * omega);
        jump = p.lambda * dt * (e_y - 1.0);
    }
    return 1i * omega * drift - 0.5 * p.sigma * p.sigma * omega * omega * dt + jump;
}

double sample_period_return(const AssetJumpParams& p, double dt, double z, Stream& rng) {
    if (!(dt > 0.0)) throw std::domain_error("sample_period_return: dt must be positive");
    const double drift = (p.mu - p.lambda * (p.lambda > 0.0 ? jump_compensator(p) : 0.0) -
                          0.5 * p.sigma * p.sigma) * dt;
    double log_r = drift + p.sigma * std::sqrt(dt) * z;
    const int jumps = rng.poisson(p.lambda * dt);
    for (int k = 0; k < jumps; ++k) {
        const bool up = rng.uniform() < p.u_up;
        log_r += up ? rng.exponential(p.eta1) : -rng.exponential(p.eta2);
    }
    return std::exp(log_r);
}

std::string to_string(PathSource s) { return s == PathSource::synthetic ? "synthetic" : "bootstrap"; }

PathSet::PathSet(std::size_t n_paths, std::size_t n_periods, std::vector<double> gross_returns,
                 PathSource source)
    : n_paths_(n_paths), n_periods_(n_periods), data_(std::move(gross_returns)), source_(source) {
    if (data_.size() != n_paths_ * n_periods_ * kAssets)
        throw std::invalid_argument("PathSet: data size does not match n_paths * n_periods * 2");
    for (std::size_t k = 0; k < data_.size(); ++k) {
        if (!(std::isfinite(data_[k]) && data_[k] > 0.0))
            throw DataError("PathSet: gross return at flat index " + std::to_string(k) +
                            " is not finite and positive");
    }
}

PathSet simulate_paths(const MarketParams& m, std::size_t n_paths, std::size_t n_periods, double dt,
                       std::uint64_t seed) {
    m.validate();
    if (n_paths == 0) throw std::invalid_argument("simulate_paths: n_paths must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("simulate_paths: dt must be positive");
    std::vector<double> data(n_paths * n_periods * PathSet::kAssets);
    const double rho = m.rho_sb;
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for_each_chunk(n_paths, 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            Stream rng(seed, j);
            double* out = data.data() + j * n_periods * PathSet::kAssets;
            for (std::size_t i = 0; i < n_periods; ++i) {
                const auto [z1, z2] = rng.normal_pair();
                const double zs = z1;
                const double zb = rho * z1 + rho_c * z2;
                out[2 * i] = sample_period_return(m.stock, dt, zs, rng);
                out[2 * i + 1] = sample_period_return(m.bond, dt, zb, rng);
            }
        }
    });
    return PathSet(n_paths, n_periods, std::move(data), PathSource::synthetic);
}

namespace {
constexpr char kMagic[4] = {'D', 'P', 'T', 'H'};
constexpr std::uint32_t kPathSetVersion = 1;
}  // namespace

void write_pathset(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.write(kMagic, 4);
    le::put_u32(out, kPathSetVersion);
    le::put_u64(out, paths.n_paths());
    le::put_u32(out, static_cast<std::uint32_t>(paths.n_periods()));
    le::put_u32(out, static_cast<std::uint32_t>(PathSet::kAssets));
    le::put_f64s(out, paths.raw());
    if (!out) throw DataError("write failed for " + file.string());
}

PathSet read_pathset(const std::filesystem::path& file, PathSource source) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open path file " + file.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4))
        throw DataError(file.string() + ": not a path file (bad magic)");
    const auto version = le::get_u32(in);
    if (version != kPathSetVersion)
        throw DataError(file.string() + ": unsupported path file version " + std::to_string(version));
    const auto n_paths = le::get_u64(in);
    const auto n_periods = le::get_u32(in);
    const auto n_assets = le::get_u32(in);
    if (n_assets != PathSet::kAssets) throw DataError(file.string() + ": expected 2 assets");
    const auto expected = std::filesystem::file_size(file);
    if (expected != 24 + n_paths * n_periods * n_assets * 8)
        throw DataError(file.string() + ": file size does not match header");
    std::vector<double> data(n_paths * n_periods * n_assets);
    le::get_f64s(in, data);
    return PathSet(n_paths, n_periods, std::move(data), source);
}

void write_pathset_csv(const PathSet& paths, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.precision(17);
    out << "path,period,stock_gross,bond_gross\n";
    for (std::size_t j = 0; j < paths.n_paths(); ++j)
        for (std::size_t i = 0; i < paths.n_periods(); ++i)
            out << j << ',' << i << ',' << paths.gross(j, i, 0) << ',' << paths.gross(j, i, 1) << '\n';
}

}  // namespace decumulate
