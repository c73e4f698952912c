#pragma once

// Dynamic programming solver for the auxiliary problem at fixed w*, with an
// outer search over w*. Between rebalancing dates the value over the solvent
// (s, b) grid is advanced by the exact one-period transition kernel; the
// insolvent region lives on a separate grid in log(-w). At each rebalancing
// date the optimal controls depend on wealth only, so they are searched on a
// single wealth axis and stored there.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "decumulate/fourier.hpp"
#include "decumulate/market.hpp"
#include "decumulate/objective.hpp"
#include "decumulate/scenario.hpp"

namespace decumulate {

struct GridSpec {
    std::size_t n_s = 512;
    std::size_t n_b = 512;
    double s_min = 0.01;
    double s_max = 1.0e5;
    double b_min = 0.01;
    double b_max = 1.0e5;
    std::size_t n_debt = 2048;
    double debt_min = 0.01;
    double debt_max = 1.0e5;
    std::size_t n_wealth = 0;  // positive wealth-axis nodes; 0 means 2 * max(n_s, n_b)
    std::size_t n_q = 101;
    std::size_t n_p = 101;
    double tail_tolerance = 1e-9;  // kernel mass allowed beyond the padding, per axis and side

    void validate() const;
    /// n_s = n_b = n with the default bounds.
    static GridSpec square(std::size_t n);
};

/// Node coordinates derived from a GridSpec. The wealth axis is ascending:
/// debt nodes -exp(z_k) (most negative first), then 0, then log-spaced
/// positive nodes up to s_max + b_max.
struct HjbGrid {
    GridSpec spec;
    std::vector<double> x;  // log s
    std::vector<double> y;  // log b
    std::vector<double> z;  // log(-w) on the debt grid, ascending
    std::vector<double> wealth;
    std::size_t zero_index = 0;

    explicit HjbGrid(const GridSpec& spec);
    double hx() const { return x[1] - x[0]; }
    double hy() const { return y[1] - y[0]; }
    double hz() const { return z[1] - z[0]; }
};

/// kappa (w* + min(w - w*, 0) / alpha) + epsilon w (kappa replaced by 1 in
/// shortfall-only mode).
double terminal_value(double w, double w_star, const ScenarioConfig& s);

/// Terminal condition on the solvent nodes (s_i + b_j) and on the debt nodes.
struct TerminalValues {
    std::vector<double> solvent;  // n_s x n_b
    std::vector<double> debt;     // n_debt, at w = -exp(z_k)
};
TerminalValues terminal_condition(const HjbGrid& grid, double w_star, const ScenarioConfig& s);

/// Transition operators for one rebalancing interval.
class MarketKernel {
public:
    MarketKernel(const HjbGrid& grid, const MarketParams& market, double dt);

    /// V(s, b) <- E[V(s R_s, b R_b)] on the n_s x n_b grid.
    void pide_advance(std::span<double> solvent) const;
    /// V(w) <- E[V(w R_b e^{spread dt})] on the debt grid.
    void debt_advance(std::span<double> debt) const;

    /// Largest kernel mass falling beyond the padding on any axis side.
    double boundary_mass() const { return boundary_mass_; }

private:
    std::unique_ptr<Propagator2D> solvent_;
    std::unique_ptr<Propagator1D> debt_;
    double boundary_mass_ = 0.0;
};

struct ControlChoice {
    double q = 0.0;
    double value = 0.0;
};

/// max over the admissible withdrawal grid of reward_weight * q + continuation(w - q).
/// Candidates are the n_q equally spaced points of [q_min, q_max] not above w,
/// plus w itself when q_min < w < q_max; below q_min only q_min is allowed.
/// Ties go to the largest q.
ControlChoice withdrawal_search(double w, const std::function<double(double)>& continuation,
                                const ScenarioConfig& s, std::size_t n_q);

struct AllocationChoice {
    double p = 0.0;
    double value = 0.0;
};

/// max over the n_p equally spaced stock fractions of V+(x p, x (1 - p)),
/// bilinear in (log s, log b) with clamping at the grid edges. Ties go to the
/// smallest p.
AllocationChoice allocation_search(const HjbGrid& grid, std::span<const double> v_plus, double x, std::size_t n_p);

/// Bilinear interpolation of a solvent-grid function at (s, b). A holding
/// below its lower grid edge is moved onto the edge with the difference taken
/// from the other asset (s + b preserved); anything else is clamped.
double interpolate_solvent(const HjbGrid& grid, std::span<const double> v, double s, double b);

struct RebalanceResult {
    std::vector<double> value;  // V at t_n^- on the wealth axis
    std::vector<double> q;      // q_n(w) on the wealth axis
    std::vector<double> p;      // p_n(w+) on the wealth axis (0 off the positive axis)
};

/// Control search at a rebalancing date before T. `v_plus` and `debt_plus`
/// hold the value just after rebalancing; `zero_value` is the value of
/// holding exactly zero wealth.
RebalanceResult rebalance_optimize(const HjbGrid& grid, std::span<const double> v_plus,
                                   std::span<const double> debt_plus, double zero_value, const ScenarioConfig& s);

struct ValueGrid {
    GridSpec spec;
    ScenarioConfig scenario;
    double w_star = 0.0;
    double value_t0 = 0.0;        // V(W0, t_0^-) at this w*
    double boundary_mass = 0.0;
    std::vector<double> wealth;   // control axis
    std::vector<std::vector<double>> q;      // per rebalance time t_0..t_M
    std::vector<std::vector<double>> p;
    std::vector<std::vector<double>> value;  // V(., t_n^-) on the axis
};

/// Reusable solver: grid, kernels and FFT plans built once, many w* solves.
class HjbSolver {
public:
    HjbSolver(const ScenarioConfig& scenario, const MarketParams& market, const GridSpec& spec);

    ValueGrid solve(double w_star) const;
    const HjbGrid& grid() const { return grid_; }
    double boundary_mass() const { return kernel_ ? kernel_->boundary_mass() : 0.0; }

private:
    ScenarioConfig scenario_;
    MarketParams market_;
    HjbGrid grid_;
    std::optional<MarketKernel> kernel_;  // absent when M = 0
};

ValueGrid solve_fixed_wstar(double w_star, const ScenarioConfig& s, const MarketParams& m, const GridSpec& spec);

struct WstarSearch {
    double lo = -1000.0;
    double hi = 250.0;
    std::size_t n_coarse = 26;
    double tol = 0.01;
};

struct WstarResult {
    double value = 0.0;
    double w_star = 0.0;
    ValueGrid controls;
    std::vector<std::pair<double, double>> evaluations;  // (w*, value) in evaluation order
};

/// Coarse exhaustive search over [lo, hi], then golden-section refinement
/// around the best coarse point.
WstarResult optimize_wstar(const ScenarioConfig& s, const MarketParams& m, const GridSpec& spec,
                           const WstarSearch& search = {});

/// Linear interpolation of the stored controls in wealth, with the results
/// clamped into the admissible sets. Wealth beyond the axis uses the end node.
class StoredControlPolicy {
public:
    explicit StoredControlPolicy(const ValueGrid& grid) : grid_(grid) {}
    double withdrawal(double w, std::size_t i) const;
    double allocation(double w, std::size_t i) const;

private:
    const ValueGrid& grid_;
};

struct StoredRollout {
    RolloutResult result;
    std::size_t clamped = 0;  // evaluations beyond the control axis
};

StoredRollout rollout_stored_controls(const ValueGrid& grid, const PathSet& paths, const MarketParams& market,
                                      bool keep_traces = false);

/// "DCTL" binary: version, JSON header (scenario, grid, w*, value), then per
/// time the axis and the q and p arrays.
void write_controls(const ValueGrid& grid, const std::filesystem::path& file);
ValueGrid read_controls(const std::filesystem::path& file);

}  // namespace decumulate
