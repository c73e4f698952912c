#pragma once

// Withdrawal and allocation networks. Both take (standardized wealth, time in
// years). The withdrawal output goes through a wealth-dependent scaled sigmoid
// and the allocation output through a two-way softmax, so every parameter
// vector yields an admissible control.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "decumulate/market.hpp"
#include "decumulate/scenario.hpp"

namespace decumulate {

struct NetSpec {
    std::size_t n_inputs = 2;
    std::size_t hidden_layers = 2;
    std::size_t nodes_per_layer = 10;
    std::size_t n_outputs = 1;
    bool biases = true;

    void validate() const;
    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Dense feed-forward net: sigmoid hidden layers, linear output layer.
/// Parameters live in one flat vector, layer by layer: row-major weights
/// (outputs x inputs) followed by the bias vector.
class Net {
public:
    Net() = default;
    explicit Net(NetSpec spec);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
    static Net random(NetSpec spec, std::uint64_t seed);

    const NetSpec& spec() const { return spec_; }
    std::size_t n_layers() const { return spec_.hidden_layers + 1; }
    std::size_t layer_inputs(std::size_t l) const { return l == 0 ? spec_.n_inputs : spec_.nodes_per_layer; }
    std::size_t layer_outputs(std::size_t l) const {
        return l + 1 == n_layers() ? spec_.n_outputs : spec_.nodes_per_layer;
    }
    std::span<double> weights(std::size_t l);
    std::span<const double> weights(std::size_t l) const;
    std::span<double> biases(std::size_t l);
    std::span<const double> biases(std::size_t l) const;

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::size_t n_params() const { return params_.size(); }

    /// Scratch doubles needed to record one evaluation for backward().
    std::size_t tape_size() const { return tape_size_; }

    /// out[n_outputs] = net(in[n_inputs]); tape receives all layer activations.
    void forward(const double* in, double* out, double* tape) const;

    /// Reverse pass for the evaluation recorded in `tape`: accumulates
    /// d(loss)/d(params) into grad and writes d(loss)/d(input) into d_in (may be null).
    void backward(const double* tape, const double* d_out, double* grad, double* d_in) const;

    friend bool operator==(const Net&, const Net&) = default;

private:
    std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
    std::size_t bias_offset(std::size_t l) const {
        return offsets_[l] + layer_inputs(l) * layer_outputs(l);
    }
    std::size_t tape_offset(std::size_t l) const { return tape_offsets_[l]; }

    NetSpec spec_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> tape_offsets_;  // activations entering layer l; last entry = output
    std::size_t tape_size_ = 0;
};

struct ForwardBackwardResult {
    std::vector<double> outputs;      // rows x n_outputs
    std::vector<double> param_grad;   // summed over rows
    std::vector<double> input_grad;   // rows x n_inputs
};

/// Batched forward and reverse pass over row-major inputs (rows x n_inputs)
/// with upstream gradients (rows x n_outputs).
ForwardBackwardResult net_forward_backward(const Net& net, std::span<const double> inputs,
                                           std::span<const double> upstream);

struct StandardizationStats {
    std::vector<double> mean;  // wealth before withdrawal at t_0 .. t_M
    std::vector<double> sd;

    void validate() const;
    friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

double standardize(double w, std::size_t i, const StandardizationStats& stats);

/// Time input of both networks: t_i / T.
inline double time_feature(const ScenarioConfig& s, std::size_t i) {
    return s.M == 0 ? 0.0 : static_cast<double>(i) / static_cast<double>(s.M);
}

struct PolicyPair {
    Net q_net;
    Net p_net;
    StandardizationStats stats;
    double w_star = 0.0;
    ScenarioConfig scenario;
    std::uint64_t seed = 0;

    /// Default architecture, uniform random weights.
    static PolicyPair cold_start(const ScenarioConfig& scenario, StandardizationStats stats,
                                 std::uint64_t seed, std::size_t hidden_layers = 2,
                                 std::size_t nodes_per_layer = 10);

    friend bool operator==(const PolicyPair&, const PolicyPair&) = default;
};

/// max(min(q_max, w) - q_min, 0): the width of the admissible withdrawal interval.
inline double withdrawal_range(double w_minus, const ScenarioConfig& s) {
    return std::max(std::min(s.q_max, w_minus) - s.q_min, 0.0);
}

/// Raw network pre-activation for the withdrawal net at (w_minus, t_i).
double withdrawal_logit(const PolicyPair& pair, double w_minus, std::size_t i);

/// q = q_min + range(w_minus) * sigmoid(z). In expected-shortfall-only mode the
/// withdrawal is pinned at q_min.
double withdrawal_forward(const PolicyPair& pair, double w_minus, std::size_t i);

/// Stock weight of the two-way softmax. Does not apply the insolvency or
/// final-time rules; see admissible_allocation().
double allocation_forward(const PolicyPair& pair, double w_plus, std::size_t i);

/// Reference strategy statistics (constant 40 withdrawal, 50/50 allocation):
/// mean and standard deviation of wealth before withdrawal at each t_i,
/// with sd floored at 1e-8 * |mean| + 1e-8.
StandardizationStats reference_stats(const PathSet& paths, const ScenarioConfig& scenario,
                                     const MarketParams& market, double withdrawal = 40.0,
                                     double stock_fraction = 0.5);

/// Versioned JSON with a sha256 of the payload. Loading verifies the digest.
void save_checkpoint(const PolicyPair& pair, const std::filesystem::path& file);
PolicyPair load_checkpoint(const std::filesystem::path& file);

}  // namespace decumulate
