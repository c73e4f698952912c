#pragma once

// Minibatch Adam on the sampled objective over both networks and w*. Training
// minimizes the negated objective; the gradient is taken pathwise through the
// whole wealth recursion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decumulate/market.hpp"
#include "decumulate/objective.hpp"
#include "decumulate/policy.hpp"
#include "decumulate/scenario.hpp"

namespace decumulate {

struct TrainConfig {
    std::size_t n_iterations = 50000;
    std::size_t batch_size = 1000;
    double lr_params = 0.05;
    double lr_wstar = 0.04;
    std::vector<double> milestones = {0.70, 0.97};  // fractions of n_iterations
    double gamma = 0.20;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.998;
    double adam_eps = 1e-8;
    double weight_decay = 1e-4;
    std::size_t eval_every = 500;
    // At each full evaluation, move w* to the alpha-quantile of the current
    // policy's terminal wealth when that raises the full-set objective.
    bool refit_wstar = true;
    std::uint64_t seed = 1;

    void validate() const;
    /// Learning-rate multiplier in effect at iteration `iter` (0-based).
    double lr_factor(std::size_t iter) const;
};

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamMoments(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One Adam step on `params` with gradient `grad` (of the minimized loss).
/// `step` is the 1-based count used for bias correction. A nonzero
/// weight_decay adds weight_decay * param to the gradient first.
void adam_step(std::span<double> params, std::span<const double> grad, AdamMoments& moments,
               std::size_t step, double lr, double beta1, double beta2, double eps, double weight_decay);

struct TrainState {
    AdamMoments q_moments;
    AdamMoments p_moments;
    AdamMoments w_moments{1};
    std::size_t iteration = 0;
    PolicyPair best;
    double best_objective = -std::numeric_limits<double>::infinity();  // maximized form
    std::size_t best_iteration = 0;
};

/// Sampled objective and the gradient of its negation with respect to
/// q_net, p_net parameters and w*, over the listed path indices.
struct BatchGradient {
    double objective = 0.0;  // mean over the batch, maximized form
    std::vector<double> q_grad;
    std::vector<double> p_grad;
    double w_grad = 0.0;
};

BatchGradient batch_gradient(const PolicyPair& pair, const PathSet& paths, std::span<const std::size_t> indices,
                             const MarketParams& market);

struct TrainLogRow {
    std::size_t iter = 0;
    double batch_objective = 0.0;
    std::optional<double> full_objective;
    double lr = 0.0;
    double w_star = 0.0;
};

struct TrainResult {
    PolicyPair best;
    double best_objective = 0.0;
    std::size_t best_iteration = 0;
    std::vector<TrainLogRow> log;
};

/// Epoch-shuffled minibatches without replacement. Every eval_every
/// iterations (and at the end) the full-set objective is evaluated and the
/// best parameters retained; the best is returned. A non-finite loss raises
/// NumericalError.
TrainResult train(const PolicyPair& start, const PathSet& paths, const MarketParams& market,
                  const TrainConfig& config, const std::function<void(const TrainLogRow&)>& on_log = {});

/// Header `iter,batch_obj,full_obj_if_evaluated,lr,w_star`.
void write_train_log(std::span<const TrainLogRow> log, const std::filesystem::path& file);

/// Initial w* for a cold start: the alpha-quantile of terminal wealth under
/// the reference constant-withdrawal strategy.
double reference_wstar(const PathSet& paths, const ScenarioConfig& scenario, const MarketParams& market);

struct SweepEntry {
    double kappa = 0.0;  // infinity for the shortfall-only point
    FrontierPoint point;
    PolicyPair policy;
    double start_w_star = 0.0;  // w* the training run started from
    bool warm_started = false;
    bool cold_fallback = false;
    bool cold_won = false;  // the cold-start comparison run beat the warm start
    std::string note;
};

struct SweepOptions {
    // Also train each warm-started point from a cold start and keep the
    // higher full-set objective.
    bool compare_cold = true;
};

/// Ascending kappa sweep with transfer learning: the first point starts cold,
/// each later point starts from the previous best. If a point fails, it is
/// retried from a cold start. An infinite kappa runs in shortfall-only mode.
std::vector<SweepEntry> frontier_sweep(std::span<const double> kappas, const PathSet& paths,
                                       const ScenarioConfig& scenario, const MarketParams& market,
                                       const TrainConfig& config,
                                       const std::function<void(const SweepEntry&, const TrainResult&)>& on_point = {},
                                       const SweepOptions& options = {});

}  // namespace decumulate
