#pragma once

#include <cstddef>
#include <stdexcept>

namespace decumulate {

/// Decumulation problem: M + 1 withdrawals at t_i = i * T / M, the last one at T
/// followed by liquidation. Objective per path is
///   sum_i q_i + kappa * (W* + min(W_T - W*, 0) / alpha) + epsilon * W_T,
/// or, with es_only, the expected-shortfall term alone (kappa = infinity).
struct ScenarioConfig {
    double T = 30.0;
    std::size_t M = 30;
    double W0 = 1000.0;
    double q_min = 35.0;
    double q_max = 60.0;
    double kappa = 1.0;
    double alpha = 0.05;
    double epsilon = 1e-6;
    bool es_only = false;

    double dt() const { return M == 0 ? T : T / static_cast<double>(M); }
    double time(std::size_t i) const { return static_cast<double>(i) * dt(); }
    std::size_t n_withdrawals() const { return M + 1; }

    /// Weight on total withdrawals and on the shortfall term.
    double reward_weight() const { return es_only ? 0.0 : 1.0; }
    double es_weight() const { return es_only ? 1.0 : kappa; }

    void validate() const {
        if (!(q_min <= q_max)) throw std::invalid_argument("scenario: q_min must not exceed q_max");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("scenario: alpha must lie in (0, 1]");
        if (!(T > 0.0)) throw std::invalid_argument("scenario: T must be positive");
        if (!(kappa >= 0.0)) throw std::invalid_argument("scenario: kappa must be nonnegative");
    }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

}  // namespace decumulate
