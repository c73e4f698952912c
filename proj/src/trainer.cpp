#include "decumulate/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "decumulate/errors.hpp"
#include "decumulate/parallel.hpp"
#include "decumulate/rng.hpp"

namespace decumulate {

void TrainConfig::validate() const {
    if (n_iterations == 0 || batch_size == 0 || eval_every == 0)
        throw std::invalid_argument("train: iterations, batch size and evaluation interval must be positive");
    if (!(lr_params > 0.0) || !(lr_wstar > 0.0)) throw std::invalid_argument("train: learning rates must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("train: decay factor must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
        throw std::invalid_argument("train: Adam betas must lie in (0, 1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("train: Adam epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("train: weight decay must be nonnegative");
    for (double m : milestones)
        if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("train: milestones must lie in (0, 1]");
}

double TrainConfig::lr_factor(std::size_t iter) const {
    double f = 1.0;
    for (double m : milestones)
        if (static_cast<double>(iter) >= m * static_cast<double>(n_iterations)) f *= gamma;
    return f;
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamMoments& moments, std::size_t step,
               double lr, double beta1, double beta2, double eps, double weight_decay) {
    if (grad.size() != params.size() || moments.m.size() != params.size() || moments.v.size() != params.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    if (step == 0) throw std::invalid_argument("adam_step: step count is 1-based");
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grad[k] + weight_decay * params[k];
        moments.m[k] = beta1 * moments.m[k] + (1.0 - beta1) * g;
        moments.v[k] = beta2 * moments.v[k] + (1.0 - beta2) * g * g;
        const double m_hat = moments.m[k] / c1;
        const double v_hat = moments.v[k] / c2;
        params[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

namespace {

struct PathScratch {
    std::vector<double> q_tape;
    std::vector<double> p_tape;
    std::vector<double> w;       // wealth before withdrawal
    std::vector<double> w_plus;
    std::vector<double> q_sig;   // sigmoid of the withdrawal logit
    std::vector<double> range;
    std::vector<double> p;

    PathScratch(const PolicyPair& pair, std::size_t k)
        : q_tape(pair.q_net.tape_size() * k), p_tape(pair.p_net.tape_size() * k), w(k), w_plus(k), q_sig(k),
          range(k), p(k) {}
};

// Forward pass of one path with all tapes recorded, then the reverse sweep.
// Returns the path's objective contribution (maximized form) and accumulates
// the gradient of its negation.
double path_gradient(const PolicyPair& pair, std::span<const double> returns, double debt_growth,
                     PathScratch& sc, double* q_grad, double* p_grad, double& w_grad) {
    const ScenarioConfig& s = pair.scenario;
    const std::size_t M = s.M;
    const std::size_t qt = pair.q_net.tape_size();
    const std::size_t pt = pair.p_net.tape_size();
    const double rw = s.reward_weight();
    const double ew = s.es_weight();

    double w = s.W0;
    double sum_q = 0.0;
    for (std::size_t i = 0; i <= M; ++i) {
        sc.w[i] = w;
        double q = s.q_min;
        sc.range[i] = withdrawal_range(w, s);
        sc.q_sig[i] = 0.0;
        if (!s.es_only && sc.range[i] > 0.0) {
            const double in[2] = {standardize(w, i, pair.stats), time_feature(s, i)};
            double z;
            pair.q_net.forward(in, &z, sc.q_tape.data() + i * qt);
            sc.q_sig[i] = sigmoid(z);
            q = s.q_min + sc.range[i] * sc.q_sig[i];
        }
        sum_q += q;
        const double wp = w - q;
        sc.w_plus[i] = wp;
        sc.p[i] = 0.0;
        if (i == M) {
            w = wp;
            break;
        }
        const double rs = returns[2 * i];
        const double rb = returns[2 * i + 1];
        if (wp > 0.0) {
            const double in[2] = {standardize(wp, i, pair.stats), time_feature(s, i)};
            double logits[2];
            pair.p_net.forward(in, logits, sc.p_tape.data() + i * pt);
            sc.p[i] = sigmoid(logits[0] - logits[1]);
            w = wp * (sc.p[i] * rs + (1.0 - sc.p[i]) * rb);
        } else {
            w = wp * rb * debt_growth;
        }
    }
    const double wt = w;
    const double ws = pair.w_star;
    const bool tail = wt <= ws;
    const double value = rw * sum_q + ew * (ws + std::min(wt - ws, 0.0) / s.alpha) + s.epsilon * wt;

    // Gradients below are of the negated objective.
    w_grad += -ew * (1.0 - (tail ? 1.0 / s.alpha : 0.0));
    double g = -(ew * (tail ? 1.0 / s.alpha : 0.0) + s.epsilon);  // d/dW_T, then d/dw_{i+1}
    for (std::size_t i = M + 1; i-- > 0;) {
        double g_wp;
        if (i == M) {
            g_wp = g;
        } else {
            const double rs = returns[2 * i];
            const double rb = returns[2 * i + 1];
            const double wp = sc.w_plus[i];
            if (wp > 0.0) {
                const double p = sc.p[i];
                g_wp = g * (p * rs + (1.0 - p) * rb);
                const double g_p = g * wp * (rs - rb);
                const double dl = g_p * p * (1.0 - p);
                const double d_out[2] = {dl, -dl};
                double d_in[2];
                pair.p_net.backward(sc.p_tape.data() + i * pt, d_out, p_grad, d_in);
                g_wp += d_in[0] / pair.stats.sd[i];
            } else {
                g_wp = g * rb * debt_growth;
            }
        }
        // w_plus = w - q, reward rw * q.
        const double g_q = -rw - g_wp;
        double g_w = g_wp;
        if (!s.es_only && sc.range[i] > 0.0) {
            const double sig = sc.q_sig[i];
            const double d_z = g_q * sc.range[i] * sig * (1.0 - sig);
            double d_in[2];
            pair.q_net.backward(sc.q_tape.data() + i * qt, &d_z, q_grad, d_in);
            g_w += d_in[0] / pair.stats.sd[i];
            const double wm = sc.w[i];
            if (wm > s.q_min && wm < s.q_max) g_w += g_q * sig;  // d range / d w = 1
        }
        g = g_w;
    }
    return value;
}

constexpr std::size_t kGradChunk = 50;

// Admissibility is asserted on every state visited during full evaluations.
struct CheckedPolicy {
    NeuralPolicy inner;
    const ScenarioConfig& s;
    double withdrawal(double w, std::size_t i) const {
        const double q = inner.withdrawal(w, i);
        const double hi = std::max(std::min(s.q_max, w), s.q_min);
        if (!(q >= s.q_min - 1e-9 && q <= hi + 1e-9))
            throw NumericalError("train: withdrawal " + std::to_string(q) + " outside its admissible set at t_" +
                                 std::to_string(i));
        return q;
    }
    double allocation(double w, std::size_t i) const {
        const double p = inner.allocation(w, i);
        if (!(p >= 0.0 && p <= 1.0))
            throw NumericalError("train: allocation " + std::to_string(p) + " outside [0, 1] at t_" +
                                 std::to_string(i));
        return p;
    }
};

RolloutResult checked_rollout(const PolicyPair& pair, const PathSet& paths, const MarketParams& market) {
    return rollout(CheckedPolicy{NeuralPolicy{pair}, pair.scenario}, paths, pair.scenario, market);
}

double full_objective(const PolicyPair& pair, const PathSet& paths, const MarketParams& market) {
    return objective_value(checked_rollout(pair, paths, market), pair.scenario, pair.w_star);
}

}  // namespace

BatchGradient batch_gradient(const PolicyPair& pair, const PathSet& paths, std::span<const std::size_t> indices,
                             const MarketParams& market) {
    if (indices.empty()) throw std::invalid_argument("batch_gradient: empty batch");
    if (paths.n_periods() != pair.scenario.M)
        throw std::invalid_argument("batch_gradient: path set periods do not match the scenario");
    const std::size_t nq = pair.q_net.n_params();
    const std::size_t np = pair.p_net.n_params();
    const std::size_t n_chunks = chunk_count(indices.size(), kGradChunk);
    std::vector<std::vector<double>> q_parts(n_chunks, std::vector<double>(nq, 0.0));
    std::vector<std::vector<double>> p_parts(n_chunks, std::vector<double>(np, 0.0));
    std::vector<double> w_parts(n_chunks, 0.0);
    std::vector<double> obj_parts(n_chunks, 0.0);
    const double debt_growth = std::exp(market.borrow_spread * pair.scenario.dt());
    for_each_chunk(indices.size(), kGradChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
        PathScratch sc(pair, pair.scenario.M + 1);
        double obj = 0.0;
        double wg = 0.0;
        for (std::size_t k = begin; k < end; ++k)
            obj += path_gradient(pair, paths.path(indices[k]), debt_growth, sc, q_parts[c].data(), p_parts[c].data(),
                                 wg);
        obj_parts[c] = obj;
        w_parts[c] = wg;
    });
    BatchGradient out;
    out.q_grad.assign(nq, 0.0);
    out.p_grad.assign(np, 0.0);
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (std::size_t c = 0; c < n_chunks; ++c) {
        for (std::size_t k = 0; k < nq; ++k) out.q_grad[k] += q_parts[c][k];
        for (std::size_t k = 0; k < np; ++k) out.p_grad[k] += p_parts[c][k];
        out.w_grad += w_parts[c];
        out.objective += obj_parts[c];
    }
    for (double& g : out.q_grad) g *= inv;
    for (double& g : out.p_grad) g *= inv;
    out.w_grad *= inv;
    out.objective *= inv;
    return out;
}

TrainResult train(const PolicyPair& start, const PathSet& paths, const MarketParams& market,
                  const TrainConfig& config, const std::function<void(const TrainLogRow&)>& on_log) {
    config.validate();
    start.scenario.validate();
    if (paths.n_paths() == 0) throw std::invalid_argument("train: empty path set");
    if (paths.n_periods() != start.scenario.M)
        throw std::invalid_argument("train: path set periods do not match the scenario");
    if (start.stats.mean.size() != start.scenario.M + 1)
        throw std::invalid_argument("train: standardization statistics do not match the scenario");

    PolicyPair pair = start;
    TrainState state;
    state.q_moments = AdamMoments(pair.q_net.n_params());
    state.p_moments = AdamMoments(pair.p_net.n_params());
    state.best = pair;
    state.best_objective = full_objective(pair, paths, market);
    if (!std::isfinite(state.best_objective))
        throw NumericalError("train: initial policy has a non-finite objective");

    TrainResult result;
    const std::size_t n = paths.n_paths();
    const std::size_t batch = std::min(config.batch_size, n);
    std::vector<std::size_t> order(n);
    std::size_t cursor = n;
    std::uint64_t epoch = 0;

    for (std::size_t it = 0; it < config.n_iterations; ++it) {
        if (cursor + batch > n) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            Stream rng(config.seed, 0x5348554600000000ULL + epoch++);
            for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
            cursor = 0;
        }
        const std::span<const std::size_t> idx(order.data() + cursor, batch);
        cursor += batch;

        const auto g = batch_gradient(pair, paths, idx, market);
        if (!std::isfinite(g.objective) || !std::isfinite(g.w_grad))
            throw NumericalError("train: non-finite loss at iteration " + std::to_string(it) +
                                 " (w* = " + std::to_string(pair.w_star) + ")");
        const double factor = config.lr_factor(it);
        const std::size_t step = ++state.iteration;
        adam_step(pair.q_net.params(), g.q_grad, state.q_moments, step, config.lr_params * factor,
                  config.adam_beta1, config.adam_beta2, config.adam_eps, config.weight_decay);
        adam_step(pair.p_net.params(), g.p_grad, state.p_moments, step, config.lr_params * factor,
                  config.adam_beta1, config.adam_beta2, config.adam_eps, config.weight_decay);
        std::span<double> ws(&pair.w_star, 1);
        const double wg[1] = {g.w_grad};
        adam_step(ws, wg, state.w_moments, step, config.lr_wstar * factor, config.adam_beta1, config.adam_beta2,
                  config.adam_eps, 0.0);

        TrainLogRow row{it + 1, g.objective, std::nullopt, config.lr_params * factor, pair.w_star};
        if ((it + 1) % config.eval_every == 0 || it + 1 == config.n_iterations) {
            const auto r = checked_rollout(pair, paths, market);
            double full = objective_value(r, pair.scenario, pair.w_star);
            if (config.refit_wstar) {
                const double w = nearest_rank(r.terminal_wealth, 100.0 * pair.scenario.alpha);
                const double refit = objective_value(r, pair.scenario, w);
                if (refit > full) {
                    pair.w_star = w;
                    state.w_moments = AdamMoments(1);
                    full = refit;
                    row.w_star = w;
                }
            }
            if (!std::isfinite(full))
                throw NumericalError("train: non-finite full-set objective at iteration " + std::to_string(it + 1));
            row.full_objective = full;
            if (full > state.best_objective) {
                state.best_objective = full;
                state.best = pair;
                state.best_iteration = it + 1;
            }
        }
        if (on_log) on_log(row);
        result.log.push_back(row);
    }
    result.best = std::move(state.best);
    result.best_objective = state.best_objective;
    result.best_iteration = state.best_iteration;
    return result;
}

void write_train_log(std::span<const TrainLogRow> log, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.precision(12);
    out << "iter,batch_obj,full_obj_if_evaluated,lr,w_star\n";
    for (const auto& r : log) {
        out << r.iter << ',' << r.batch_objective << ',';
        if (r.full_objective) out << *r.full_objective;
        out << ',' << r.lr << ',' << r.w_star << '\n';
    }
}

double reference_wstar(const PathSet& paths, const ScenarioConfig& scenario, const MarketParams& market) {
    const auto r = rollout(bengen_policy(40.0, 0.5), paths, scenario, market);
    return nearest_rank(r.terminal_wealth, 100.0 * scenario.alpha);
}

std::vector<SweepEntry> frontier_sweep(std::span<const double> kappas, const PathSet& paths,
                                       const ScenarioConfig& scenario, const MarketParams& market,
                                       const TrainConfig& config,
                                       const std::function<void(const SweepEntry&, const TrainResult&)>& on_point,
                                       const SweepOptions& options) {
    if (kappas.empty()) throw std::invalid_argument("frontier_sweep: no kappa values");
    for (std::size_t k = 1; k < kappas.size(); ++k)
        if (!(kappas[k] > kappas[k - 1])) throw std::invalid_argument("frontier_sweep: kappas must be ascending");

    auto scenario_for = [&](double kappa) {
        ScenarioConfig s = scenario;
        if (std::isinf(kappa)) {
            s.es_only = true;
        } else {
            s.es_only = false;
            s.kappa = kappa;
        }
        return s;
    };
    StandardizationStats stats;
    double w0 = 0.0;
    auto cold = [&](const ScenarioConfig& s) {
        if (stats.mean.empty()) {
            stats = reference_stats(paths, s, market);
            w0 = reference_wstar(paths, s, market);
        }
        PolicyPair p = PolicyPair::cold_start(s, stats, config.seed);
        p.w_star = w0;
        return p;
    };

    std::vector<SweepEntry> out;
    std::optional<PolicyPair> previous;
    for (double kappa : kappas) {
        const ScenarioConfig s = scenario_for(kappa);
        SweepEntry entry;
        entry.kappa = kappa;
        PolicyPair start;
        if (previous) {
            start = *previous;
            start.scenario = s;
            entry.warm_started = true;
        } else {
            start = cold(s);
        }
        TrainResult tr;
        entry.start_w_star = start.w_star;
        try {
            tr = train(start, paths, market, config);
        } catch (const NumericalError& e) {
            if (!entry.warm_started) throw;
            entry.cold_fallback = true;
            entry.warm_started = false;
            entry.note = std::string("warm start failed (") + e.what() + "); retried from a cold start";
            start = cold(s);
            entry.start_w_star = start.w_star;
            tr = train(start, paths, market, config);
        }
        auto point_of = [&](const PolicyPair& p) {
            return summarize(rollout(NeuralPolicy{p}, paths, s, market), s, p.w_star);
        };
        entry.policy = tr.best;
        entry.point = point_of(entry.policy);
        if (entry.warm_started && options.compare_cold) {
            auto cold_tr = train(cold(s), paths, market, config);
            const auto cold_point = point_of(cold_tr.best);
            if (cold_point.objective > entry.point.objective) {
                entry.cold_won = true;
                std::ostringstream os;
                os << "cold start beat the warm start (" << cold_point.objective << " vs " << entry.point.objective
                   << ")";
                entry.note = os.str();
                entry.policy = cold_tr.best;
                entry.point = cold_point;
                tr = std::move(cold_tr);
            }
        }
        previous = entry.policy;
        if (on_point) on_point(entry, tr);
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace decumulate
