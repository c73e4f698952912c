#include "decumulate/policy.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "decumulate/errors.hpp"
#include "decumulate/io.hpp"
#include "decumulate/objective.hpp"
#include "decumulate/rng.hpp"

namespace decumulate {

void NetSpec::validate() const {
    if (hidden_layers < 1) throw std::invalid_argument("NetSpec: need at least one hidden layer");
    if (nodes_per_layer < 1) throw std::invalid_argument("NetSpec: need at least one node per layer");
    if (n_inputs < 1 || n_outputs < 1) throw std::invalid_argument("NetSpec: empty input or output");
}

Net::Net(NetSpec spec) : spec_(spec) {
    spec_.validate();
    std::size_t offset = 0;
    std::size_t tape = 0;
    for (std::size_t l = 0; l < n_layers(); ++l) {
        offsets_.push_back(offset);
        offset += layer_inputs(l) * layer_outputs(l) + (spec_.biases ? layer_outputs(l) : 0);
        tape_offsets_.push_back(tape);
        tape += layer_inputs(l);
    }
    tape_offsets_.push_back(tape);
    tape_size_ = tape + spec_.n_outputs;
    params_.assign(offset, 0.0);
}

Net Net::random(NetSpec spec, std::uint64_t seed) {
    Net net(spec);
    Stream rng(seed, 0x6e6574);
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(net.layer_inputs(l)));
        for (double& w : net.weights(l)) w = scale * (2.0 * rng.uniform() - 1.0);
        for (double& b : net.biases(l)) b = scale * (2.0 * rng.uniform() - 1.0);
    }
    return net;
}

std::span<double> Net::weights(std::size_t l) {
    return {params_.data() + weight_offset(l), layer_inputs(l) * layer_outputs(l)};
}
std::span<const double> Net::weights(std::size_t l) const {
    return {params_.data() + weight_offset(l), layer_inputs(l) * layer_outputs(l)};
}
std::span<double> Net::biases(std::size_t l) {
    return {params_.data() + bias_offset(l), spec_.biases ? layer_outputs(l) : 0};
}
std::span<const double> Net::biases(std::size_t l) const {
    return {params_.data() + bias_offset(l), spec_.biases ? layer_outputs(l) : 0};
}

void Net::forward(const double* in, double* out, double* tape) const {
    for (std::size_t k = 0; k < spec_.n_inputs; ++k) tape[k] = in[k];
    const std::size_t last = n_layers() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
        const std::size_t n_in = layer_inputs(l);
        const std::size_t n_out = layer_outputs(l);
        const double* x = tape + tape_offset(l);
        double* y = tape + tape_offset(l + 1);
        const double* w = params_.data() + weight_offset(l);
        const double* b = params_.data() + bias_offset(l);
        for (std::size_t r = 0; r < n_out; ++r) {
            double acc = spec_.biases ? b[r] : 0.0;
            const double* wr = w + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) acc += wr[c] * x[c];
            y[r] = l == last ? acc : sigmoid(acc);
        }
    }
    for (std::size_t k = 0; k < spec_.n_outputs; ++k) out[k] = tape[tape_offset(last + 1) + k];
}

void Net::backward(const double* tape, const double* d_out, double* grad, double* d_in) const {
    // delta holds d(loss)/d(pre-activation) of the current layer.
    double delta[64];
    double prev[64];
    const std::size_t width = std::max(spec_.nodes_per_layer, std::max(spec_.n_outputs, spec_.n_inputs));
    if (width > 64) throw std::invalid_argument("Net::backward: layers wider than 64 are not supported");
    const std::size_t last = n_layers() - 1;
    for (std::size_t k = 0; k < spec_.n_outputs; ++k) delta[k] = d_out[k];
    for (std::size_t l = last + 1; l-- > 0;) {
        const std::size_t n_in = layer_inputs(l);
        const std::size_t n_out = layer_outputs(l);
        const double* x = tape + tape_offset(l);
        const double* w = params_.data() + weight_offset(l);
        double* gw = grad + weight_offset(l);
        double* gb = grad + bias_offset(l);
        for (std::size_t c = 0; c < n_in; ++c) prev[c] = 0.0;
        for (std::size_t r = 0; r < n_out; ++r) {
            const double d = delta[r];
            const double* wr = w + r * n_in;
            double* gwr = gw + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) {
                gwr[c] += d * x[c];
                prev[c] += wr[c] * d;
            }
            if (spec_.biases) gb[r] += d;
        }
        if (l == 0) {
            if (d_in)
                for (std::size_t c = 0; c < n_in; ++c) d_in[c] = prev[c];
        } else {
            // x is the sigmoid output of layer l - 1.
            for (std::size_t c = 0; c < n_in; ++c) delta[c] = prev[c] * x[c] * (1.0 - x[c]);
        }
    }
}

ForwardBackwardResult net_forward_backward(const Net& net, std::span<const double> inputs,
                                           std::span<const double> upstream) {
    const std::size_t n_in = net.spec().n_inputs;
    const std::size_t n_out = net.spec().n_outputs;
    if (inputs.size() % n_in != 0) throw std::invalid_argument("net_forward_backward: input shape mismatch");
    const std::size_t rows = inputs.size() / n_in;
    if (upstream.size() != rows * n_out)
        throw std::invalid_argument("net_forward_backward: upstream gradient shape mismatch");
    ForwardBackwardResult r;
    r.outputs.resize(rows * n_out);
    r.param_grad.assign(net.n_params(), 0.0);
    r.input_grad.resize(rows * n_in);
    std::vector<double> tape(net.tape_size());
    for (std::size_t k = 0; k < rows; ++k) {
        net.forward(inputs.data() + k * n_in, r.outputs.data() + k * n_out, tape.data());
        net.backward(tape.data(), upstream.data() + k * n_out, r.param_grad.data(), r.input_grad.data() + k * n_in);
    }
    return r;
}

void StandardizationStats::validate() const {
    if (mean.size() != sd.size()) throw std::invalid_argument("standardization: mean/sd length mismatch");
    for (double s : sd)
        if (!(s > 0.0)) throw std::invalid_argument("standardization: standard deviations must be positive");
}

double standardize(double w, std::size_t i, const StandardizationStats& stats) {
    if (i >= stats.mean.size()) throw std::out_of_range("standardize: time index out of range");
    const double sd = stats.sd[i];
    if (!(sd > 0.0)) throw std::invalid_argument("standardize: standard deviation must be positive");
    return (w - stats.mean[i]) / sd;
}

PolicyPair PolicyPair::cold_start(const ScenarioConfig& scenario, StandardizationStats stats, std::uint64_t seed,
                                  std::size_t hidden_layers, std::size_t nodes_per_layer) {
    PolicyPair pair;
    pair.q_net = Net::random({2, hidden_layers, nodes_per_layer, 1, true}, seed * 2 + 1);
    pair.p_net = Net::random({2, hidden_layers, nodes_per_layer, 2, true}, seed * 2 + 2);
    pair.stats = std::move(stats);
    pair.scenario = scenario;
    pair.seed = seed;
    return pair;
}

namespace {
double* scratch_tape(const Net& net) {
    thread_local std::vector<double> tape;
    if (tape.size() < net.tape_size()) tape.resize(net.tape_size());
    return tape.data();
}
}  // namespace

double withdrawal_logit(const PolicyPair& pair, double w_minus, std::size_t i) {
    const double in[2] = {standardize(w_minus, i, pair.stats), time_feature(pair.scenario, i)};
    double out[1];
    pair.q_net.forward(in, out, scratch_tape(pair.q_net));
    return out[0];
}

double withdrawal_forward(const PolicyPair& pair, double w_minus, std::size_t i) {
    const auto& s = pair.scenario;
    if (s.es_only) return s.q_min;
    const double range = withdrawal_range(w_minus, s);
    if (range == 0.0) return s.q_min;
    return s.q_min + range * sigmoid(withdrawal_logit(pair, w_minus, i));
}

double allocation_forward(const PolicyPair& pair, double w_plus, std::size_t i) {
    const double in[2] = {standardize(w_plus, i, pair.stats), time_feature(pair.scenario, i)};
    double out[2];
    pair.p_net.forward(in, out, scratch_tape(pair.p_net));
    return sigmoid(out[0] - out[1]);
}

StandardizationStats reference_stats(const PathSet& paths, const ScenarioConfig& scenario,
                                     const MarketParams& market, double withdrawal, double stock_fraction) {
    if (paths.n_paths() == 0) throw std::invalid_argument("reference_stats: empty path set");
    const auto r = rollout(bengen_policy(withdrawal, stock_fraction), paths, scenario, market, true);
    const std::size_t k = scenario.M + 1;
    StandardizationStats stats;
    stats.mean.assign(k, 0.0);
    stats.sd.assign(k, 0.0);
    const double n = static_cast<double>(r.n_paths);
    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < r.n_paths; ++j) sum += r.wealth_trace[j * k + i];
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t j = 0; j < r.n_paths; ++j) {
            const double d = r.wealth_trace[j * k + i] - mean;
            ss += d * d;
        }
        const double floor = 1e-8 * std::abs(mean) + 1e-8;
        stats.mean[i] = mean;
        stats.sd[i] = std::max(std::sqrt(ss / n), floor);
    }
    return stats;
}

namespace {

constexpr int kCheckpointVersion = 1;

Json net_to_json(const Net& net) {
    const auto& spec = net.spec();
    Json layers = Json::array();
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const auto w = net.weights(l);
        const auto b = net.biases(l);
        layers.push_back({{"rows", net.layer_outputs(l)},
                          {"cols", net.layer_inputs(l)},
                          {"weights", std::vector<double>(w.begin(), w.end())},
                          {"biases", std::vector<double>(b.begin(), b.end())}});
    }
    return {{"spec",
             {{"n_inputs", spec.n_inputs},
              {"hidden_layers", spec.hidden_layers},
              {"nodes_per_layer", spec.nodes_per_layer},
              {"n_outputs", spec.n_outputs},
              {"biases", spec.biases}}},
            {"layers", layers}};
}

Net net_from_json(const Json& j) {
    const auto& js = j.at("spec");
    NetSpec spec{js.at("n_inputs").get<std::size_t>(), js.at("hidden_layers").get<std::size_t>(),
                 js.at("nodes_per_layer").get<std::size_t>(), js.at("n_outputs").get<std::size_t>(),
                 js.at("biases").get<bool>()};
    Net net(spec);
    const auto& layers = j.at("layers");
    if (layers.size() != net.n_layers()) throw DataError("checkpoint: layer count does not match spec");
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const auto w = layers[l].at("weights").get<std::vector<double>>();
        const auto b = layers[l].at("biases").get<std::vector<double>>();
        auto nw = net.weights(l);
        auto nb = net.biases(l);
        if (w.size() != nw.size() || b.size() != nb.size())
            throw DataError("checkpoint: layer " + std::to_string(l) + " shape does not match spec");
        std::copy(w.begin(), w.end(), nw.begin());
        std::copy(b.begin(), b.end(), nb.begin());
    }
    for (double p : net.params())
        if (!std::isfinite(p)) throw DataError("checkpoint: non-finite parameter");
    return net;
}

}  // namespace

void save_checkpoint(const PolicyPair& pair, const std::filesystem::path& file) {
    Json payload = {{"format_version", kCheckpointVersion},
                    {"scenario", pair.scenario},
                    {"q_net", net_to_json(pair.q_net)},
                    {"p_net", net_to_json(pair.p_net)},
                    {"stats", {{"mean", pair.stats.mean}, {"sd", pair.stats.sd}}},
                    {"w_star", pair.w_star},
                    {"kappa", pair.scenario.kappa},
                    {"rng_seed", pair.seed}};
    Json doc = payload;
    doc["sha256"] = sha256_hex(payload.dump());
    write_text_file(file, doc.dump(1));
}

PolicyPair load_checkpoint(const std::filesystem::path& file) {
    Json doc;
    try {
        doc = Json::parse(read_text_file(file));
    } catch (const Json::exception& e) {
        throw DataError("checkpoint " + file.string() + " is corrupted: " + e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("sha256"))
            throw DataError("checkpoint " + file.string() + " is corrupted: no digest");
        const auto version = doc.at("format_version").get<int>();
        if (version != kCheckpointVersion)
            throw DataError("checkpoint " + file.string() + ": unsupported format_version " +
                            std::to_string(version));
        const auto digest = doc.at("sha256").get<std::string>();
        Json payload = doc;
        payload.erase("sha256");
        if (sha256_hex(payload.dump()) != digest)
            throw DataError("checkpoint " + file.string() + " is corrupted: digest mismatch");
        PolicyPair pair;
        payload.at("scenario").get_to(pair.scenario);
        pair.q_net = net_from_json(payload.at("q_net"));
        pair.p_net = net_from_json(payload.at("p_net"));
        pair.stats.mean = payload.at("stats").at("mean").get<std::vector<double>>();
        pair.stats.sd = payload.at("stats").at("sd").get<std::vector<double>>();
        pair.stats.validate();
        pair.w_star = payload.at("w_star").get<double>();
        pair.seed = payload.at("rng_seed").get<std::uint64_t>();
        if (!std::isfinite(pair.w_star)) throw DataError("checkpoint: non-finite w_star");
        return pair;
    } catch (const Json::exception& e) {
        throw DataError("checkpoint " + file.string() + " is corrupted: " + e.what());
    }
}

}  // namespace decumulate
