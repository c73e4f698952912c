// decumulate: simulate / bootstrap path sets, train policies, solve the HJB
// problem, evaluate and report. Every command writes a JSON manifest next to
// its outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "decumulate/errors.hpp"
#include "decumulate/hjb.hpp"
#include "decumulate/io.hpp"
#include "decumulate/market.hpp"
#include "decumulate/market_data.hpp"
#include "decumulate/objective.hpp"
#include "decumulate/parallel.hpp"
#include "decumulate/policy.hpp"
#include "decumulate/trainer.hpp"

namespace fs = std::filesystem;
using namespace decumulate;

namespace {

constexpr const char* kToolVersion = "1.0.0";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

fs::path manifest_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

class Manifest {
public:
    Manifest(std::string command, std::vector<std::string> argv)
        : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

    Json& config() { return config_; }
    Json& seeds() { return seeds_; }
    void input(const fs::path& file) { inputs_.push_back({{"path", file.string()}, {"sha256", sha256_file(file)}}); }
    void output(const fs::path& file) { outputs_.push_back({{"path", file.string()}, {"sha256", sha256_file(file)}}); }

    void write(const fs::path& file) const {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const Json doc = {{"command", command_},   {"argv", argv_},         {"tool_version", kToolVersion},
                          {"config", config_},     {"seeds", seeds_},       {"inputs", inputs_},
                          {"outputs", outputs_},   {"threads", thread_count()}, {"wall_clock_seconds", secs}};
        write_text_file(file, doc.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    Json config_ = Json::object();
    Json seeds_ = Json::object();
    Json inputs_ = Json::array();
    Json outputs_ = Json::array();
    std::chrono::steady_clock::time_point start_;
};

// Configuration layers: built-in defaults, then the --config JSON, then flags.
struct Layers {
    std::string config_file;
    Json json = Json::object();

    void load() {
        if (config_file.empty()) return;
        try {
            json = Json::parse(read_text_file(config_file));
        } catch (const Json::exception& e) {
            throw DataError("config " + config_file + ": " + e.what());
        }
        if (!json.is_object()) throw DataError("config " + config_file + ": expected a JSON object");
    }
    Json section(const char* name) const { return json.contains(name) ? json.at(name) : Json::object(); }
};

template <class T>
void overlay(T& target, const std::optional<T>& flag) {
    if (flag) target = *flag;
}

MarketParams load_market(const Layers& layers, const std::string& params_file) {
    MarketParams m = MarketParams::calibrated();
    auto apply = [&](const Json& j, const std::string& where) {
        try {
            const Json& src = j.contains("market") ? j.at("market") : j;
            Json merged = m;
            merged.merge_patch(src);
            m = merged.get<MarketParams>();
        } catch (const Json::exception& e) {
            throw DataError("market parameters in " + where + ": " + e.what());
        }
    };
    if (layers.json.contains("market")) apply(layers.json.at("market"), layers.config_file);
    if (!params_file.empty()) {
        Json j;
        try {
            j = Json::parse(read_text_file(params_file));
        } catch (const Json::exception& e) {
            throw DataError("params " + params_file + ": " + e.what());
        }
        apply(j, params_file);
    }
    try {
        m.validate();
    } catch (const std::domain_error& e) {
        throw DataError(std::string("market parameters: ") + e.what());
    }
    return m;
}

struct ScenarioFlags {
    std::optional<double> kappa;
    bool es_only = false;
    std::optional<double> epsilon;

    void add(CLI::App* sub) {
        sub->add_option("--kappa", kappa, "Weight on expected shortfall");
        sub->add_flag("--es-only", es_only, "Shortfall-only objective (kappa = infinity)");
        sub->add_option("--epsilon", epsilon, "Terminal wealth stabilization weight");
    }
};

ScenarioConfig load_scenario(const Layers& layers, const ScenarioFlags& flags) {
    ScenarioConfig s;
    try {
        from_json(layers.section("scenario"), s);
    } catch (const Json::exception& e) {
        throw DataError(std::string("scenario in config: ") + e.what());
    }
    overlay(s.kappa, flags.kappa);
    overlay(s.epsilon, flags.epsilon);
    if (flags.es_only) s.es_only = true;
    s.validate();
    return s;
}

struct TrainFlags {
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr_params;
    std::optional<double> lr_wstar;
    std::optional<std::size_t> eval_every;
    std::optional<std::uint64_t> seed;
    bool no_refit = false;

    void add(CLI::App* sub) {
        sub->add_option("--iterations", iterations)->check(CLI::PositiveNumber);
        sub->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);
        sub->add_option("--lr-params", lr_params)->check(CLI::PositiveNumber);
        sub->add_option("--lr-wstar", lr_wstar)->check(CLI::PositiveNumber);
        sub->add_option("--eval-every", eval_every)->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed);
        sub->add_flag("--no-wstar-refit", no_refit, "Move w* by Adam only");
    }
};

TrainConfig load_train(const Layers& layers, const TrainFlags& f) {
    TrainConfig c;
    const Json j = layers.section("train");
    try {
        c.n_iterations = j.value("n_iterations", c.n_iterations);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr_params = j.value("lr_params", c.lr_params);
        c.lr_wstar = j.value("lr_wstar", c.lr_wstar);
        c.milestones = j.value("milestones", c.milestones);
        c.gamma = j.value("gamma", c.gamma);
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.eval_every = j.value("eval_every", c.eval_every);
        c.refit_wstar = j.value("refit_wstar", c.refit_wstar);
        c.seed = j.value("seed", c.seed);
    } catch (const Json::exception& e) {
        throw DataError(std::string("train section in config: ") + e.what());
    }
    overlay(c.n_iterations, f.iterations);
    overlay(c.batch_size, f.batch_size);
    overlay(c.lr_params, f.lr_params);
    overlay(c.lr_wstar, f.lr_wstar);
    overlay(c.eval_every, f.eval_every);
    overlay(c.seed, f.seed);
    if (f.no_refit) c.refit_wstar = false;
    c.validate();
    return c;
}

Json train_json(const TrainConfig& c) {
    return {{"n_iterations", c.n_iterations}, {"batch_size", c.batch_size}, {"lr_params", c.lr_params},
            {"lr_wstar", c.lr_wstar},         {"milestones", c.milestones}, {"gamma", c.gamma},
            {"adam_beta1", c.adam_beta1},     {"adam_beta2", c.adam_beta2}, {"adam_eps", c.adam_eps},
            {"weight_decay", c.weight_decay}, {"eval_every", c.eval_every}, {"refit_wstar", c.refit_wstar},
            {"seed", c.seed}};
}

Json grid_json(const GridSpec& g) {
    return {{"n_s", g.n_s},       {"n_b", g.n_b},       {"s_min", g.s_min},   {"s_max", g.s_max},
            {"b_min", g.b_min},   {"b_max", g.b_max},   {"n_debt", g.n_debt}, {"debt_min", g.debt_min},
            {"debt_max", g.debt_max}, {"n_wealth", g.n_wealth}, {"n_q", g.n_q}, {"n_p", g.n_p},
            {"tail_tolerance", g.tail_tolerance}};
}

Json point_json(const FrontierPoint& p) {
    return {{"kappa", p.es_only ? Json("inf") : Json(p.kappa)}, {"EW_per_event", p.ew_per_event}, {"ES", p.es},
            {"median_WT", p.median_wt}, {"objective", p.objective}, {"w_star", p.w_star}};
}

void print_point(const FrontierPoint& p) {
    std::printf("kappa=%s EW_per_event=%.4f ES=%.4f median_WT=%.4f objective=%.4f w_star=%.4f\n",
                p.es_only ? "inf" : std::to_string(p.kappa).c_str(), p.ew_per_event, p.es, p.median_wt, p.objective,
                p.w_star);
}

// Compare a path file (and its manifest, when present) with the scenario a
// policy was built for. Mismatches are reported together.
void check_paths_scenario(const fs::path& file, const PathSet& paths, const ScenarioConfig& s) {
    std::vector<std::string> bad;
    auto field = [&](const std::string& name, double policy, double data) {
        std::ostringstream os;
        os << name << " (policy " << policy << ", paths " << data << ")";
        bad.push_back(os.str());
    };
    if (paths.n_periods() != s.M) field("M", static_cast<double>(s.M), static_cast<double>(paths.n_periods()));
    const auto mf = manifest_for(file);
    if (fs::exists(mf)) {
        Json m;
        try {
            m = Json::parse(read_text_file(mf));
        } catch (const Json::exception& e) {
            throw DataError("manifest " + mf.string() + ": " + e.what());
        }
        if (m.contains("outputs")) {
            for (const auto& o : m.at("outputs")) {
                if (fs::path(o.at("path").get<std::string>()).filename() != file.filename()) continue;
                if (o.at("sha256").get<std::string>() != sha256_file(file))
                    throw DataError("paths file " + file.string() + " does not match the digest in " + mf.string());
            }
        }
        if (m.contains("config") && m.at("config").contains("dt")) {
            const double dt = m.at("config").at("dt").get<double>();
            if (std::abs(dt - s.dt()) > 1e-12 * std::max(1.0, s.dt())) field("dt", s.dt(), dt);
        }
    }
    if (!bad.empty()) {
        std::string msg = "scenario mismatch between policy and paths " + file.string() + ":";
        for (const auto& b : bad) msg += " " + b + ";";
        throw DataError(msg);
    }
}

std::vector<double> parse_kappas(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "inf" || item == "Inf" || item == "infinity") {
            out.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--kappas: cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("--kappas: empty list");
    return out;
}

std::string kappa_tag(double kappa) {
    if (std::isinf(kappa)) return "inf";
    std::ostringstream os;
    os << kappa;
    return os.str();
}

// A trained network or a stored HJB control grid, whichever was given.
struct LoadedPolicy {
    std::optional<PolicyPair> pair;
    std::optional<ValueGrid> controls;
    fs::path file;

    const ScenarioConfig& scenario() const { return pair ? pair->scenario : controls->scenario; }
    double w_star() const { return pair ? pair->w_star : controls->w_star; }

    template <class F>
    auto visit(F&& f) const {
        if (pair) return f(NeuralPolicy{*pair});
        return f(StoredControlPolicy(*controls));
    }
};

LoadedPolicy load_policy(const std::string& model, const std::string& controls) {
    if (model.empty() == controls.empty()) throw UsageError("give exactly one of --model and --controls");
    LoadedPolicy p;
    if (!model.empty()) {
        p.file = model;
        p.pair = load_checkpoint(model);
    } else {
        p.file = controls;
        p.controls = read_controls(controls);
    }
    return p;
}

std::vector<std::string> args_of(int argc, char** argv) { return {argv, argv + argc}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retirement decumulation: expected withdrawals vs expected shortfall"};
    app.require_subcommand(1);
    app.fallthrough();
    std::optional<std::size_t> threads;
    Layers layers;
    app.add_option("--threads", threads, "Worker threads (default: DECUMULATE_THREADS, then all cores)")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", layers.config_file, "JSON with scenario/market/train/grid/bootstrap sections");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Synthetic jump-diffusion path set");
    std::string sim_params, sim_out, sim_csv;
    std::size_t sim_paths = 0;
    std::optional<std::size_t> sim_periods;
    std::optional<double> sim_dt;
    std::uint64_t sim_seed = 1;
    sim->add_option("--params", sim_params, "Market parameter JSON (default: calibrated)");
    sim->add_option("--paths", sim_paths)->required()->check(CLI::PositiveNumber);
    sim->add_option("--periods", sim_periods)->check(CLI::PositiveNumber);
    sim->add_option("--dt", sim_dt)->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed);
    sim->add_option("--out", sim_out)->required();
    sim->add_option("--csv", sim_csv, "Also write the returns as CSV");

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "Stationary block bootstrap path set from a monthly series");
    std::string boot_series, boot_out;
    std::size_t boot_paths = 0;
    std::optional<double> boot_block;
    std::optional<std::size_t> boot_months, boot_periods;
    std::uint64_t boot_seed = 1;
    boot->add_option("--series", boot_series)->required();
    boot->add_option("--block", boot_block, "Expected block length in months (default 3)");
    boot->add_option("--paths", boot_paths)->required()->check(CLI::PositiveNumber);
    boot->add_option("--months-per-period", boot_months)->check(CLI::PositiveNumber);
    boot->add_option("--periods", boot_periods)->check(CLI::PositiveNumber);
    boot->add_option("--seed", boot_seed);
    boot->add_option("--out", boot_out)->required();

    // train
    auto* tr = app.add_subcommand("train", "Train the withdrawal and allocation networks");
    std::string tr_paths, tr_init, tr_out, tr_log;
    ScenarioFlags tr_sf;
    TrainFlags tr_tf;
    tr->add_option("--paths", tr_paths)->required();
    tr->add_option("--init", tr_init, "Warm-start checkpoint");
    tr->add_option("--out", tr_out)->required();
    tr->add_option("--log", tr_log, "Training log CSV (default: <out>.log.csv)");
    tr_sf.add(tr);
    tr_tf.add(tr);

    // frontier
    auto* fr = app.add_subcommand("frontier", "Ascending kappa sweep with transfer learning");
    std::string fr_paths, fr_kappas, fr_dir;
    ScenarioFlags fr_sf;
    TrainFlags fr_tf;
    fr->add_option("--paths", fr_paths)->required();
    fr->add_option("--kappas", fr_kappas, "Comma-separated, ascending; 'inf' for shortfall-only")->required();
    fr->add_option("--out-dir", fr_dir)->required();
    bool fr_no_cold = false;
    fr->add_flag("--no-cold-compare", fr_no_cold, "Keep warm-started points without a cold-start comparison run");
    fr_sf.add(fr);
    fr_tf.add(fr);

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint or stored controls on a path set");
    std::string ev_model, ev_controls, ev_paths, ev_out, ev_params;
    ev->add_option("--model", ev_model);
    ev->add_option("--controls", ev_controls);
    ev->add_option("--paths", ev_paths)->required();
    ev->add_option("--out", ev_out, "Frontier-row CSV");
    ev->add_option("--params", ev_params, "Market parameter JSON (only the borrowing spread is used)");

    // hjb
    auto* hj = app.add_subcommand("hjb", "Dynamic programming solution and stored controls");
    std::string hj_out, hj_params;
    ScenarioFlags hj_sf;
    std::optional<std::size_t> hj_grid, hj_debt;
    std::optional<double> hj_wstar;
    hj->add_option("--grid", hj_grid, "Nodes per asset axis (power of two)");
    hj->add_option("--n-debt", hj_debt, "Nodes on the negative-wealth axis");
    hj->add_option("--wstar", hj_wstar, "Solve at this w* instead of searching");
    hj->add_option("--params", hj_params, "Market parameter JSON");
    hj->add_option("--out", hj_out)->required();
    hj_sf.add(hj);

    // report
    auto* rp = app.add_subcommand("report", "Percentile and heat-map tables for a policy");
    std::string rp_model, rp_controls, rp_paths, rp_dir, rp_params;
    double rp_wmax = 1500.0;
    std::size_t rp_wn = 151;
    rp->add_option("--model", rp_model);
    rp->add_option("--controls", rp_controls);
    rp->add_option("--paths", rp_paths)->required();
    rp->add_option("--out-dir", rp_dir)->required();
    rp->add_option("--params", rp_params, "Market parameter JSON");
    rp->add_option("--heatmap-wmax", rp_wmax)->check(CLI::PositiveNumber);
    rp->add_option("--heatmap-nodes", rp_wn)->check(CLI::Range(2, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto argv_vec = args_of(argc, argv);
    try {
        if (threads) set_thread_count(*threads);
        layers.load();

        if (sim->parsed()) {
            Manifest man("simulate", argv_vec);
            const auto m = load_market(layers, sim_params);
            ScenarioConfig s = load_scenario(layers, {});
            const std::size_t periods = sim_periods.value_or(s.M);
            const double dt = sim_dt.value_or(s.dt());
            const auto paths = simulate_paths(m, sim_paths, periods, dt, sim_seed);
            write_pathset(paths, sim_out);
            if (!sim_params.empty()) man.input(sim_params);
            man.config() = {{"market", m}, {"n_paths", sim_paths}, {"n_periods", periods}, {"dt", dt},
                            {"source", "synthetic"}};
            man.seeds()["simulate"] = sim_seed;
            man.output(sim_out);
            if (!sim_csv.empty()) {
                write_pathset_csv(paths, sim_csv);
                man.output(sim_csv);
            }
            man.write(manifest_for(sim_out));
            std::printf("wrote %s (%zu paths x %zu periods)\n", sim_out.c_str(), sim_paths, periods);
        } else if (boot->parsed()) {
            Manifest man("bootstrap", argv_vec);
            BootstrapConfig c;
            const Json j = layers.section("bootstrap");
            c.expected_block_months = j.value("expected_block_months", c.expected_block_months);
            c.periods_per_rebalance = j.value("periods_per_rebalance", c.periods_per_rebalance);
            c.n_rebalances = j.value("n_rebalances", c.n_rebalances);
            overlay(c.expected_block_months, boot_block);
            overlay(c.periods_per_rebalance, boot_months);
            overlay(c.n_rebalances, boot_periods);
            c.n_paths = boot_paths;
            c.seed = boot_seed;
            c.validate();
            const auto series = load_series(boot_series);
            const auto paths = stationary_block_bootstrap(series, c);
            write_pathset(paths, boot_out);
            man.input(boot_series);
            const double dt = static_cast<double>(c.periods_per_rebalance) / 12.0;
            man.config() = {{"expected_block_months", c.expected_block_months},
                            {"periods_per_rebalance", c.periods_per_rebalance},
                            {"n_rebalances", c.n_rebalances},
                            {"n_paths", c.n_paths},
                            {"n_periods", c.n_rebalances},
                            {"dt", dt},
                            {"source", "bootstrap"},
                            {"series_months", series.size()}};
            man.seeds()["bootstrap"] = c.seed;
            man.output(boot_out);
            man.write(manifest_for(boot_out));
            std::printf("wrote %s (%zu paths x %zu periods, block %.3g months)\n", boot_out.c_str(), c.n_paths,
                        c.n_rebalances, c.expected_block_months);
        } else if (tr->parsed()) {
            Manifest man("train", argv_vec);
            const auto m = load_market(layers, "");
            const auto cfg = load_train(layers, tr_tf);
            const auto paths = read_pathset(tr_paths);
            PolicyPair start;
            ScenarioConfig s;
            if (!tr_init.empty()) {
                start = load_checkpoint(tr_init);
                s = start.scenario;
                overlay(s.kappa, tr_sf.kappa);
                overlay(s.epsilon, tr_sf.epsilon);
                if (tr_sf.es_only) s.es_only = true;
                s.validate();
                start.scenario = s;
                man.input(tr_init);
            } else {
                s = load_scenario(layers, tr_sf);
                check_paths_scenario(tr_paths, paths, s);
                start = PolicyPair::cold_start(s, reference_stats(paths, s, m), cfg.seed);
                start.w_star = reference_wstar(paths, s, m);
            }
            check_paths_scenario(tr_paths, paths, s);
            man.input(tr_paths);
            const auto result = train(start, paths, m, cfg);
            save_checkpoint(result.best, tr_out);
            const fs::path log = tr_log.empty() ? fs::path(tr_out + ".log.csv") : fs::path(tr_log);
            write_train_log(result.log, log);
            const auto point = summarize(rollout(NeuralPolicy{result.best}, paths, s, m), s, result.best.w_star);
            man.config() = {{"scenario", s}, {"market", m}, {"train", train_json(cfg)},
                            {"start_w_star", start.w_star}, {"warm_start", !tr_init.empty()}};
            man.seeds()["train"] = cfg.seed;
            man.config()["result"] = point_json(point);
            man.config()["best_iteration"] = result.best_iteration;
            man.output(tr_out);
            man.output(log);
            man.write(manifest_for(tr_out));
            print_point(point);
        } else if (fr->parsed()) {
            Manifest man("frontier", argv_vec);
            const auto m = load_market(layers, "");
            const auto cfg = load_train(layers, fr_tf);
            const auto s = load_scenario(layers, fr_sf);
            const auto kappas = parse_kappas(fr_kappas);
            const auto paths = read_pathset(fr_paths);
            check_paths_scenario(fr_paths, paths, s);
            man.input(fr_paths);
            const fs::path dir = fr_dir;
            fs::create_directories(dir);
            std::vector<FrontierPoint> points;
            Json entries = Json::array();
            const auto sweep = frontier_sweep(kappas, paths, s, m, cfg, [&](const SweepEntry& e, const TrainResult& r) {
                const auto tag = kappa_tag(e.kappa);
                const fs::path ckpt = dir / ("kappa_" + tag + ".ckpt.json");
                const fs::path log = dir / ("kappa_" + tag + ".log.csv");
                save_checkpoint(e.policy, ckpt);
                write_train_log(r.log, log);
                man.output(ckpt);
                man.output(log);
                entries.push_back({{"kappa", tag},
                                   {"warm_started", e.warm_started},
                                   {"cold_fallback", e.cold_fallback},
                                   {"cold_won", e.cold_won},
                                   {"start_w_star", e.start_w_star},
                                   {"note", e.note},
                                   {"best_iteration", r.best_iteration},
                                   {"point", point_json(e.point)}});
                if (!e.note.empty()) std::fprintf(stderr, "kappa %s: %s\n", tag.c_str(), e.note.c_str());
                print_point(e.point);
                std::fflush(stdout);
            }, SweepOptions{.compare_cold = !fr_no_cold});
            for (const auto& e : sweep) points.push_back(e.point);
            const fs::path csv = dir / "frontier.csv";
            write_frontier_csv(points, csv);
            man.output(csv);
            man.config() = {{"scenario", s}, {"market", m}, {"train", train_json(cfg)},
                            {"compare_cold", !fr_no_cold}, {"sweep", entries}};
            man.seeds()["train"] = cfg.seed;
            man.write(dir / "manifest.json");
        } else if (ev->parsed()) {
            Manifest man("eval", argv_vec);
            const auto policy = load_policy(ev_model, ev_controls);
            const auto m = load_market(layers, ev_params);
            const auto paths = read_pathset(ev_paths);
            const auto& s = policy.scenario();
            check_paths_scenario(ev_paths, paths, s);
            man.input(policy.file);
            man.input(ev_paths);
            FrontierPoint point;
            std::size_t clamped = 0;
            if (policy.controls) {
                const auto r = rollout_stored_controls(*policy.controls, paths, m);
                clamped = r.clamped;
                point = summarize(r.result, s, policy.w_star());
            } else {
                point = summarize(rollout(NeuralPolicy{*policy.pair}, paths, s, m), s, policy.w_star());
            }
            print_point(point);
            if (clamped > 0)
                std::fprintf(stderr, "note: %zu control lookups fell outside the stored wealth axis and were clamped\n",
                             clamped);
            man.config() = {{"scenario", s}, {"market", m}, {"result", point_json(point)}, {"clamped", clamped}};
            if (!ev_out.empty()) {
                write_frontier_csv(std::vector<FrontierPoint>{point}, ev_out);
                man.output(ev_out);
                man.write(manifest_for(ev_out));
            }
        } else if (hj->parsed()) {
            Manifest man("hjb", argv_vec);
            const auto m = load_market(layers, hj_params);
            const auto s = load_scenario(layers, hj_sf);
            GridSpec g;
            const Json gj = layers.section("grid");
            g.n_s = gj.value("n_s", g.n_s);
            g.n_b = gj.value("n_b", g.n_b);
            g.n_debt = gj.value("n_debt", g.n_debt);
            g.n_q = gj.value("n_q", g.n_q);
            g.n_p = gj.value("n_p", g.n_p);
            if (hj_grid) g.n_s = g.n_b = *hj_grid;
            overlay(g.n_debt, hj_debt);
            try {
                g.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            ValueGrid vg;
            Json evals = Json::array();
            if (hj_wstar) {
                vg = solve_fixed_wstar(*hj_wstar, s, m, g);
            } else {
                auto r = optimize_wstar(s, m, g);
                for (const auto& [w, v] : r.evaluations) evals.push_back({w, v});
                vg = std::move(r.controls);
            }
            write_controls(vg, hj_out);
            if (!hj_params.empty()) man.input(hj_params);
            man.config() = {{"scenario", s},
                            {"market", m},
                            {"grid", grid_json(g)},
                            {"w_star", vg.w_star},
                            {"value_t0", vg.value_t0},
                            {"boundary_mass", vg.boundary_mass},
                            {"wstar_evaluations", evals}};
            man.output(hj_out);
            man.write(manifest_for(hj_out));
            std::printf("value=%.6f w_star=%.4f boundary_mass=%.3g\n", vg.value_t0, vg.w_star, vg.boundary_mass);
        } else if (rp->parsed()) {
            Manifest man("report", argv_vec);
            const auto policy = load_policy(rp_model, rp_controls);
            const auto m = load_market(layers, rp_params);
            const auto paths = read_pathset(rp_paths);
            const auto& s = policy.scenario();
            check_paths_scenario(rp_paths, paths, s);
            man.input(policy.file);
            man.input(rp_paths);
            const fs::path dir = rp_dir;
            fs::create_directories(dir);
            const auto r = policy.visit([&](const auto& p) { return rollout(p, paths, s, m, true); });
            const auto pct = percentile_report(r, s);
            std::vector<double> wealth(rp_wn);
            for (std::size_t k = 0; k < rp_wn; ++k)
                wealth[k] = rp_wmax * static_cast<double>(k) / static_cast<double>(rp_wn - 1);
            std::vector<std::size_t> times(s.M + 1);
            for (std::size_t i = 0; i <= s.M; ++i) times[i] = i;
            const auto heat = policy.visit([&](const auto& p) { return heatmap_report(p, wealth, times, s); });
            const std::vector<std::pair<std::string, const PercentileTable*>> tables = {
                {"percentiles_wealth.csv", &pct.wealth},
                {"percentiles_stock_fraction.csv", &pct.stock_fraction},
                {"percentiles_withdrawal.csv", &pct.withdrawal}};
            for (const auto& [name, table] : tables) {
                write_percentile_csv(*table, dir / name);
                man.output(dir / name);
            }
            write_heatmap_csv(heat.stock_fraction, dir / "heatmap_stock_fraction.csv");
            write_heatmap_csv(heat.normalized_withdrawal, dir / "heatmap_withdrawal.csv");
            man.output(dir / "heatmap_stock_fraction.csv");
            man.output(dir / "heatmap_withdrawal.csv");
            const auto point = summarize(r, s, policy.w_star());
            man.config() = {{"scenario", s}, {"market", m}, {"result", point_json(point)}};
            man.write(dir / "manifest.json");
            print_point(point);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
