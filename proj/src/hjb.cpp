#include "decumulate/hjb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "decumulate/errors.hpp"
#include "decumulate/io.hpp"
#include "decumulate/parallel.hpp"

namespace decumulate {

namespace {

constexpr double kTieTolerance = 1e-11;
constexpr double kBoundaryMassLimit = 1e-8;

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

std::vector<double> uniform_nodes(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) v[k] = lo + h * static_cast<double>(k);
    v.back() = hi;
    return v;
}

// Piecewise-linear interpolation on an ascending axis, constant beyond the ends.
double axis_interp(std::span<const double> axis, std::span<const double> values, double w) {
    if (w <= axis.front()) return values.front();
    if (w >= axis.back()) return values.back();
    const auto it = std::upper_bound(axis.begin(), axis.end(), w);
    const std::size_t k = static_cast<std::size_t>(it - axis.begin());
    const double a = axis[k - 1];
    const double b = axis[k];
    const double t = (w - a) / (b - a);
    return values[k - 1] + t * (values[k] - values[k - 1]);
}

// Linear interpolation on a uniform grid starting at x0 with spacing h, clamped.
double uniform_interp(std::span<const double> v, double x0, double h, double x) {
    const double u = std::clamp((x - x0) / h, 0.0, static_cast<double>(v.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(u), v.size() - 2);
    const double t = u - static_cast<double>(k);
    return v[k] + t * (v[k + 1] - v[k]);
}

void check_finite(std::span<const double> v, const char* what, std::size_t n) {
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericalError(std::string("hjb: non-finite ") + what + " at rebalance index " + std::to_string(n));
}

// Value of entering the next period with wealth x (after the withdrawal and
// the allocation choice at wealth x).
class Continuation {
public:
    Continuation(const HjbGrid& grid, std::span<const double> v_plus, std::span<const double> debt_plus,
                 double zero_value, std::span<const double> p_positive)
        : g_(grid), v_(v_plus), debt_(debt_plus), zero_(zero_value), p_(p_positive),
          pos_axis_(grid.wealth.data() + grid.zero_index + 1, grid.wealth.size() - grid.zero_index - 1) {
        pos_lo_ = pos_axis_.front();
        debt_lo_ = std::exp(grid.z.front());
        at_pos_lo_ = positive(pos_lo_);
        at_debt_lo_ = debt_.front();
    }

    double operator()(double x) const {
        if (x == 0.0) return zero_;
        if (x > 0.0) {
            if (x >= pos_lo_) return positive(x);
            return zero_ + (x / pos_lo_) * (at_pos_lo_ - zero_);
        }
        const double d = -x;
        if (d >= debt_lo_) return uniform_interp(debt_, g_.z.front(), g_.hz(), std::log(d));
        return zero_ + (d / debt_lo_) * (at_debt_lo_ - zero_);
    }

private:
    double positive(double x) const {
        const double p = std::clamp(axis_interp(pos_axis_, p_, x), 0.0, 1.0);
        return interpolate_solvent(g_, v_, x * p, x * (1.0 - p));
    }

    const HjbGrid& g_;
    std::span<const double> v_;
    std::span<const double> debt_;
    double zero_;
    std::span<const double> p_;
    std::span<const double> pos_axis_;
    double pos_lo_ = 0.0;
    double debt_lo_ = 0.0;
    double at_pos_lo_ = 0.0;
    double at_debt_lo_ = 0.0;
};

}  // namespace

void GridSpec::validate() const {
    if (!is_power_of_two(n_s) || !is_power_of_two(n_b))
        throw std::invalid_argument("grid: n_s and n_b must be powers of two");
    if (n_debt < 2) throw std::invalid_argument("grid: need at least two debt nodes");
    if (!(s_min > 0.0 && s_max > s_min) || !(b_min > 0.0 && b_max > b_min))
        throw std::invalid_argument("grid: asset bounds must satisfy 0 < min < max");
    if (!(debt_min > 0.0 && debt_max > debt_min)) throw std::invalid_argument("grid: debt bounds must satisfy 0 < min < max");
    if (n_q < 2 || n_p < 2) throw std::invalid_argument("grid: control grids need at least two points");
    if (!(tail_tolerance > 0.0)) throw std::invalid_argument("grid: tail tolerance must be positive");
}

GridSpec GridSpec::square(std::size_t n) {
    GridSpec g;
    g.n_s = n;
    g.n_b = n;
    return g;
}

HjbGrid::HjbGrid(const GridSpec& s) : spec(s) {
    spec.validate();
    x = uniform_nodes(std::log(spec.s_min), std::log(spec.s_max), spec.n_s);
    y = uniform_nodes(std::log(spec.b_min), std::log(spec.b_max), spec.n_b);
    z = uniform_nodes(std::log(spec.debt_min), std::log(spec.debt_max), spec.n_debt);
    const std::size_t n_pos = spec.n_wealth ? spec.n_wealth : 2 * std::max(spec.n_s, spec.n_b);
    const auto pos = uniform_nodes(std::log(std::min(spec.s_min, spec.b_min)), std::log(spec.s_max + spec.b_max), n_pos);
    wealth.reserve(z.size() + 1 + n_pos);
    for (std::size_t k = z.size(); k-- > 0;) wealth.push_back(-std::exp(z[k]));
    zero_index = wealth.size();
    wealth.push_back(0.0);
    for (double u : pos) wealth.push_back(std::exp(u));
}

double terminal_value(double w, double w_star, const ScenarioConfig& s) {
    return s.es_weight() * (w_star + std::min(w - w_star, 0.0) / s.alpha) + s.epsilon * w;
}

TerminalValues terminal_condition(const HjbGrid& grid, double w_star, const ScenarioConfig& s) {
    TerminalValues t;
    t.solvent.resize(grid.x.size() * grid.y.size());
    for (std::size_t i = 0; i < grid.x.size(); ++i)
        for (std::size_t j = 0; j < grid.y.size(); ++j)
            t.solvent[i * grid.y.size() + j] = terminal_value(std::exp(grid.x[i]) + std::exp(grid.y[j]), w_star, s);
    t.debt.resize(grid.z.size());
    for (std::size_t k = 0; k < grid.z.size(); ++k) t.debt[k] = terminal_value(-std::exp(grid.z[k]), w_star, s);
    return t;
}

MarketKernel::MarketKernel(const HjbGrid& grid, const MarketParams& market, double dt) {
    market.validate();
    const auto& st = market.stock;
    const auto& bd = market.bond;
    const double cross = market.rho_sb * st.sigma * bd.sigma * dt;
    const double spread = market.borrow_spread * dt;
    LogCharFn1 stock_char = [&](double w) { return log_characteristic(st, dt, w); };
    LogCharFn1 bond_char = [&](double w) { return log_characteristic(bd, dt, w); };
    LogCharFn1 debt_char = [&](double w) {
        return log_characteristic(bd, dt, w) + std::complex<double>(0.0, w * spread);
    };
    const double tol = grid.spec.tail_tolerance;
    const auto pad_for = [&](const LogCharFn1& f, double h, double& mass) {
        const double d = tail_displacement(f, tol);
        const auto pad = static_cast<std::size_t>(std::ceil(d / h)) + 1;
        mass = std::max(mass, tail_mass(f, static_cast<double>(pad) * h));
        return pad;
    };
    double mass = 0.0;
    const std::size_t pad_x = pad_for(stock_char, grid.hx(), mass);
    const std::size_t pad_y = pad_for(bond_char, grid.hy(), mass);
    const std::size_t pad_z = pad_for(debt_char, grid.hz(), mass);
    boundary_mass_ = mass;
    solvent_ = std::make_unique<Propagator2D>(
        grid.x.size(), grid.hx(), pad_x, grid.y.size(), grid.hy(), pad_y, [&](double wx, double wy) {
            return log_characteristic(st, dt, wx) + log_characteristic(bd, dt, wy) - cross * wx * wy;
        });
    debt_ = std::make_unique<Propagator1D>(grid.z.size(), grid.hz(), pad_z, debt_char);
}

void MarketKernel::pide_advance(std::span<double> solvent) const { solvent_->apply(solvent); }
void MarketKernel::debt_advance(std::span<double> debt) const { debt_->apply(debt); }

ControlChoice withdrawal_search(double w, const std::function<double(double)>& continuation,
                                const ScenarioConfig& s, std::size_t n_q) {
    const double rw = s.reward_weight();
    if (s.es_only || w <= s.q_min || s.q_max <= s.q_min) return {s.q_min, rw * s.q_min + continuation(w - s.q_min)};
    std::vector<double> qs;
    qs.reserve(n_q + 1);
    const double step = (s.q_max - s.q_min) / static_cast<double>(n_q - 1);
    for (std::size_t k = 0; k < n_q; ++k) {
        const double q = k + 1 == n_q ? s.q_max : s.q_min + step * static_cast<double>(k);
        if (q <= w) qs.push_back(q);
    }
    if (w < s.q_max && qs.back() < w) qs.push_back(w);
    std::vector<double> vals(qs.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < qs.size(); ++k) {
        vals[k] = rw * qs[k] + continuation(w - qs[k]);
        best = std::max(best, vals[k]);
    }
    const double cut = best - kTieTolerance * (1.0 + std::abs(best));
    for (std::size_t k = qs.size(); k-- > 0;)
        if (vals[k] >= cut) return {qs[k], vals[k]};
    return {qs.back(), vals.back()};
}

double interpolate_solvent(const HjbGrid& g, std::span<const double> v, double s, double b) {
    const std::size_t ny = g.y.size();
    // A holding below the lower edge is lifted onto it and the difference
    // taken from the other asset, so total wealth is unchanged.
    const double s_lo = g.spec.s_min;
    const double b_lo = g.spec.b_min;
    if (s < s_lo && b - (s_lo - s) >= b_lo) {
        b -= s_lo - s;
        s = s_lo;
    } else if (b < b_lo && s - (b_lo - b) >= s_lo) {
        s -= b_lo - b;
        b = b_lo;
    }
    const auto coord = [](double a, const std::vector<double>& axis, double h, std::size_t& k, double& t) {
        const double u = a > 0.0 ? std::clamp((std::log(a) - axis.front()) / h, 0.0, static_cast<double>(axis.size() - 1))
                                 : 0.0;
        k = std::min(static_cast<std::size_t>(u), axis.size() - 2);
        t = u - static_cast<double>(k);
    };
    std::size_t i, j;
    double tx, ty;
    coord(s, g.x, g.hx(), i, tx);
    coord(b, g.y, g.hy(), j, ty);
    const double* r0 = v.data() + i * ny + j;
    const double* r1 = r0 + ny;
    return (1.0 - tx) * ((1.0 - ty) * r0[0] + ty * r0[1]) + tx * ((1.0 - ty) * r1[0] + ty * r1[1]);
}

AllocationChoice allocation_search(const HjbGrid& grid, std::span<const double> v_plus, double x, std::size_t n_p) {
    std::vector<double> vals(n_p);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_p; ++k) {
        const double p = static_cast<double>(k) / static_cast<double>(n_p - 1);
        vals[k] = interpolate_solvent(grid, v_plus, x * p, x * (1.0 - p));
        best = std::max(best, vals[k]);
    }
    const double cut = best - kTieTolerance * (1.0 + std::abs(best));
    for (std::size_t k = 0; k < n_p; ++k)
        if (vals[k] >= cut) return {static_cast<double>(k) / static_cast<double>(n_p - 1), vals[k]};
    return {0.0, vals[0]};
}

namespace {

RebalanceResult rebalance_impl(const HjbGrid& grid, std::span<const double> v_plus, std::span<const double> debt_plus,
                               double zero_value, const ScenarioConfig& s, double extra_w, double* extra_value) {
    const std::size_t n = grid.wealth.size();
    const std::size_t first_pos = grid.zero_index + 1;
    RebalanceResult r;
    r.value.resize(n);
    r.q.resize(n);
    r.p.assign(n, 0.0);
    for_each_chunk(n - first_pos, 64, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
            r.p[first_pos + k] = allocation_search(grid, v_plus, grid.wealth[first_pos + k], grid.spec.n_p).p;
    });
    const std::span<const double> p_pos(r.p.data() + first_pos, n - first_pos);
    const Continuation cont(grid, v_plus, debt_plus, zero_value, p_pos);
    const std::function<double(double)> f = std::cref(cont);
    for_each_chunk(n, 64, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto c = withdrawal_search(grid.wealth[k], f, s, grid.spec.n_q);
            r.q[k] = c.q;
            r.value[k] = c.value;
        }
    });
    if (extra_value) *extra_value = withdrawal_search(extra_w, f, s, grid.spec.n_q).value;
    return r;
}

}  // namespace

RebalanceResult rebalance_optimize(const HjbGrid& grid, std::span<const double> v_plus,
                                   std::span<const double> debt_plus, double zero_value, const ScenarioConfig& s) {
    if (v_plus.size() != grid.x.size() * grid.y.size() || debt_plus.size() != grid.z.size())
        throw std::invalid_argument("rebalance_optimize: value arrays do not match the grid");
    return rebalance_impl(grid, v_plus, debt_plus, zero_value, s, 0.0, nullptr);
}

HjbSolver::HjbSolver(const ScenarioConfig& scenario, const MarketParams& market, const GridSpec& spec)
    : scenario_(scenario), market_(market), grid_(spec) {
    scenario_.validate();
    if (scenario_.M == 0) return;
    kernel_.emplace(grid_, market, scenario_.dt());
    if (kernel_->boundary_mass() > kBoundaryMassLimit)
        throw NumericalError("hjb: transition kernel mass beyond the padding is " +
                             std::to_string(kernel_->boundary_mass()));
}

ValueGrid HjbSolver::solve(double w_star) const {
    const auto& s = scenario_;
    const auto& g = grid_;
    const std::size_t M = s.M;
    const std::size_t n_axis = g.wealth.size();
    const std::size_t nx = g.x.size();
    const std::size_t ny = g.y.size();

    ValueGrid out;
    out.spec = g.spec;
    out.scenario = s;
    out.w_star = w_star;
    out.boundary_mass = boundary_mass();
    out.wealth = g.wealth;
    out.q.resize(M + 1);
    out.p.resize(M + 1);
    out.value.resize(M + 1);

    // t_M: last withdrawal, then liquidation into the terminal condition.
    const std::function<double(double)> terminal = [&](double x) { return terminal_value(x, w_star, s); };
    std::vector<double> h(n_axis);
    std::vector<double> q(n_axis);
    for (std::size_t k = 0; k < n_axis; ++k) {
        const auto c = withdrawal_search(g.wealth[k], terminal, s, g.spec.n_q);
        h[k] = c.value;
        q[k] = c.q;
    }
    double value_t0 = 0.0;
    if (M == 0) value_t0 = withdrawal_search(s.W0, terminal, s, g.spec.n_q).value;
    out.value[M] = h;
    out.q[M] = q;
    out.p[M].assign(n_axis, 0.0);

    std::vector<double> solvent(nx * ny);
    std::vector<double> debt(g.z.size());
    std::vector<double> es(nx);
    std::vector<double> eb(ny);
    for (std::size_t i = 0; i < nx; ++i) es[i] = std::exp(g.x[i]);
    for (std::size_t j = 0; j < ny; ++j) eb[j] = std::exp(g.y[j]);
    for (std::size_t n = M; n-- > 0;) {
        const auto& next = out.value[n + 1];
        for_each_chunk(nx, 16, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t j = 0; j < ny; ++j) solvent[i * ny + j] = axis_interp(g.wealth, next, es[i] + eb[j]);
        });
        for (std::size_t k = 0; k < g.z.size(); ++k) debt[k] = axis_interp(g.wealth, next, -std::exp(g.z[k]));
        kernel_->pide_advance(solvent);
        kernel_->debt_advance(debt);
        check_finite(solvent, "solvent value", n);
        check_finite(debt, "debt value", n);
        auto r = rebalance_impl(g, solvent, debt, next[g.zero_index], s, s.W0, n == 0 ? &value_t0 : nullptr);
        check_finite(r.value, "rebalanced value", n);
        out.value[n] = std::move(r.value);
        out.q[n] = std::move(r.q);
        out.p[n] = std::move(r.p);
    }
    out.value_t0 = value_t0;
    return out;
}

ValueGrid solve_fixed_wstar(double w_star, const ScenarioConfig& s, const MarketParams& m, const GridSpec& spec) {
    return HjbSolver(s, m, spec).solve(w_star);
}

WstarResult optimize_wstar(const ScenarioConfig& s, const MarketParams& m, const GridSpec& spec,
                           const WstarSearch& search) {
    if (!(search.hi > search.lo) || search.n_coarse < 2 || !(search.tol > 0.0))
        throw std::invalid_argument("optimize_wstar: invalid search bracket");
    const HjbSolver solver(s, m, spec);
    WstarResult res;
    double best_w = search.lo;
    double best_v = -std::numeric_limits<double>::infinity();
    auto eval = [&](double w) {
        const double v = solver.solve(w).value_t0;
        res.evaluations.emplace_back(w, v);
        if (v > best_v) {
            best_v = v;
            best_w = w;
        }
        return v;
    };
    const double step = (search.hi - search.lo) / static_cast<double>(search.n_coarse - 1);
    for (std::size_t k = 0; k < search.n_coarse; ++k) eval(search.lo + step * static_cast<double>(k));

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = best_w - step;
    double b = best_w + step;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > search.tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
    }
    res.w_star = best_w;
    res.value = best_v;
    res.controls = solver.solve(best_w);
    return res;
}

double StoredControlPolicy::withdrawal(double w, std::size_t i) const {
    const auto& s = grid_.scenario;
    if (s.es_only) return s.q_min;
    const double q = axis_interp(grid_.wealth, grid_.q.at(i), w);
    return std::clamp(q, s.q_min, std::max(s.q_min, std::min(s.q_max, w)));
}

double StoredControlPolicy::allocation(double w, std::size_t i) const {
    return std::clamp(axis_interp(grid_.wealth, grid_.p.at(i), w), 0.0, 1.0);
}

StoredRollout rollout_stored_controls(const ValueGrid& grid, const PathSet& paths, const MarketParams& market,
                                      bool keep_traces) {
    StoredRollout out;
    out.result = rollout(StoredControlPolicy(grid), paths, grid.scenario, market, keep_traces);
    const double lo = grid.wealth.front();
    const double hi = grid.wealth.back();
    // Count the wealth states that fell outside the stored axis.
    if (keep_traces) {
        for (double w : out.result.wealth_trace)
            if (w < lo || w > hi) ++out.clamped;
    } else {
        for (double w : out.result.terminal_wealth)
            if (w < lo || w > hi) ++out.clamped;
    }
    return out;
}

namespace {

constexpr char kControlsMagic[4] = {'D', 'C', 'T', 'L'};
constexpr std::uint32_t kControlsVersion = 1;

Json grid_to_json(const GridSpec& g) {
    return {{"n_s", g.n_s},       {"n_b", g.n_b},         {"s_min", g.s_min},       {"s_max", g.s_max},
            {"b_min", g.b_min},   {"b_max", g.b_max},     {"n_debt", g.n_debt},     {"debt_min", g.debt_min},
            {"debt_max", g.debt_max}, {"n_wealth", g.n_wealth}, {"n_q", g.n_q}, {"n_p", g.n_p},
            {"tail_tolerance", g.tail_tolerance}};
}

GridSpec grid_from_json(const Json& j) {
    GridSpec g;
    g.n_s = j.at("n_s").get<std::size_t>();
    g.n_b = j.at("n_b").get<std::size_t>();
    g.s_min = j.at("s_min").get<double>();
    g.s_max = j.at("s_max").get<double>();
    g.b_min = j.at("b_min").get<double>();
    g.b_max = j.at("b_max").get<double>();
    g.n_debt = j.at("n_debt").get<std::size_t>();
    g.debt_min = j.at("debt_min").get<double>();
    g.debt_max = j.at("debt_max").get<double>();
    g.n_wealth = j.at("n_wealth").get<std::size_t>();
    g.n_q = j.at("n_q").get<std::size_t>();
    g.n_p = j.at("n_p").get<std::size_t>();
    g.tail_tolerance = j.at("tail_tolerance").get<double>();
    return g;
}

}  // namespace

void write_controls(const ValueGrid& grid, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    const Json header = {{"scenario", grid.scenario},
                         {"grid", grid_to_json(grid.spec)},
                         {"w_star", grid.w_star},
                         {"value_t0", grid.value_t0},
                         {"boundary_mass", grid.boundary_mass}};
    const std::string text = header.dump();
    out.write(kControlsMagic, 4);
    le::put_u32(out, kControlsVersion);
    le::put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    le::put_u32(out, static_cast<std::uint32_t>(grid.q.size()));
    le::put_u64(out, grid.wealth.size());
    le::put_f64s(out, grid.wealth);
    for (std::size_t n = 0; n < grid.q.size(); ++n) {
        le::put_f64s(out, grid.q[n]);
        le::put_f64s(out, grid.p[n]);
        le::put_f64s(out, grid.value[n]);
    }
    if (!out) throw DataError("failed writing " + file.string());
}

ValueGrid read_controls(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open controls file " + file.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kControlsMagic)) throw DataError(file.string() + ": not a controls file");
    const auto version = le::get_u32(in);
    if (version != kControlsVersion)
        throw DataError(file.string() + ": unsupported controls version " + std::to_string(version));
    const auto len = le::get_u64(in);
    if (len > (1u << 24)) throw DataError(file.string() + ": implausible header length");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError(file.string() + ": truncated header");
    ValueGrid g;
    try {
        const Json h = Json::parse(text);
        h.at("scenario").get_to(g.scenario);
        g.spec = grid_from_json(h.at("grid"));
        g.w_star = h.at("w_star").get<double>();
        g.value_t0 = h.at("value_t0").get<double>();
        g.boundary_mass = h.at("boundary_mass").get<double>();
    } catch (const Json::exception& e) {
        throw DataError(file.string() + ": bad header: " + e.what());
    }
    const auto n_times = le::get_u32(in);
    const auto n_nodes = le::get_u64(in);
    if (n_times != g.scenario.M + 1 || n_nodes < 2 || n_nodes > (1u << 26))
        throw DataError(file.string() + ": inconsistent control dimensions");
    g.wealth.resize(n_nodes);
    le::get_f64s(in, g.wealth);
    g.q.assign(n_times, std::vector<double>(n_nodes));
    g.p.assign(n_times, std::vector<double>(n_nodes));
    g.value.assign(n_times, std::vector<double>(n_nodes));
    for (std::size_t n = 0; n < n_times; ++n) {
        le::get_f64s(in, g.q[n]);
        le::get_f64s(in, g.p[n]);
        le::get_f64s(in, g.value[n]);
    }
    for (std::size_t k = 1; k < n_nodes; ++k)
        if (!(g.wealth[k] > g.wealth[k - 1])) throw DataError(file.string() + ": wealth axis not ascending");
    return g;
}

}  // namespace decumulate
