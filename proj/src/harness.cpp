#include "avar/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "avar/error.hpp"

namespace avar {

namespace {

using nlohmann::json;

constexpr double kStationaryGamma = 2.0;
constexpr double kStationaryAlpha = 4.0;

bool is_variance_sa(EstimatorKind k) {
    return k == EstimatorKind::Tabular || k == EstimatorKind::Covariance || k == EstimatorKind::LFA ||
           k == EstimatorKind::RLTabular || k == EstimatorKind::RLLFA;
}

bool uses_features(EstimatorKind k) { return k == EstimatorKind::LFA || k == EstimatorKind::RLLFA; }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

double number_or_auto(const json& j, const char* name, std::optional<double>& out) {
    if (!j.contains(name)) return 0.0;
    const json& v = j.at(name);
    if (v.is_string() && v.get<std::string>() == "auto") return 0.0;
    if (!v.is_number()) throw Error(ErrorKind::InvalidConfig, std::string(name) + " must be a number or \"auto\"");
    out = v.get<double>();
    return *out;
}

template <class T>
bool parse_cell(const std::string& cell, T& out) {
    const char* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc() && ptr == end;
}

struct SeedOutcome {
    std::vector<std::vector<double>> estimates;  // [grid][target]
    std::vector<double> full_sq_err;             // [grid]
    double projection_residual = 0.0;
};

double sq_dist(const Vector& a, const Vector& b) {
    if (b.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    return (a - b).squaredNorm();
}

Vector stack_tabular(const TabularState& st) {
    Vector out(st.v.size() + 3);
    out << st.f_bar, st.v, st.v_bar, st.kappa;
    return out;
}

SeedOutcome run_one(const Experiment& exp, std::uint64_t seed) {
    const auto& grid = exp.cfg.n_grid;
    const std::int64_t n_max = grid.back();
    RunOptions opts;
    opts.start = exp.start;
    opts.checkpoints = grid;
    opts.record_scalars = false;

    SeedOutcome out;
    switch (exp.cfg.estimator) {
    case EstimatorKind::Tabular:
    case EstimatorKind::RLTabular: {
        const auto tr = run_tabular(exp.p, exp.f0(), exp.schedule, exp.constants, n_max, seed, opts);
        for (const auto& s : tr.snapshots) {
            out.estimates.push_back({s.kappa});
            out.full_sq_err.push_back(sq_dist(stack_tabular(s), exp.theta_target));
        }
        out.projection_residual = tr.max_projection_residual;
        break;
    }
    case EstimatorKind::LFA:
    case EstimatorKind::RLLFA: {
        const auto tr = run_lfa(exp.p, exp.f0(), *exp.phi, *exp.proj, exp.schedule, exp.constants,
                                n_max, seed, opts);
        for (const auto& s : tr.snapshots) {
            out.estimates.push_back({s.kappa});
            out.full_sq_err.push_back(sq_dist(stack(s), exp.theta_target));
        }
        out.projection_residual = tr.max_projection_residual;
        break;
    }
    case EstimatorKind::Stationary: {
        const auto tr = run_stationary(exp.p, exp.f0(), exp.schedule, {exp.stationary_c}, n_max,
                                       seed, opts);
        for (const auto& s : tr.snapshots) {
            out.estimates.push_back({s.v});
            out.full_sq_err.push_back(sq_dist(Eigen::Vector2d(s.f_bar, s.v), exp.theta_target));
        }
        break;
    }
    case EstimatorKind::Covariance: {
        const auto tr = run_covariance(exp.p, exp.f, exp.schedule, exp.constants, n_max, seed, opts);
        for (const auto& s : tr.snapshots) {
            std::vector<double> est;
            for (Index i = 0; i < s.c.rows(); ++i)
                for (Index j = i; j < s.c.cols(); ++j) est.push_back(s.c(i, j));
            out.estimates.push_back(std::move(est));
            out.full_sq_err.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        out.projection_residual = tr.max_projection_residual;
        break;
    }
    case EstimatorKind::BatchMeans: {
        const Trajectory t = simulate(exp.p, exp.start, n_max, seed);
        const Vector f = exp.f0();
        std::vector<double> values(t.states.size());
        for (std::size_t k = 0; k < values.size(); ++k) values[k] = f(t.states[k]);
        for (std::int64_t n : grid) {
            const std::span<const double> prefix(values.data(), static_cast<std::size_t>(n));
            out.estimates.push_back({batch_means(prefix, {cube_root_batch(n), exp.cfg.batch_mode})});
            out.full_sq_err.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        break;
    }
    }
    return out;
}

}  // namespace

const char* to_string(EstimatorKind k) {
    switch (k) {
    case EstimatorKind::Tabular: return "tabular";
    case EstimatorKind::Stationary: return "stationary";
    case EstimatorKind::Covariance: return "covariance";
    case EstimatorKind::LFA: return "lfa";
    case EstimatorKind::RLTabular: return "rl-tabular";
    case EstimatorKind::RLLFA: return "rl-lfa";
    case EstimatorKind::BatchMeans: return "batch-means";
    }
    return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
    for (auto k : {EstimatorKind::Tabular, EstimatorKind::Stationary, EstimatorKind::Covariance,
                   EstimatorKind::LFA, EstimatorKind::RLTabular, EstimatorKind::RLLFA,
                   EstimatorKind::BatchMeans})
        if (name == to_string(k)) return k;
    throw Error(ErrorKind::InvalidConfig, "unknown estimator '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (n_grid.empty()) throw Error(ErrorKind::InvalidConfig, "n_grid is empty");
    if (n_grid.front() < 1) throw Error(ErrorKind::InvalidConfig, "n_grid entries must be positive");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw Error(ErrorKind::InvalidConfig, "n_grid must be strictly increasing");
    if (seeds < 1) throw Error(ErrorKind::InvalidConfig, "need at least one seed");
    if (!(bound_b > 0.0)) throw Error(ErrorKind::InvalidConfig, "B must be positive");
    if (!(schedule.alpha_scale > 0.0)) throw Error(ErrorKind::InvalidConfig, "alpha_scale must be positive");
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    ExperimentConfig cfg;
    try {
        if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "config must be an object");
        for (const char* req : {"spec", "estimator", "n_grid"})
            if (!j.contains(req)) throw Error(ErrorKind::InvalidConfig, std::string("missing field '") + req + "'");
        cfg.spec_path = resolve(base_dir, j.at("spec").get<std::string>());
        cfg.estimator = parse_estimator(j.at("estimator").get<std::string>());

        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            if (s.is_string()) {
                if (s.get<std::string>() != "auto")
                    throw Error(ErrorKind::InvalidConfig, "schedule must be an object or \"auto\"");
            } else {
                const std::string kind = s.value("kind", "diminishing");
                if (kind == "constant") cfg.schedule.kind = ScheduleKind::Constant;
                else if (kind == "diminishing") cfg.schedule.kind = ScheduleKind::Diminishing;
                else throw Error(ErrorKind::InvalidConfig, "schedule kind must be constant or diminishing");
                number_or_auto(s, "alpha", cfg.schedule.alpha);
                number_or_auto(s, "h", cfg.schedule.h);
                cfg.schedule.alpha_scale = s.value("alpha_scale", cfg.schedule.alpha_scale);
            }
        }
        if (j.contains("constants")) {
            const json& c = j.at("constants");
            if (c.is_string()) {
                if (c.get<std::string>() != "auto")
                    throw Error(ErrorKind::InvalidConfig, "constants must be an object or \"auto\"");
            } else if (cfg.estimator == EstimatorKind::Stationary) {
                cfg.stationary_c = c.at("c").get<double>();
            } else {
                cfg.constants = SAConstants{c.at("c1").get<double>(), c.at("c2").get<double>(),
                                            c.at("c3").get<double>()};
            }
        }
        cfg.n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
        if (j.contains("seeds")) {
            const json& s = j.at("seeds");
            if (s.is_number_integer()) {
                cfg.seeds = s.get<std::int64_t>();
            } else {
                cfg.seeds = s.value("count", std::int64_t{1});
                cfg.base_seed = s.value("base", std::uint64_t{1});
            }
        }
        if (j.contains("output")) cfg.output = resolve(base_dir, j.at("output").get<std::string>());
        cfg.threads = j.value("threads", 0u);
        cfg.bound_b = j.value("B", 2.0);
        if (j.contains("batch")) {
            const std::string mode = j.at("batch").value("mode", "nonoverlapping");
            if (mode == "overlapping") cfg.batch_mode = BatchMode::Overlapping;
            else if (mode != "nonoverlapping")
                throw Error(ErrorKind::InvalidConfig, "batch mode must be nonoverlapping or overlapping");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path), path.parent_path());
}

Experiment prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    const ProblemSpec spec = load_problem(cfg.spec_path);
    const EstimatorKind kind = cfg.estimator;
    const bool rl = kind == EstimatorKind::RLTabular || kind == EstimatorKind::RLLFA;
    if (rl != std::holds_alternative<MDPSpec>(spec))
        throw Error(ErrorKind::InvalidConfig, std::string(to_string(kind)) +
                                                  (rl ? " needs an MDP spec" : " needs a chain spec"));

    std::vector<std::string> warnings;
    auto build = [&]() -> Experiment {
        if (const auto* c = std::get_if<ChainSpec>(&spec)) {
            const StationaryDistribution pi = stationary_distribution(c->p);
            return Experiment{.cfg = cfg, .p = c->p, .f = c->f, .pi = pi, .start = c->start, .phi = c->phi};
        }
        const auto& m = std::get<MDPSpec>(spec);
        if (m.mdp.reward_exceeds_unit_bound()) warnings.push_back("rewards exceed 1 in magnitude");
        InducedChain ic = induced_chain(m.mdp, m.mu);
        return Experiment{.cfg = cfg, .p = ic.p2, .f = StateFunction(ic.r_vec), .pi = ic.d_mu,
                          .start = m.start, .phi = m.phi};
    };
    Experiment exp = build();
    exp.warnings = std::move(warnings);
    if (exp.f.exceeds_unit_bound()) exp.warnings.push_back("sup|f| exceeds 1; guarantees assume |f| <= 1");
    if (exp.phi && exp.phi->was_rescaled())
        exp.warnings.push_back(fmt::format("Phi rescaled by {} to unit row norm", exp.phi->scale()));
    if (kind != EstimatorKind::Covariance && exp.f.dim() > 1)
        exp.warnings.push_back("f has several columns; using the first");

    const Vector f = exp.f0();
    const double f_bar = exp.pi.mean(f);

    if (uses_features(kind)) {
        if (!exp.phi) throw Error(ErrorKind::InvalidConfig, "lfa estimators need Phi in the spec");
        exp.proj = build_projection(*exp.phi);
        if (exp.proj->subspace_dim() == 0) {
            exp.delta = delta_one(exp.p, exp.pi);
            exp.warnings.push_back("E = {0}; constants use delta_one");
        } else {
            exp.delta = delta_two(exp.p, exp.pi, *exp.phi, *exp.proj);
        }
    } else if (is_variance_sa(kind)) {
        exp.delta = delta_one(exp.p, exp.pi);
    }

    if (is_variance_sa(kind)) {
        exp.constants = cfg.constants ? *cfg.constants : suggest_constants(exp.delta);
        exp.constants_report = validate_constants(exp.delta, exp.constants);
        if (!exp.constants_report.ok())
            for (const auto& v : exp.constants_report.violations)
                exp.warnings.push_back("constants infeasible: " + v);
        const ScheduleSpec& s = cfg.schedule;
        if (s.kind == ScheduleKind::Constant) {
            if (!s.alpha) throw Error(ErrorKind::InvalidConfig, "constant schedule needs alpha");
            exp.schedule = StepSchedule::constant(*s.alpha);
        } else {
            const double alpha = s.alpha ? *s.alpha : s.alpha_scale / exp.delta;
            const double h = s.h ? *s.h : std::max(2.0, exp.constants.c1 * alpha);
            exp.schedule = StepSchedule::diminishing(alpha, h);
        }
    } else if (kind == EstimatorKind::Stationary) {
        exp.stationary_c = cfg.stationary_c.value_or(1.0);
        const double var = stationary_variance(f, exp.pi);
        const ScheduleSpec& s = cfg.schedule;
        if (s.kind == ScheduleKind::Constant) {
            if (!s.alpha) throw Error(ErrorKind::InvalidConfig, "constant schedule needs alpha");
            exp.schedule = StepSchedule::constant(*s.alpha);
        } else {
            const double alpha = s.alpha.value_or(kStationaryAlpha);
            const BoundParams bp = stationary_bound_params(
                kStationaryGamma, exp.stationary_c, f_bar, std::hypot(f_bar, var), cfg.bound_b);
            exp.schedule = StepSchedule::diminishing(alpha, s.h.value_or(std::ceil(minimal_h(bp, alpha))));
        }
    }
    if (kind != EstimatorKind::BatchMeans) exp.schedule.validate();

    const std::string label = to_string(kind);
    switch (kind) {
    case EstimatorKind::Tabular:
    case EstimatorKind::RLTabular:
    case EstimatorKind::BatchMeans: {
        const PoissonSolution sol = solve_poisson(exp.p, f, exp.pi);
        const double kappa = exact_kappa(exp.p, f, exp.pi);
        exp.targets.push_back({label, kappa});
        if (kind != EstimatorKind::BatchMeans) {
            exp.theta_target.resize(exp.p.n_states() + 3);
            exp.theta_target << f_bar, sol.v_star, exp.pi.mean(sol.v_star), kappa;
        }
        break;
    }
    case EstimatorKind::LFA:
    case EstimatorKind::RLLFA: {
        const ThetaStar ts = theta_star(exp.p, exp.pi, *exp.phi, *exp.proj, f);
        exp.targets.push_back({label, ts.kappa_star});
        exp.theta_target.resize(exp.phi->dim() + 3);
        exp.theta_target << f_bar, ts.theta, ts.v_tilde, ts.kappa_star;
        break;
    }
    case EstimatorKind::Stationary: {
        const double var = stationary_variance(f, exp.pi);
        exp.targets.push_back({label, var});
        exp.theta_target = Eigen::Vector2d(f_bar, var);
        break;
    }
    case EstimatorKind::Covariance: {
        const Matrix cov = exact_covariance(exp.p, exp.f, exp.pi);
        for (Index i = 0; i < cov.rows(); ++i)
            for (Index j = i; j < cov.cols(); ++j)
                exp.targets.push_back({fmt::format("{}_{}_{}", label, i, j), cov(i, j)});
        break;
    }
    }
    return exp;
}

SweepResult run_sweep(const Experiment& exp) {
    const auto& cfg = exp.cfg;
    const auto n_seeds = static_cast<std::size_t>(cfg.seeds);
    std::vector<SeedOutcome> outcomes(n_seeds);

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_seeds));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < n_seeds; i = next++) {
            try {
                outcomes[i] = run_one(exp, cfg.base_seed + i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    SweepResult res;
    const std::size_t g = cfg.n_grid.size();
    res.full_mse.assign(g, 0.0);
    for (std::size_t gi = 0; gi < g; ++gi) {
        for (std::size_t si = 0; si < n_seeds; ++si) {
            const SeedOutcome& o = outcomes[si];
            for (std::size_t t = 0; t < exp.targets.size(); ++t) {
                const double est = o.estimates[gi][t];
                const double truth = exp.targets[t].truth;
                const double err = est - truth;
                res.rows.push_back({exp.targets[t].label, cfg.n_grid[gi], cfg.base_seed + si, est,
                                    truth, err * err});
            }
            res.full_mse[gi] += o.full_sq_err[gi] / static_cast<double>(n_seeds);
        }
    }
    for (const auto& o : outcomes)
        res.max_projection_residual = std::max(res.max_projection_residual, o.projection_residual);
    res.mse = aggregate(res.rows);
    return res;
}

SweepResult run_sweep(const ExperimentConfig& cfg) { return run_sweep(prepare(cfg)); }

std::vector<GridMSE> aggregate(const std::vector<ResultRow>& rows) {
    std::map<std::pair<std::string, std::int64_t>, std::pair<double, std::int64_t>> acc;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        auto& [sum, count] = acc[{r.estimator, r.n}];
        sum += r.sq_err;
        ++count;
        if (std::find(order.begin(), order.end(), r.estimator) == order.end())
            order.push_back(r.estimator);
    }
    std::vector<GridMSE> out;
    for (const auto& label : order)
        for (const auto& [key, v] : acc)
            if (key.first == label)
                out.push_back({label, key.second, v.first / static_cast<double>(v.second)});
    return out;
}

std::vector<std::pair<std::string, SlopeFit>> fit_slopes(const std::vector<GridMSE>& mse) {
    std::vector<std::pair<std::string, SlopeFit>> out;
    std::vector<std::string> order;
    for (const auto& m : mse)
        if (std::find(order.begin(), order.end(), m.estimator) == order.end())
            order.push_back(m.estimator);
    for (const auto& label : order) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& m : mse)
            if (m.estimator == label) pts.emplace_back(static_cast<double>(m.n), m.mse);
        out.emplace_back(label, fit_loglog_slope(pts));
    }
    return out;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "estimator,n,seed,estimate,truth,sq_err\n";
    for (const auto& r : rows)
        out << fmt::format("{},{},{},{},{},{}\n", r.estimator, r.n, r.seed, r.estimate, r.truth,
                           r.sq_err);
}

void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
    write_csv(out, rows);
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "estimator,n,seed,estimate,truth,sq_err")
        throw Error(ErrorKind::ParseError, "unexpected CSV header");
    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6)
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected 6 cells");
        ResultRow row{.estimator = cells[0]};
        const bool ok = parse_cell(cells[1], row.n) && parse_cell(cells[2], row.seed) &&
                        parse_cell(cells[3], row.estimate) && parse_cell(cells[4], row.truth) &&
                        parse_cell(cells[5], row.sq_err);
        if (!ok) throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": bad number");
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open " + path.string());
    return read_csv(in);
}

BoundReport bound_report(const Experiment& exp, const SweepResult& sweep) {
    const EstimatorKind kind = exp.cfg.estimator;
    BoundReport rep;
    const double theta_norm = exp.theta_target.norm();
    if (kind == EstimatorKind::Stationary) {
        const double f_bar = exp.theta_target(0);
        if (exp.stationary_c > stationary_c_limit(kStationaryGamma, f_bar))
            throw Error(ErrorKind::SideConditionViolated,
                        fmt::format("c <= {}", stationary_c_limit(kStationaryGamma, f_bar)));
        rep.params = stationary_bound_params(kStationaryGamma, exp.stationary_c, f_bar, theta_norm,
                                             exp.cfg.bound_b);
    } else if (kind == EstimatorKind::Tabular || kind == EstimatorKind::LFA ||
               kind == EstimatorKind::RLTabular || kind == EstimatorKind::RLLFA) {
        if (!exp.constants_report.ok()) {
            std::string msg;
            for (const auto& v : exp.constants_report.violations) msg += (msg.empty() ? "" : "; ") + v;
            throw Error(ErrorKind::SideConditionViolated, msg);
        }
        rep.params = variance_bound_params(exp.delta, exp.constants, theta_norm, exp.cfg.bound_b);
    } else {
        throw Error(ErrorKind::InvalidConfig,
                    std::string("no finite-time bound for estimator ") + to_string(kind));
    }
    rep.schedule_violations = bound_side_conditions(rep.params, exp.schedule);

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < exp.cfg.n_grid.size(); ++i) {
        const std::int64_t n = exp.cfg.n_grid[i];
        BoundRow row{n, sweep.full_mse[i], sweep.mse[i].mse, bound_value(rep.params, exp.schedule, n)};
        rep.dominated = rep.dominated && row.empirical_mse <= row.bound;
        rep.monotone = rep.monotone && row.bound <= prev;
        prev = row.bound;
        rep.rows.push_back(row);
    }
    return rep;
}

BoundReport bound_report(const ExperimentConfig& cfg) {
    const Experiment exp = prepare(cfg);
    return bound_report(exp, run_sweep(exp));
}

}  // namespace avar
