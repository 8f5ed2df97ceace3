#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "avar/error.hpp"
#include "avar/harness.hpp"
#include "avar/lfa.hpp"
#include "avar/rl.hpp"
#include "avar/spec_io.hpp"

namespace {

using namespace avar;

constexpr int kValidation = 2;
constexpr int kRuntime = 3;

std::string vec(const Vector& v) {
    std::vector<double> xs(v.data(), v.data() + v.size());
    return fmt::format("[{}]", fmt::join(xs, ", "));
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
}

void print_constants(const char* label, double delta) {
    const SAConstants c = suggest_constants(delta);
    fmt::print("{}: delta={} c1={} c2={} c3={} eta={}\n", label, delta, c.c1, c.c2, c.c3, eta(c));
}

void oracle_chain(const TransitionMatrix& p, const StateFunction& f, const std::optional<FeatureMatrix>& phi) {
    const auto pi = stationary_distribution(p);
    fmt::print("states: {}\n", p.n_states());
    fmt::print("pi: {}\n", vec(pi.pi));
    if (f.exceeds_unit_bound()) fmt::print(stderr, "warning: sup|f| = {} exceeds 1\n", f.f_max());
    for (Index i = 0; i < f.dim(); ++i) {
        const Vector fi = f.column(i);
        const auto sol = solve_poisson(p, fi, pi);
        const std::string tag = f.dim() > 1 ? fmt::format("[{}]", i) : "";
        fmt::print("f_bar{}: {}\n", tag, sol.f_bar);
        fmt::print("v_star{}: {}\n", tag, vec(sol.v_star));
        fmt::print("kappa{}: {}\n", tag, exact_kappa(p, fi, pi));
        fmt::print("stationary_variance{}: {}\n", tag, stationary_variance(fi, pi));
    }
    if (f.dim() > 1) {
        const Matrix c = exact_covariance(p, f, pi);
        for (Index i = 0; i < c.rows(); ++i) fmt::print("covariance[{}]: {}\n", i, vec(c.row(i).transpose()));
    }
    const double d1 = delta_one(p, pi);
    fmt::print("delta_one: {}\n", d1);
    print_constants("constants", d1);
    if (!phi) return;
    const auto proj = build_projection(*phi);
    if (phi->was_rescaled()) fmt::print(stderr, "warning: Phi rescaled by {}\n", phi->scale());
    fmt::print("ones_in_span: {}\n", proj.theta_e.has_value());
    if (proj.subspace_dim() > 0) {
        const double d2 = delta_two(p, pi, *phi, proj);
        fmt::print("delta_two: {}\n", d2);
        print_constants("lfa_constants", d2);
    } else {
        fmt::print("delta_two: undefined (E = {{0}})\n");
    }
    const Vector f0 = f.column(0);
    const auto ts = theta_star(p, pi, *phi, proj, f0);
    fmt::print("theta_star: {}\n", vec(ts.theta));
    fmt::print("v_tilde: {}\n", ts.v_tilde);
    fmt::print("kappa_star: {}\n", ts.kappa_star);
    fmt::print("min_approx_error: {}\n", min_approx_error(p, pi, *phi, f0));
}

int cmd_oracle(const std::string& path) {
    const ProblemSpec spec = load_problem(path);
    if (const auto* c = std::get_if<ChainSpec>(&spec)) {
        oracle_chain(c->p, c->f, c->phi);
        return 0;
    }
    const auto& m = std::get<MDPSpec>(spec);
    if (m.mdp.reward_exceeds_unit_bound()) fmt::print(stderr, "warning: r_max = {} exceeds 1\n", m.mdp.r_max());
    const InducedChain ic = induced_chain(m.mdp, m.mu);
    fmt::print("p_mu: ");
    for (Index i = 0; i < ic.p_mu.n_states(); ++i) fmt::print("{}", vec(ic.p_mu.probs().row(i).transpose()));
    fmt::print("\npi_mu: {}\n", vec(ic.pi_mu.pi));
    fmt::print("d_mu: {}\n", vec(ic.d_mu.pi));
    fmt::print("average_reward: {}\n", average_reward_oracle(m.mdp, m.mu));
    fmt::print("kappa_mu: {}\n", exact_kappa(ic.p2, ic.r_vec, ic.d_mu));
    fmt::print("q_star: {}\n", vec(solve_poisson(ic.p2, ic.r_vec, ic.d_mu).v_star));
    const double d1 = delta_one(ic.p2, ic.d_mu);
    fmt::print("delta_one: {}\n", d1);
    print_constants("constants", d1);
    return 0;
}

void print_experiment(const Experiment& exp) {
    fmt::print("estimator: {}\n", to_string(exp.cfg.estimator));
    if (exp.delta > 0.0) {
        fmt::print("delta: {}\n", exp.delta);
        fmt::print("constants: c1={} c2={} c3={}\n", exp.constants.c1, exp.constants.c2, exp.constants.c3);
    }
    if (exp.cfg.estimator == EstimatorKind::Stationary) fmt::print("c: {}\n", exp.stationary_c);
    if (exp.cfg.estimator != EstimatorKind::BatchMeans)
        fmt::print("schedule: {} alpha={} h={}\n",
                   exp.schedule.kind == ScheduleKind::Constant ? "constant" : "diminishing", exp.schedule.alpha,
                   exp.schedule.h);
    print_warnings(exp.warnings);
}

void write_trace(const std::string& path, const std::vector<ScalarSnapshot>& scalars, std::int64_t every) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path);
    out << "k,f_bar,v_bar,kappa\n";
    for (const auto& s : scalars)
        if (s.k % every == 0) out << fmt::format("{},{},{},{}\n", s.k, s.f_bar, s.v_bar, s.kappa);
}

int cmd_run(const std::string& path, std::optional<std::int64_t> n, std::uint64_t seed, const std::string& trace,
            std::int64_t every) {
    ExperimentConfig cfg = load_config(path);
    cfg.n_grid = {n.value_or(cfg.n_grid.back())};
    cfg.seeds = 1;
    cfg.base_seed = seed;
    if (every < 1) throw Error(ErrorKind::InvalidConfig, "--every must be positive");
    const Experiment exp = prepare(cfg);
    print_experiment(exp);
    const std::int64_t steps = cfg.n_grid.front();
    if (!trace.empty()) {
        RunOptions opts{.start = exp.start};
        std::vector<ScalarSnapshot> scalars;
        switch (cfg.estimator) {
        case EstimatorKind::Tabular:
        case EstimatorKind::RLTabular:
            scalars = run_tabular(exp.p, exp.f0(), exp.schedule, exp.constants, steps, seed, opts).scalars;
            break;
        case EstimatorKind::LFA:
        case EstimatorKind::RLLFA:
            scalars = run_lfa(exp.p, exp.f0(), *exp.phi, *exp.proj, exp.schedule, exp.constants, steps, seed, opts)
                          .scalars;
            break;
        case EstimatorKind::Stationary:
            scalars = run_stationary(exp.p, exp.f0(), exp.schedule, {exp.stationary_c}, steps, seed, opts).scalars;
            break;
        case EstimatorKind::Covariance:
            scalars = run_covariance(exp.p, exp.f, exp.schedule, exp.constants, steps, seed, opts).scalars;
            break;
        case EstimatorKind::BatchMeans:
            throw Error(ErrorKind::InvalidConfig, "batch-means has no per-step trace");
        }
        write_trace(trace, scalars, every);
    }
    const SweepResult res = run_sweep(exp);
    for (const auto& r : res.rows)
        fmt::print("{}: n={} seed={} estimate={} truth={} sq_err={}\n", r.estimator, r.n, r.seed, r.estimate,
                   r.truth, r.sq_err);
    return 0;
}

void print_mse(const std::vector<GridMSE>& mse) {
    fmt::print("{:<16} {:>10} {:>14}\n", "estimator", "n", "mse");
    for (const auto& m : mse) fmt::print("{:<16} {:>10} {:>14.6g}\n", m.estimator, m.n, m.mse);
}

void print_slopes(const std::vector<GridMSE>& mse) {
    for (const auto& [label, fit] : fit_slopes(mse))
        fmt::print("slope {}: {:.4f} (intercept {:.4f})\n", label, fit.slope, fit.intercept);
}

bool multi_point(const std::vector<GridMSE>& mse) {
    for (const auto& m : mse)
        if (m.n != mse.front().n) return true;
    return false;
}

int cmd_sweep(const std::string& path, const std::string& output, std::optional<std::int64_t> seeds,
              std::optional<unsigned> threads) {
    ExperimentConfig cfg = load_config(path);
    if (!output.empty()) cfg.output = output;
    if (seeds) cfg.seeds = *seeds;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    const Experiment exp = prepare(cfg);
    print_experiment(exp);
    const SweepResult res = run_sweep(exp);
    if (!cfg.output.empty()) {
        write_csv(cfg.output, res.rows);
        fmt::print("wrote {} rows to {}\n", res.rows.size(), cfg.output.string());
    } else {
        write_csv(std::cout, res.rows);
    }
    print_mse(res.mse);
    if (multi_point(res.mse)) print_slopes(res.mse);
    if (res.max_projection_residual > 1e-8)
        fmt::print(stderr, "warning: projection residual reached {}\n", res.max_projection_residual);
    return 0;
}

int cmd_slope(const std::string& path) {
    const auto rows = read_csv(std::filesystem::path(path));
    if (rows.empty()) throw Error(ErrorKind::DegeneratePoints, "no rows in " + path);
    const auto mse = aggregate(rows);
    print_mse(mse);
    print_slopes(mse);
    return 0;
}

int cmd_bound(const std::string& path, std::optional<double> b, std::optional<std::int64_t> seeds) {
    ExperimentConfig cfg = load_config(path);
    if (b) cfg.bound_b = *b;
    if (seeds) cfg.seeds = *seeds;
    cfg.validate();
    const Experiment exp = prepare(cfg);
    print_experiment(exp);
    const BoundReport rep = bound_report(exp, run_sweep(exp));
    fmt::print("gamma2={} H={} theta_norm={} B={} psi1={} psi2={}\n", rep.params.gamma2, rep.params.h_norm,
               rep.params.theta_norm, rep.params.b, rep.params.psi1(), rep.params.psi2());
    for (const auto& v : rep.schedule_violations) fmt::print("schedule side condition not met: {}\n", v);
    fmt::print("{:>10} {:>14} {:>14} {:>14}\n", "n", "iterate_mse", "estimate_mse", "bound");
    for (const auto& r : rep.rows)
        fmt::print("{:>10} {:>14.6g} {:>14.6g} {:>14.6g}\n", r.n, r.empirical_mse, r.kappa_mse, r.bound);
    fmt::print("monotone: {}\n", rep.monotone);
    fmt::print("dominated: {}\n", rep.dominated);
    if (!rep.dominated) {
        fmt::print(stderr, "error: empirical MSE exceeds the bound; B = {} is insufficient\n", rep.params.b);
        return kRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recursive asymptotic-variance estimators for Markov chains"};
    app.require_subcommand(1);

    std::string spec_path, config_path, csv_path, output, trace;
    std::optional<std::int64_t> n, seeds;
    std::optional<unsigned> threads;
    std::optional<double> b;
    std::uint64_t seed = 1;
    std::int64_t every = 1;

    auto* oracle = app.add_subcommand("oracle", "Exact stationary law, Poisson solution, kappa and deltas");
    oracle->add_option("spec", spec_path, "Chain or MDP spec file")->required();

    auto* run = app.add_subcommand("run", "Single seeded run at the largest grid point");
    run->add_option("config", config_path, "Experiment config")->required();
    run->add_option("-n,--steps", n, "Number of steps (default: last n_grid entry)");
    run->add_option("-s,--seed", seed, "Seed");
    run->add_option("-t,--trace", trace, "Write the per-step trace CSV here");
    run->add_option("--every", every, "Trace cadence");

    auto* sweep = app.add_subcommand("sweep", "Seeded sweep over the n grid; writes result CSV");
    sweep->add_option("config", config_path, "Experiment config")->required();
    sweep->add_option("-o,--output", output, "CSV path (default: config output, else stdout)");
    sweep->add_option("--seeds", seeds, "Override the seed count");
    sweep->add_option("-j,--threads", threads, "Worker threads (default: all cores)");

    auto* slope = app.add_subcommand("slope", "Log-log MSE slope from a result CSV");
    slope->add_option("csv", csv_path, "Result CSV")->required();

    auto* bound = app.add_subcommand("bound", "Empirical MSE against the finite-time bound");
    bound->add_option("config", config_path, "Experiment config")->required();
    bound->add_option("-B,--B", b, "Bound constant B");
    bound->add_option("--seeds", seeds, "Override the seed count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    try {
        if (*oracle) return cmd_oracle(spec_path);
        if (*run) return cmd_run(config_path, n, seed, trace, every);
        if (*sweep) return cmd_sweep(config_path, output, seeds, threads);
        if (*slope) return cmd_slope(csv_path);
        if (*bound) return cmd_bound(config_path, b, seeds);
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return is_validation_error(e.kind()) ? kValidation : kRuntime;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kRuntime;
    }
    return 0;
}
