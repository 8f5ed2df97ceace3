#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avar/linear_sa.hpp"
#include "avar/markov.hpp"

namespace avar {

struct TabularState {
    double f_bar = 0.0;
    Vector v;
    double v_bar = 0.0;
    double kappa = 0.0;
    std::int64_t k = 0;

    static TabularState zero(Index n_states);
};

TabularState tabular_step(const TabularState& st, Index x, Index x_next, const Vector& f,
                          const StepSchedule& sched, const SAConstants& c);

/// Per-step scalar record.
struct ScalarSnapshot {
    std::int64_t k;
    double f_bar;
    double v_bar;
    double kappa;
};

struct RunOptions {
    Start start = Start::from_stationary();
    std::int64_t record_every = 0;        // full snapshots every this many steps (0: none)
    std::vector<std::int64_t> checkpoints;  // extra full snapshots after these step counts
    bool record_scalars = true;
};

template <class State>
struct Trace {
    std::vector<ScalarSnapshot> scalars;
    std::vector<State> snapshots;
    State final_state;
    /// max over steps of |sum of the centred component| / max(1, norm);
    /// zero where it does not apply.
    double max_projection_residual = 0.0;
};

using TabularTrace = Trace<TabularState>;

/// n steps of the tabular estimator on one trajectory X_0..X_n.
TabularTrace run_tabular(const TransitionMatrix& p, const Vector& f, const StepSchedule& sched,
                         const SAConstants& c, std::int64_t n, std::uint64_t seed,
                         const RunOptions& opts = {});

struct StationaryVarState {
    double f_bar = 0.0;
    double v = 0.0;
    std::int64_t k = 0;
};

struct StationaryConstant {
    double c = 1.0;
};

StationaryVarState stationary_var_step(const StationaryVarState& st, double fx,
                                       const StepSchedule& sched, StationaryConstant c);

StationaryVarState iid_variance(std::span<const double> samples, const StepSchedule& sched,
                                StationaryConstant c);

Trace<StationaryVarState> run_stationary(const TransitionMatrix& p, const Vector& f,
                                         const StepSchedule& sched, StationaryConstant c,
                                         std::int64_t n, std::uint64_t seed,
                                         const RunOptions& opts = {});

/// Var_pi(f).
double stationary_variance(const Vector& f, const StationaryDistribution& pi);

struct CovarianceState {
    Vector f_bar;   // d
    Matrix v;       // S x d
    Vector v_bar;   // d
    Matrix c;       // d x d
    std::int64_t k = 0;

    static CovarianceState zero(Index n_states, Index dim);
};

CovarianceState covariance_step(const CovarianceState& st, Index x, Index x_next,
                                const StateFunction& f, const StepSchedule& sched,
                                const SAConstants& c);

Trace<CovarianceState> run_covariance(const TransitionMatrix& p, const StateFunction& f,
                                      const StepSchedule& sched, const SAConstants& c,
                                      std::int64_t n, std::uint64_t seed,
                                      const RunOptions& opts = {});

/// Rejects c3 * alpha_0 > 1 (the kappa recursion would overshoot).
void check_first_step(const StepSchedule& sched, double c3);

}  // namespace avar
