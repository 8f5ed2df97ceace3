#include "avar/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "avar/error.hpp"

namespace avar {

namespace {

void check_state(Index x, Index n) {
    if (x < 0 || x >= n) throw Error(ErrorKind::InvalidState, "state " + std::to_string(x));
}

// Shared loop for the trajectory-driven estimators. `step` advances the state
// on the transition (x, x_next); `scalars` and `residual` observe it.
template <class State, class Step, class Scalars, class Residual>
Trace<State> drive(const TransitionMatrix& p, State st, std::int64_t n, std::uint64_t seed,
                   const RunOptions& opts, Step step, Scalars scalars, Residual residual) {
    if (n < 0) throw Error(ErrorKind::InvalidConfig, "number of steps must be non-negative");
    validate_chain(p).require();
    Trace<State> tr;
    if (opts.record_scalars) tr.scalars.reserve(static_cast<std::size_t>(n));
    std::vector<std::int64_t> cps = opts.checkpoints;
    std::sort(cps.begin(), cps.end());
    auto cp = cps.begin();
    while (cp != cps.end() && *cp <= 0) {
        if (*cp == 0) tr.snapshots.push_back(st);
        ++cp;
    }

    ChainSampler sampler(p, seed);
    Index x = initial_state(sampler, p, opts.start);
    for (std::int64_t k = 0; k < n; ++k) {
        const Index x_next = sampler.next(x);
        st = step(st, x, x_next);
        x = x_next;
        const std::int64_t done = k + 1;
        if (opts.record_scalars) tr.scalars.push_back(scalars(st));
        tr.max_projection_residual = std::max(tr.max_projection_residual, residual(st));
        bool snap = opts.record_every > 0 && done % opts.record_every == 0;
        while (cp != cps.end() && *cp == done) {
            snap = true;
            ++cp;
        }
        if (snap) tr.snapshots.push_back(st);
    }
    tr.final_state = std::move(st);
    return tr;
}

}  // namespace

void check_first_step(const StepSchedule& sched, double c3) {
    sched.validate();
    if (c3 * step_size(sched, 0) > 1.0)
        throw Error(ErrorKind::InvalidSchedule, "c3 * alpha_0 must not exceed 1");
}

TabularState TabularState::zero(Index n_states) {
    TabularState st;
    st.v = Vector::Zero(n_states);
    return st;
}

TabularState tabular_step(const TabularState& st, Index x, Index x_next, const Vector& f,
                          const StepSchedule& sched, const SAConstants& c) {
    const Index n = st.v.size();
    if (f.size() != n) throw Error(ErrorKind::DimensionMismatch, "f does not match V");
    check_state(x, n);
    check_state(x_next, n);
    const double alpha = step_size(sched, st.k);
    const double a3 = c.c3 * alpha;
    const double fx = f(x);
    const double vx = st.v(x);
    const double delta = fx - st.f_bar + st.v(x_next) - vx;
    const double inv_n = 1.0 / static_cast<double>(n);

    TabularState out;
    out.k = st.k + 1;
    out.f_bar = st.f_bar + c.c1 * alpha * (fx - st.f_bar);
    out.v = st.v.array() - alpha * delta * inv_n;
    out.v(x) = vx + alpha * delta * (1.0 - inv_n);
    out.v_bar = st.v_bar + c.c2 * alpha * (vx - st.v_bar);
    const double term = fx * vx + vx * fx - fx * st.v_bar - st.v_bar * fx - fx * fx + fx * st.f_bar;
    out.kappa = (1.0 - a3) * st.kappa + a3 * term;
    return out;
}

TabularTrace run_tabular(const TransitionMatrix& p, const Vector& f, const StepSchedule& sched,
                         const SAConstants& c, std::int64_t n, std::uint64_t seed,
                         const RunOptions& opts) {
    if (f.size() != p.n_states()) throw Error(ErrorKind::DimensionMismatch, "f does not match P");
    c.validate();
    check_first_step(sched, c.c3);
    return drive<TabularState>(
        p, TabularState::zero(p.n_states()), n, seed, opts,
        [&](const TabularState& st, Index x, Index y) { return tabular_step(st, x, y, f, sched, c); },
        [](const TabularState& st) { return ScalarSnapshot{st.k, st.f_bar, st.v_bar, st.kappa}; },
        [](const TabularState& st) { return std::abs(st.v.sum()) / std::max(1.0, st.v.norm()); });
}

StationaryVarState stationary_var_step(const StationaryVarState& st, double fx,
                                       const StepSchedule& sched, StationaryConstant c) {
    const double alpha = step_size(sched, st.k);
    StationaryVarState out;
    out.k = st.k + 1;
    out.f_bar = (1.0 - alpha) * st.f_bar + alpha * fx;
    out.v = (1.0 - c.c * alpha) * st.v + c.c * alpha * (fx * fx - fx * st.f_bar);
    return out;
}

StationaryVarState iid_variance(std::span<const double> samples, const StepSchedule& sched,
                                StationaryConstant c) {
    sched.validate();
    StationaryVarState st;
    for (double x : samples) st = stationary_var_step(st, x, sched, c);
    return st;
}

Trace<StationaryVarState> run_stationary(const TransitionMatrix& p, const Vector& f,
                                         const StepSchedule& sched, StationaryConstant c,
                                         std::int64_t n, std::uint64_t seed,
                                         const RunOptions& opts) {
    if (f.size() != p.n_states()) throw Error(ErrorKind::DimensionMismatch, "f does not match P");
    if (!(c.c > 0.0)) throw Error(ErrorKind::InvalidConstants, "c must be positive");
    sched.validate();
    return drive<StationaryVarState>(
        p, StationaryVarState{}, n, seed, opts,
        [&](const StationaryVarState& st, Index x, Index) {
            return stationary_var_step(st, f(x), sched, c);
        },
        [](const StationaryVarState& st) { return ScalarSnapshot{st.k, st.f_bar, 0.0, st.v}; },
        [](const StationaryVarState&) { return 0.0; });
}

double stationary_variance(const Vector& f, const StationaryDistribution& pi) {
    const double m = pi.mean(f);
    return pi.mean(f.cwiseProduct(f)) - m * m;
}

CovarianceState CovarianceState::zero(Index n_states, Index dim) {
    return {Vector::Zero(dim), Matrix::Zero(n_states, dim), Vector::Zero(dim),
            Matrix::Zero(dim, dim), 0};
}

CovarianceState covariance_step(const CovarianceState& st, Index x, Index x_next,
                                const StateFunction& f, const StepSchedule& sched,
                                const SAConstants& c) {
    const Index n = st.v.rows();
    const Index d = st.v.cols();
    if (f.n_states() != n || f.dim() != d)
        throw Error(ErrorKind::DimensionMismatch, "f does not match the estimator state");
    check_state(x, n);
    check_state(x_next, n);
    const double alpha = step_size(sched, st.k);
    const double a3 = c.c3 * alpha;
    const double inv_n = 1.0 / static_cast<double>(n);
    const Matrix& fv = f.values();

    CovarianceState out;
    out.k = st.k + 1;
    out.f_bar.resize(d);
    out.v.resize(n, d);
    out.v_bar.resize(d);
    out.c.resize(d, d);
    for (Index i = 0; i < d; ++i) {
        const double fx = fv(x, i);
        const double vx = st.v(x, i);
        const double delta = fx - st.f_bar(i) + st.v(x_next, i) - vx;
        out.f_bar(i) = st.f_bar(i) + c.c1 * alpha * (fx - st.f_bar(i));
        out.v.col(i) = st.v.col(i).array() - alpha * delta * inv_n;
        out.v(x, i) = vx + alpha * delta * (1.0 - inv_n);
        out.v_bar(i) = st.v_bar(i) + c.c2 * alpha * (vx - st.v_bar(i));
    }
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            const double fi = fv(x, i), fj = fv(x, j);
            const double vi = st.v(x, i), vj = st.v(x, j);
            const double term = fi * vj + vi * fj - fi * st.v_bar(j) - st.v_bar(i) * fj -
                                fi * fj + fi * st.f_bar(j);
            out.c(i, j) = (1.0 - a3) * st.c(i, j) + a3 * term;
        }
    }
    return out;
}

Trace<CovarianceState> run_covariance(const TransitionMatrix& p, const StateFunction& f,
                                      const StepSchedule& sched, const SAConstants& c,
                                      std::int64_t n, std::uint64_t seed, const RunOptions& opts) {
    if (f.n_states() != p.n_states()) throw Error(ErrorKind::DimensionMismatch, "f does not match P");
    c.validate();
    check_first_step(sched, c.c3);
    return drive<CovarianceState>(
        p, CovarianceState::zero(p.n_states(), f.dim()), n, seed, opts,
        [&](const CovarianceState& st, Index x, Index y) {
            return covariance_step(st, x, y, f, sched, c);
        },
        [](const CovarianceState& st) {
            return ScalarSnapshot{st.k, st.f_bar(0), st.v_bar(0), st.c(0, 0)};
        },
        [](const CovarianceState& st) {
            double worst = 0.0;
            for (Index i = 0; i < st.v.cols(); ++i)
                worst = std::max(worst, std::abs(st.v.col(i).sum()) /
                                            std::max(1.0, st.v.col(i).norm()));
            return worst;
        });
}

}  // namespace avar
