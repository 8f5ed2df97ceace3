#pragma once

#include <cstdint>

#include "avar/estimators.hpp"
#include "avar/features.hpp"
#include "avar/linear_sa.hpp"

namespace avar {

struct LFAState {
    double f_bar = 0.0;
    Vector theta;
    double v_tilde = 0.0;
    double kappa = 0.0;
    std::int64_t k = 0;

    static LFAState zero(Index dim);
};

LFAState lfa_step(const LFAState& st, Index x, Index x_next, const Vector& f,
                  const FeatureMatrix& phi, const ProjectionE& proj, const StepSchedule& sched,
                  const SAConstants& c);

using LFATrace = Trace<LFAState>;

/// max_projection_residual tracks |theta^T theta_e| / max(1, |theta|).
LFATrace run_lfa(const TransitionMatrix& p, const Vector& f, const FeatureMatrix& phi,
                 const ProjectionE& proj, const StepSchedule& sched, const SAConstants& c,
                 std::int64_t n, std::uint64_t seed, const RunOptions& opts = {});

/// min over unit theta in E of theta^T Phi^T D_pi (I - P) Phi theta.
double delta_two(const TransitionMatrix& p, const StationaryDistribution& pi,
                 const FeatureMatrix& phi, const ProjectionE& proj);

struct ThetaStar {
    Vector theta;
    double v_tilde = 0.0;
    double kappa_star = 0.0;
};

/// Unique theta in E solving the projected Poisson equation, and the limits
/// of the remaining LFA components.
ThetaStar theta_star(const TransitionMatrix& p, const StationaryDistribution& pi,
                     const FeatureMatrix& phi, const ProjectionE& proj, const Vector& f);

/// min over theta, c of ||Phi theta + c 1 - V*||_{D_pi}.
double min_approx_error(const TransitionMatrix& p, const StationaryDistribution& pi,
                        const FeatureMatrix& phi, const Vector& f);

struct ApproxErrorCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// (kappa* - kappa)^2 <= 16 eps^2 / (1 - lambda^2). lambda is not known
/// constructively, so this is a diagnostic.
ApproxErrorCheck approx_error_check(double kappa_star, double kappa, double eps, double lambda);

/// Full iterate [f_bar, theta, V_tilde, kappa] of the LFA estimator.
Vector stack(const LFAState& st);

}  // namespace avar
