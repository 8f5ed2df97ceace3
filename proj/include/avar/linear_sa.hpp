#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avar/features.hpp"
#include "avar/markov.hpp"

namespace avar {

enum class ScheduleKind { Constant, Diminishing };

/// alpha_k = alpha (constant) or alpha / (k + h) (diminishing).
struct StepSchedule {
    ScheduleKind kind = ScheduleKind::Diminishing;
    double alpha = 1.0;
    double h = 2.0;

    static StepSchedule constant(double alpha) { return {ScheduleKind::Constant, alpha, 0.0}; }
    static StepSchedule diminishing(double alpha, double h) {
        return {ScheduleKind::Diminishing, alpha, h};
    }
    void validate() const;
};

double step_size(const StepSchedule& s, std::int64_t k);

struct SAConstants {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;

    void validate() const;
};

/// Iterate layout: [f_bar, theta (d entries), V_bar, kappa].
struct UpdatePair {
    Matrix a;
    Vector b;
};

/// theta + alpha (A theta + b)
Vector sa_step(const Vector& theta, const UpdatePair& u, double alpha);

UpdatePair build_update(Index x, Index x_next, const Vector& f, const FeatureMatrix& phi,
                        const SAConstants& c, const ProjectionE& proj);

/// Stationary averages of build_update over X ~ pi, X' ~ P(X, .).
UpdatePair average_matrices(const TransitionMatrix& p, const StationaryDistribution& pi,
                            const Vector& f, const FeatureMatrix& phi, const SAConstants& c,
                            const ProjectionE& proj);

/// min over unit x in R x E x R x R of -x^T A x.
double contraction_margin(const Matrix& a, const ProjectionE& proj);

/// max(1, max over transitions with P(x, x') > 0 of ||A(y)||_2, ||b(y)||_2).
double update_norm_bound(const TransitionMatrix& p, const Vector& f, const FeatureMatrix& phi,
                         const SAConstants& c, const ProjectionE& proj);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool empty() const { return lo > hi; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    double mid() const { return 0.5 * (lo + hi); }
};

struct ConstantsReport {
    double delta = 0.0;
    double c1_min = 0.0;
    Interval c3_range;
    Interval c2_range;  // depends on c3; empty when the square root is undefined
    bool c1_ok = false;
    bool c2_ok = false;
    bool c3_ok = false;
    std::vector<std::string> violations;

    bool ok() const { return c1_ok && c2_ok && c3_ok; }
    /// Throws InvalidConstants naming the violated constraints.
    void require() const;
};

/// Feasibility of (c1, c2, c3) for a contraction constant delta.
ConstantsReport validate_constants(double delta, const SAConstants& c);

/// c1 at its lower bound, c3 at the middle of its interval, c2 at the middle
/// of its interval intersected with (0, inf).
SAConstants suggest_constants(double delta);

double eta(const SAConstants& c);

/// Generic finite-time bound E||Theta_n - Theta*||^2 <= ... for a linear
/// recursion with contraction rate gamma2 and update norm H.
struct BoundParams {
    double gamma2 = 1.0;
    double h_norm = 1.0;
    double theta_norm = 0.0;
    double b = 2.0;

    double psi1() const { return 3.0 * (1.0 + theta_norm) * (1.0 + theta_norm); }
    double psi2() const { return 112.0 * b * (1.0 + theta_norm) * (1.0 + theta_norm); }
};

/// Variance estimators: rate delta/20 and H = eta(c).
BoundParams variance_bound_params(double delta, const SAConstants& c, double theta_norm,
                                  double b = 2.0);

/// Stationary variance estimator: rate gamma and H = sqrt(1 + c^2 (1 + f_bar^2)).
BoundParams stationary_bound_params(double gamma, double c, double f_bar, double theta_norm,
                                    double b = 2.0);

/// Largest c allowed for the stationary estimator at the given gamma.
double stationary_c_limit(double gamma, double f_bar);

/// Names of the schedule side conditions that do not hold.
std::vector<std::string> bound_side_conditions(const BoundParams& bp, const StepSchedule& s);

/// Evaluates the bound formula without checking side conditions. Returns
/// +inf where the formula is undefined (diminishing with alpha*gamma2 <= 2).
double bound_value(const BoundParams& bp, const StepSchedule& s, std::int64_t n);

/// Same as bound_value but throws SideConditionViolated first.
double theorem_bound(const BoundParams& bp, const StepSchedule& s, std::int64_t n);

/// Smallest integer h satisfying the diminishing-schedule side conditions.
double minimal_h(const BoundParams& bp, double alpha);

}  // namespace avar
