#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "avar/linalg.hpp"

namespace avar {

/// Row-stochastic square matrix. Construction checks shape, entries in
/// [0, 1] and unit row sums (1e-12); it does not check ergodicity.
class TransitionMatrix {
public:
    static constexpr double kRowTolerance = 1e-12;

    explicit TransitionMatrix(Matrix probs);

    Index n_states() const { return probs_.rows(); }
    const Matrix& probs() const { return probs_; }
    double operator()(Index i, Index j) const { return probs_(i, j); }

private:
    Matrix probs_;
};

struct ChainReport {
    bool stochastic = true;
    bool irreducible = true;
    bool aperiodic = true;
    Index period = 1;
    std::vector<Index> bad_rows;
    std::vector<Index> unreachable;

    bool ok() const { return stochastic && irreducible && aperiodic; }
    /// Throws the first failure (NonStochastic, Reducible, Periodic).
    void require(bool allow_periodic = false) const;
};

ChainReport validate_chain(const Matrix& probs);
ChainReport validate_chain(const TransitionMatrix& p);

struct OracleOptions {
    bool allow_periodic = false;
};

/// Values f(x) over the state space; several columns for vector-valued f.
class StateFunction {
public:
    StateFunction(Matrix values);
    StateFunction(const Vector& values);

    Index n_states() const { return values_.rows(); }
    Index dim() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    Vector column(Index i) const { return values_.col(i); }
    double f_max() const { return f_max_; }
    /// The convergence guarantees assume sup|f| <= 1.
    bool exceeds_unit_bound() const { return f_max_ > 1.0; }

private:
    Matrix values_;
    double f_max_;
};

struct StationaryDistribution {
    Vector pi;

    Matrix d_pi() const { return pi.asDiagonal(); }
    double mean(const Vector& f) const { return pi.dot(f); }
};

StationaryDistribution stationary_distribution(const TransitionMatrix& p,
                                               OracleOptions opts = {});

struct PoissonSolution {
    Vector v_star;  // normalized so that sum(v_star) == 0
    double f_bar;
};

PoissonSolution solve_poisson(const TransitionMatrix& p, const Vector& f,
                              const StationaryDistribution& pi);

/// max_x |(f - f_bar) - (V - PV)|(x)
double poisson_residual(const TransitionMatrix& p, const Vector& f,
                        const StationaryDistribution& pi, const Vector& v);

enum class KappaMethod { Poisson, Difference };

/// Asymptotic variance of the ergodic average of f.
double exact_kappa(const TransitionMatrix& p, const Vector& f,
                   const StationaryDistribution& pi,
                   KappaMethod method = KappaMethod::Poisson);

/// E_pi[2 f V - 2 f Vbar - f^2 + f fbar] with Vbar = pi^T V. Equals kappa for
/// every V in V* + c 1.
double kappa_from_value(const Vector& f, const StationaryDistribution& pi,
                        const Vector& v);

/// Var_pi(f) + 2 sum_{j=1..N} Cov(f(X_0), f(X_j)).
double exact_kappa_truncated(const TransitionMatrix& p, const Vector& f,
                             const StationaryDistribution& pi, std::int64_t n_lags);

/// Asymptotic covariance matrix of a vector-valued f (one column per output).
Matrix exact_covariance(const TransitionMatrix& p, const StateFunction& f,
                        const StationaryDistribution& pi);

/// min over unit v orthogonal to 1 of v^T D_pi (I - P) v.
double delta_one(const TransitionMatrix& p, const StationaryDistribution& pi);

struct Start {
    bool stationary = true;
    Index state = 0;

    static Start from_stationary() { return {true, 0}; }
    static Start at(Index s) { return {false, s}; }
};

/// Inverse-CDF sampler over the rows of P. Uniforms come from the top 53 bits
/// of mt19937_64 so trajectories do not depend on the standard library.
class ChainSampler {
public:
    ChainSampler(const TransitionMatrix& p, std::uint64_t seed);

    double uniform();
    Index next(Index x);
    Index draw(const Vector& probs);

private:
    Index draw_row(const double* cdf, Index n);

    Index n_;
    Matrix cdf_;  // row-major cumulative rows, stored transposed
    std::mt19937_64 gen_;
};

struct SimulateOptions {
    bool validate = true;
};

struct Trajectory {
    std::vector<Index> states;
    std::uint64_t seed = 0;
    Start start;
};

/// n states X_0..X_{n-1}.
Trajectory simulate(const TransitionMatrix& p, Start start, std::int64_t n,
                    std::uint64_t seed, SimulateOptions opts = {});

/// Draws X_0 for a run: a fixed state, or a draw from pi using the sampler.
Index initial_state(ChainSampler& sampler, const TransitionMatrix& p, Start start,
                    OracleOptions opts = {});

}  // namespace avar
