#pragma once

#include <cstdint>
#include <vector>

#include "avar/estimators.hpp"
#include "avar/lfa.hpp"
#include "avar/markov.hpp"

namespace avar {

/// Finite average-reward MDP. p[a](s, s') is the probability of s -> s'
/// under action a; r(s, a) the reward.
class MDP {
public:
    MDP(std::vector<Matrix> p, Matrix r);

    Index n_states() const { return r_.rows(); }
    Index n_actions() const { return r_.cols(); }
    const Matrix& kernel(Index a) const { return p_[static_cast<std::size_t>(a)]; }
    const Matrix& rewards() const { return r_; }
    double r_max() const { return r_max_; }
    bool reward_exceeds_unit_bound() const { return r_max_ > 1.0; }

    /// Flattened state-action index (fixed convention a * S + s).
    Index pair_index(Index s, Index a) const { return a * n_states() + s; }

private:
    std::vector<Matrix> p_;
    Matrix r_;
    double r_max_;
};

/// Row-stochastic S x A matrix of action probabilities.
class Policy {
public:
    explicit Policy(Matrix mu);

    const Matrix& probs() const { return mu_; }

    static Policy uniform(Index n_states, Index n_actions);

private:
    Matrix mu_;
};

struct InducedChain {
    TransitionMatrix p_mu;   // S x S chain of states
    TransitionMatrix p2;     // (S*A) x (S*A) chain of state-action pairs
    Vector r_vec;            // reward per flattened pair
    StationaryDistribution pi_mu;
    StationaryDistribution d_mu;  // pi_mu(s) mu(a|s)
};

/// Throws PolicyInducesInvalidChain when P_mu or P2 fails validation.
InducedChain induced_chain(const MDP& mdp, const Policy& mu);

double average_reward_oracle(const MDP& mdp, const Policy& mu);

/// Asymptotic variance of the reward process under mu.
double kappa_mu(const MDP& mdp, const Policy& mu);

TabularTrace run_policy_eval_tabular(const MDP& mdp, const Policy& mu, const StepSchedule& sched,
                                     const SAConstants& c, std::int64_t n, std::uint64_t seed,
                                     const RunOptions& opts = {});

LFATrace run_policy_eval_lfa(const MDP& mdp, const Policy& mu, const FeatureMatrix& phi_sa,
                             const StepSchedule& sched, const SAConstants& c, std::int64_t n,
                             std::uint64_t seed, const RunOptions& opts = {});

}  // namespace avar
