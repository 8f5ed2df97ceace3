#include "avar/rl.hpp"

#include <cmath>
#include <string>

#include "avar/error.hpp"

namespace avar {

MDP::MDP(std::vector<Matrix> p, Matrix r) : p_(std::move(p)), r_(std::move(r)) {
    const Index s = r_.rows();
    const Index a = r_.cols();
    if (s == 0 || a == 0 || static_cast<Index>(p_.size()) != a)
        throw Error(ErrorKind::DimensionMismatch, "need one S x S kernel per action");
    for (Index ai = 0; ai < a; ++ai) {
        const Matrix& k = p_[static_cast<std::size_t>(ai)];
        if (k.rows() != s || k.cols() != s)
            throw Error(ErrorKind::DimensionMismatch, "kernel " + std::to_string(ai) + " is not S x S");
        const ChainReport rep = validate_chain(k);
        if (!rep.stochastic)
            throw Error(ErrorKind::NonStochastic,
                        "kernel of action " + std::to_string(ai) + " is not row-stochastic");
    }
    r_max_ = r_.cwiseAbs().maxCoeff();
}

Policy::Policy(Matrix mu) : mu_(std::move(mu)) {
    if (mu_.size() == 0)
        throw Error(ErrorKind::DimensionMismatch, "empty policy");
    for (Index s = 0; s < mu_.rows(); ++s) {
        const auto row = mu_.row(s);
        if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > TransitionMatrix::kRowTolerance)
            throw Error(ErrorKind::NonStochastic, "policy row " + std::to_string(s) +
                                                      " is not a distribution");
    }
}

Policy Policy::uniform(Index n_states, Index n_actions) {
    return Policy(Matrix::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions)));
}

InducedChain induced_chain(const MDP& mdp, const Policy& mu) {
    const Index s = mdp.n_states();
    const Index a = mdp.n_actions();
    const Matrix& m = mu.probs();
    if (m.rows() != s || m.cols() != a)
        throw Error(ErrorKind::DimensionMismatch, "policy must be S x A");

    Matrix p_mu = Matrix::Zero(s, s);
    for (Index ai = 0; ai < a; ++ai) p_mu += m.col(ai).asDiagonal() * mdp.kernel(ai);
    Matrix p2(s * a, s * a);
    for (Index a1 = 0; a1 < a; ++a1)
        for (Index s1 = 0; s1 < s; ++s1)
            for (Index a2 = 0; a2 < a; ++a2)
                for (Index s2 = 0; s2 < s; ++s2)
                    p2(mdp.pair_index(s1, a1), mdp.pair_index(s2, a2)) =
                        mdp.kernel(a1)(s1, s2) * m(s2, a2);

    for (const auto* k : {&p_mu, &p2}) {
        const ChainReport rep = validate_chain(*k);
        if (!rep.ok()) {
            try {
                rep.require();
            } catch (const Error& e) {
                throw Error(ErrorKind::PolicyInducesInvalidChain,
                            std::string(k == &p_mu ? "state chain: " : "state-action chain: ") +
                                e.what());
            }
        }
    }

    InducedChain ic{TransitionMatrix(p_mu), TransitionMatrix(p2), Vector(s * a), {}, {}};
    ic.pi_mu = stationary_distribution(ic.p_mu);
    ic.d_mu.pi.resize(s * a);
    for (Index ai = 0; ai < a; ++ai)
        for (Index si = 0; si < s; ++si) {
            ic.r_vec(mdp.pair_index(si, ai)) = mdp.rewards()(si, ai);
            ic.d_mu.pi(mdp.pair_index(si, ai)) = ic.pi_mu.pi(si) * m(si, ai);
        }
    const StationaryDistribution direct = stationary_distribution(ic.p2);
    if ((direct.pi - ic.d_mu.pi).cwiseAbs().maxCoeff() > 1e-10)
        throw Error(ErrorKind::SingularSystem, "d_mu disagrees with the stationary law of P2");
    return ic;
}

double average_reward_oracle(const MDP& mdp, const Policy& mu) {
    const InducedChain ic = induced_chain(mdp, mu);
    return ic.d_mu.mean(ic.r_vec);
}

double kappa_mu(const MDP& mdp, const Policy& mu) {
    const InducedChain ic = induced_chain(mdp, mu);
    return exact_kappa(ic.p2, ic.r_vec, ic.d_mu);
}

TabularTrace run_policy_eval_tabular(const MDP& mdp, const Policy& mu, const StepSchedule& sched,
                                     const SAConstants& c, std::int64_t n, std::uint64_t seed,
                                     const RunOptions& opts) {
    const InducedChain ic = induced_chain(mdp, mu);
    return run_tabular(ic.p2, ic.r_vec, sched, c, n, seed, opts);
}

LFATrace run_policy_eval_lfa(const MDP& mdp, const Policy& mu, const FeatureMatrix& phi_sa,
                             const StepSchedule& sched, const SAConstants& c, std::int64_t n,
                             std::uint64_t seed, const RunOptions& opts) {
    const InducedChain ic = induced_chain(mdp, mu);
    return run_lfa(ic.p2, ic.r_vec, phi_sa, build_projection(phi_sa), sched, c, n, seed, opts);
}

}  // namespace avar
