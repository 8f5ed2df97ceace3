#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "avar/markov.hpp"

#ifndef AVAR_DATA_DIR
#define AVAR_DATA_DIR "data"
#endif

namespace avar::testing {

inline std::string data_path(const std::string& name) { return std::string(AVAR_DATA_DIR) + "/" + name; }

// Two-state symmetric chain with switching probability 0.25.
inline TransitionMatrix chain_a() {
    Matrix p(2, 2);
    p << 0.75, 0.25, 0.25, 0.75;
    return TransitionMatrix(p);
}

inline Vector pm_one() { return Eigen::Vector2d(1.0, -1.0); }

// Rows drawn from a flat Dirichlet; every entry is positive so the chain is
// irreducible and aperiodic.
inline TransitionMatrix random_chain(Index n, std::mt19937_64& gen) {
    std::exponential_distribution<double> e(1.0);
    Matrix p(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) p(i, j) = e(gen) + 1e-3;
        p.row(i) /= p.row(i).sum();
    }
    return TransitionMatrix(p);
}

inline Vector random_f(Index n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector f(n);
    for (Index i = 0; i < n; ++i) f(i) = u(gen);
    return f;
}

inline Matrix random_features(Index n, Index d, std::mt19937_64& gen) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix phi(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) phi(i, j) = g(gen);
    return phi / phi.rowwise().norm().maxCoeff();
}

}  // namespace avar::testing
