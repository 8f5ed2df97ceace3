#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <variant>

#include "avar/features.hpp"
#include "avar/markov.hpp"
#include "avar/rl.hpp"

namespace avar {

/// Chain spec file: states, P, f (list, or one row of outputs per state),
/// optional start ("stationary" or a state index), optional Phi (and d).
struct ChainSpec {
    TransitionMatrix p;
    StateFunction f;
    Start start;
    std::optional<FeatureMatrix> phi;
};

/// MDP spec file: states, actions, p (A blocks of S x S rows), r (S x A),
/// mu (S x A), optional start and Phi over the flattened pairs.
struct MDPSpec {
    MDP mdp;
    Policy mu;
    Start start;
    std::optional<FeatureMatrix> phi;
};

using ProblemSpec = std::variant<ChainSpec, MDPSpec>;

/// A spec with an "actions" field is an MDP spec. Throws ParseError for
/// malformed text and the usual validation errors for bad content.
ProblemSpec parse_problem(std::string_view text);
ProblemSpec load_problem(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace avar
