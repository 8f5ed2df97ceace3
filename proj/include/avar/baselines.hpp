#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avar/markov.hpp"
#include "avar/rate_fit.hpp"

namespace avar {

enum class BatchMode { NonOverlapping, Overlapping };

struct BatchConfig {
    std::int64_t batch_size = 1;
    BatchMode mode = BatchMode::NonOverlapping;
};

/// Batch-means estimate of the asymptotic variance. Non-overlapping mode
/// drops the trailing n mod m samples; overlapping mode uses all n - m + 1
/// windows with the usual n m / ((n - m)(n - m + 1)) scaling.
double batch_means(std::span<const double> values, const BatchConfig& cfg);

/// floor(n^(1/3)), computed exactly.
std::int64_t cube_root_batch(std::int64_t n);

struct RateProbe {
    std::vector<std::int64_t> n_grid;
    std::vector<double> mse;
    SlopeFit fit;
};

/// Batch means with m = floor(n^(1/3)) on prefixes of stationary-start runs,
/// one run per seed (seeds base_seed, base_seed + 1, ...).
RateProbe bm_mse_rate_probe(const TransitionMatrix& p, const Vector& f,
                            const std::vector<std::int64_t>& n_grid, std::int64_t seeds,
                            std::uint64_t base_seed = 1, BatchMode mode = BatchMode::NonOverlapping);

}  // namespace avar
