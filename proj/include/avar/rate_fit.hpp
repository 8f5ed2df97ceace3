#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace avar {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// OLS of log(mse) on log(n). Points with mse <= 0 are dropped; throws
/// DegeneratePoints when fewer than two distinct n remain.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// 10^3, 10^3.5, ..., 10^5 rounded to integers.
std::vector<std::int64_t> default_n_grid();

}  // namespace avar
