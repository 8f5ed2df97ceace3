#include "avar/rate_fit.hpp"

#include <cmath>
#include <set>

#include "avar/error.hpp"

namespace avar {

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> logs;
    std::set<double> distinct;
    for (const auto& [n, mse] : points) {
        if (!(mse > 0.0) || !(n > 0.0)) continue;
        logs.emplace_back(std::log(n), std::log(mse));
        distinct.insert(n);
    }
    if (distinct.size() < 2)
        throw Error(ErrorKind::DegeneratePoints, "need at least two distinct n with positive MSE");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : logs) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(logs.size());
    my /= static_cast<double>(logs.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : logs) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

std::vector<std::int64_t> default_n_grid() {
    std::vector<std::int64_t> grid;
    for (int i = 0; i <= 4; ++i)
        grid.push_back(static_cast<std::int64_t>(std::llround(std::pow(10.0, 3.0 + 0.5 * i))));
    return grid;
}

}  // namespace avar
