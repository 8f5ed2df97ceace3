#include "avar/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avar/error.hpp"

namespace avar {

double batch_means(std::span<const double> values, const BatchConfig& cfg) {
    const auto n = static_cast<std::int64_t>(values.size());
    const std::int64_t m = cfg.batch_size;
    if (m < 1) throw Error(ErrorKind::InvalidConfig, "batch size must be positive");
    if (n < 2 * m) throw Error(ErrorKind::TooShort, "need at least two batches of size " +
                                                        std::to_string(m));
    // Centring first keeps the result shift invariant in floating point.
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    std::vector<double> g(values.begin(), values.end());
    for (double& x : g) x -= mean;
    const double md = static_cast<double>(m);

    if (cfg.mode == BatchMode::NonOverlapping) {
        const std::int64_t b = n / m;
        std::vector<double> z(static_cast<std::size_t>(b));
        for (std::int64_t i = 0; i < b; ++i) {
            const auto first = g.begin() + i * m;
            z[static_cast<std::size_t>(i)] = std::accumulate(first, first + m, 0.0) / std::sqrt(md);
        }
        const double zbar = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(b);
        double ss = 0.0;
        for (double v : z) ss += (v - zbar) * (v - zbar);
        return ss / static_cast<double>(b - 1);
    }

    // Window means against the overall (already removed) mean.
    double window = std::accumulate(g.begin(), g.begin() + m, 0.0);
    double ss = (window / md) * (window / md);
    for (std::int64_t j = m; j < n; ++j) {
        window += g[static_cast<std::size_t>(j)] - g[static_cast<std::size_t>(j - m)];
        ss += (window / md) * (window / md);
    }
    const double nd = static_cast<double>(n);
    return nd * md / ((nd - md) * (nd - md + 1.0)) * ss;
}

std::int64_t cube_root_batch(std::int64_t n) {
    auto m = static_cast<std::int64_t>(std::cbrt(static_cast<double>(n)));
    while ((m + 1) * (m + 1) * (m + 1) <= n) ++m;
    while (m > 1 && m * m * m > n) --m;
    return std::max<std::int64_t>(m, 1);
}

RateProbe bm_mse_rate_probe(const TransitionMatrix& p, const Vector& f,
                            const std::vector<std::int64_t>& n_grid, std::int64_t seeds,
                            std::uint64_t base_seed, BatchMode mode) {
    if (n_grid.empty() || seeds < 1) throw Error(ErrorKind::InvalidConfig, "empty grid or no seeds");
    const StationaryDistribution pi = stationary_distribution(p);
    const double truth = exact_kappa(p, f, pi);
    const std::int64_t n_max = *std::max_element(n_grid.begin(), n_grid.end());

    RateProbe probe;
    probe.n_grid = n_grid;
    probe.mse.assign(n_grid.size(), 0.0);
    std::vector<double> values(static_cast<std::size_t>(n_max));
    for (std::int64_t s = 0; s < seeds; ++s) {
        const Trajectory t = simulate(p, Start::from_stationary(), n_max, base_seed + s);
        for (std::size_t k = 0; k < values.size(); ++k) values[k] = f(t.states[k]);
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            const std::span<const double> prefix(values.data(), static_cast<std::size_t>(n_grid[i]));
            const double est = batch_means(prefix, {cube_root_batch(n_grid[i]), mode});
            probe.mse[i] += (est - truth) * (est - truth);
        }
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        probe.mse[i] /= static_cast<double>(seeds);
        pts.emplace_back(static_cast<double>(n_grid[i]), probe.mse[i]);
    }
    probe.fit = fit_loglog_slope(pts);
    return probe;
}

}  // namespace avar
