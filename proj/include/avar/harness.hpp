#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "avar/baselines.hpp"
#include "avar/estimators.hpp"
#include "avar/lfa.hpp"
#include "avar/linear_sa.hpp"
#include "avar/rate_fit.hpp"
#include "avar/spec_io.hpp"

namespace avar {

enum class EstimatorKind { Tabular, Stationary, Covariance, LFA, RLTabular, RLLFA, BatchMeans };

const char* to_string(EstimatorKind k);
EstimatorKind parse_estimator(const std::string& name);

/// Unset alpha/h mean "auto": alpha = alpha_scale / delta and h = c1 alpha
/// for the variance estimators.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Diminishing;
    std::optional<double> alpha;
    std::optional<double> h;
    double alpha_scale = 200.0;
};

struct ExperimentConfig {
    std::filesystem::path spec_path;
    EstimatorKind estimator = EstimatorKind::Tabular;
    ScheduleSpec schedule;
    std::optional<SAConstants> constants;  // unset: suggest_constants(delta)
    std::optional<double> stationary_c;    // unset: 1
    std::vector<std::int64_t> n_grid;
    std::int64_t seeds = 1;
    std::uint64_t base_seed = 1;
    std::filesystem::path output;
    unsigned threads = 0;  // 0: hardware concurrency
    double bound_b = 2.0;
    BatchMode batch_mode = BatchMode::NonOverlapping;

    void validate() const;
};

/// Relative spec/output paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct Target {
    std::string label;
    double truth;
};

/// Everything a sweep needs, resolved from the config and the problem spec.
/// RL problems are flattened to their state-action chain.
struct Experiment {
    ExperimentConfig cfg;
    TransitionMatrix p;
    StateFunction f;
    StationaryDistribution pi;
    Start start;
    std::optional<FeatureMatrix> phi;
    std::optional<ProjectionE> proj;
    double delta = 0.0;  // contraction constant used for constants and bounds
    SAConstants constants;
    ConstantsReport constants_report;
    double stationary_c = 1.0;
    StepSchedule schedule;
    std::vector<Target> targets;
    Vector theta_target;  // full limit of the iterate (empty when not defined)
    std::vector<std::string> warnings;

    Vector f0() const { return f.column(0); }
};

Experiment prepare(const ExperimentConfig& cfg);

struct ResultRow {
    std::string estimator;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    double estimate = 0.0;
    double truth = 0.0;
    double sq_err = 0.0;

    bool operator==(const ResultRow&) const = default;
};

struct GridMSE {
    std::string estimator;
    std::int64_t n;
    double mse;
};

struct SweepResult {
    std::vector<ResultRow> rows;          // ordered by n, seed, target
    std::vector<GridMSE> mse;             // per target and grid point
    std::vector<double> full_mse;         // whole-iterate MSE per grid point (NaN if undefined)
    double max_projection_residual = 0.0;
};

SweepResult run_sweep(const Experiment& exp);
SweepResult run_sweep(const ExperimentConfig& cfg);

/// Slopes of mean sq_err against n, one per estimator label.
std::vector<std::pair<std::string, SlopeFit>> fit_slopes(const std::vector<GridMSE>& mse);
std::vector<GridMSE> aggregate(const std::vector<ResultRow>& rows);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

struct BoundRow {
    std::int64_t n;
    double empirical_mse;  // whole-iterate MSE
    double kappa_mse;
    double bound;
};

struct BoundReport {
    BoundParams params;
    std::vector<BoundRow> rows;
    std::vector<std::string> schedule_violations;  // side conditions the schedule misses
    bool dominated = true;       // empirical <= bound at every grid point
    bool monotone = true;        // bound nonincreasing in n
};

/// Runs the sweep and evaluates the finite-time bound at each grid point.
/// Throws SideConditionViolated when the constants are infeasible.
BoundReport bound_report(const Experiment& exp, const SweepResult& sweep);
BoundReport bound_report(const ExperimentConfig& cfg);

}  // namespace avar
