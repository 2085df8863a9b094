#pragma once

#include "pdsim/simulator.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace pdsim::diagnostics {

struct CoverageReport {
    std::size_t n_traj = 0;
    std::vector<double> per_traj_coverage;
    double coverage_rate = 0.0;
    bool pass = false;
    double level = 0.95;
    double threshold = 0.95;
    std::uint64_t seed = 0;
};

/// Called with the number of finished trajectories; may be called from
/// worker threads, but never concurrently.
using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Share of simulated trajectories whose observed prices fall inside the
/// filter's level-bands strictly more often than `level`. Trajectory k
/// (1-based) is simulated with seed derive_seed(config.seed, k), so the
/// report does not depend on evaluation order or thread count. pass is
/// coverage_rate > threshold (strict).
CoverageReport coverage_rate(const sim::ModelParams& params, const ss::MeasurementErrorSpec& errs,
                             const sim::SimConfig& config, std::size_t n_traj,
                             double level = 0.95, double threshold = 0.95,
                             const ProgressFn& progress = {}, unsigned threads = 0);

/// Fraction of entries of `observed` inside [lower, upper].
double band_coverage(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& lower,
                     const Eigen::MatrixXd& upper);

/// Per-column root-mean-square error.
Eigen::VectorXd rmse(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth);

nlohmann::json to_json(const CoverageReport& r);

/// Exact bytes of coverage.json: to_json(r) indented by two spaces plus a
/// trailing newline. The service returns the same bytes.
std::string to_json_text(const CoverageReport& r);

} // namespace pdsim::diagnostics
