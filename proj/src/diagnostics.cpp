#include "pdsim/diagnostics.hpp"

#include "pdsim/errors.hpp"
#include "pdsim/estimation.hpp"
#include "pdsim/mathcore.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace pdsim::diagnostics {

namespace {

double trajectory_coverage(const sim::ModelParams& params, const ss::MeasurementErrorSpec& errs,
                           sim::SimConfig config, std::size_t k, double level)
{
    config.seed = math::derive_seed(config.seed, k);
    const sim::SimulatedPanel panel = sim::simulate(params, errs, config);
    const estimation::Estimate est = estimation::estimate(
        params, errs, config.filter_kind, panel.prices, panel.maturities, config.dt, level);
    return band_coverage(panel.prices, est.bands.lower, est.bands.upper);
}

} // namespace

CoverageReport coverage_rate(const sim::ModelParams& params, const ss::MeasurementErrorSpec& errs,
                             const sim::SimConfig& config, std::size_t n_traj, double level,
                             double threshold, const ProgressFn& progress, unsigned threads)
{
    if (n_traj < 1) throw InvalidInput("n_traj must be >= 1", "n_traj");
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must lie in (0, 1)", "level");
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw InvalidInput("threshold must lie in [0, 1]", "threshold");
    sim::validate(config);

    CoverageReport r;
    r.n_traj = n_traj;
    r.level = level;
    r.threshold = threshold;
    r.seed = config.seed;
    r.per_traj_coverage.assign(n_traj, 0.0);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_traj));

    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex mu;
    std::optional<std::size_t> failed_index;
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_traj) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                r.per_traj_coverage[i] = trajectory_coverage(params, errs, config, i + 1, level);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failed_index || i < *failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
                return;
            }
            std::lock_guard lock(mu);
            ++done;
            if (progress) progress(done, n_traj);
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    if (failure) {
        const std::string where = "trajectory " + std::to_string(*failed_index + 1) + ": ";
        try {
            std::rethrow_exception(failure);
        } catch (const NumericalFailure& e) {
            throw NumericalFailure(where + e.what(), e.time_index());
        } catch (const InvalidInput& e) {
            throw InvalidInput(where + e.what(), e.field());
        }
    }

    const auto passing = std::count_if(r.per_traj_coverage.begin(), r.per_traj_coverage.end(),
                                       [level](double c) { return c > level; });
    r.coverage_rate = static_cast<double>(passing) / static_cast<double>(n_traj);
    r.pass = r.coverage_rate > threshold;
    return r;
}

double band_coverage(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& lower,
                     const Eigen::MatrixXd& upper)
{
    if (observed.rows() != lower.rows() || observed.cols() != lower.cols() ||
        observed.rows() != upper.rows() || observed.cols() != upper.cols())
        throw InvalidInput("band and observation shapes differ");
    if (observed.size() == 0) throw InvalidInput("empty observation panel");
    const auto inside = ((observed.array() >= lower.array()) && (observed.array() <= upper.array()))
                            .count();
    return static_cast<double>(inside) / static_cast<double>(observed.size());
}

Eigen::VectorXd rmse(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth)
{
    if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
        throw InvalidInput("estimated and truth shapes differ", "shape");
    if (estimated.rows() == 0) throw InvalidInput("empty input", "shape");
    return ((estimated - truth).array().square().colwise().sum() /
            static_cast<double>(estimated.rows()))
        .sqrt()
        .transpose();
}

nlohmann::json to_json(const CoverageReport& r)
{
    return {{"n_traj", r.n_traj},
            {"seed", r.seed},
            {"level", r.level},
            {"threshold", r.threshold},
            {"coverage_rate", r.coverage_rate},
            {"pass", r.pass},
            {"per_traj_coverage", r.per_traj_coverage}};
}

std::string to_json_text(const CoverageReport& r)
{
    return to_json(r).dump(2) + "\n";
}

} // namespace pdsim::diagnostics
