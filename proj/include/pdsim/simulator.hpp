#pragma once

#include "pdsim/kinds.hpp"
#include "pdsim/pd_model.hpp"
#include "pdsim/ss_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pdsim::sim {

/// Parameters of whichever model generates the data.
using ModelParams = std::variant<ss::SSParams, pd::PDParams>;

ModelKind model_kind(const ModelParams& p);
const ss::SSParams& factor_params(const ModelParams& p);
std::vector<std::string> validate(const ModelParams& p);

struct SimConfig {
    int n_obs = 2;
    int m = 1;
    double dt = 1.0 / 360.0;
    std::uint64_t seed = 0;
    ModelKind model_kind = ModelKind::ss;
    FilterKind filter_kind = FilterKind::kf;
};

/// Throws InvalidInput on n_obs < 2, m < 1, dt <= 0 or a model/filter
/// pairing other than SS+KF, PD+EKF, PD+UKF.
void validate(const SimConfig& c);

struct SimulatedPanel {
    ModelKind model_kind = ModelKind::ss;
    Eigen::MatrixXd states;     ///< n x 2 true (chi, xi)
    Eigen::MatrixXd prices;     ///< n x m, price space
    Eigen::MatrixXd maturities; ///< n x m, years
    Eigen::MatrixXd log_prices; ///< n x m for SS, empty for PD
    std::uint64_t seed = 0;
};

/// Length in years of one contract month (30 days on a 360-day year).
inline constexpr double contract_month = 30.0 / 360.0;

/// Rolling monthly contracts: tau(t, j) = (30 j - (t mod 30)) / 360 for
/// observation t = 0..n-1 and contract j = 1..m.
Eigen::MatrixXd maturity_grid(const SimConfig& config);

/// Starts at the long-run mean (0, mu_xi / gamma). Process noise is drawn
/// from sub-stream 0 of the seed and measurement noise from sub-stream 1.
SimulatedPanel simulate(const ModelParams& params, const ss::MeasurementErrorSpec& errs,
                        const SimConfig& config);

SimulatedPanel regenerate(const ModelParams& params, const ss::MeasurementErrorSpec& errs,
                          SimConfig config, std::uint64_t new_seed);

} // namespace pdsim::sim
