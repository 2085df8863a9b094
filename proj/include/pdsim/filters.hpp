#pragma once

#include "pdsim/kinds.hpp"
#include "pdsim/pd_model.hpp"
#include "pdsim/ss_model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace pdsim::filters {

/// Observed panel: y is log prices for SS and raw prices for PD. Rows are
/// observation times, columns are contracts.
struct ObservationPanel {
    Eigen::MatrixXd y;
    Eigen::MatrixXd maturities;
    double dt = 1.0 / 360.0;
    ModelKind model_kind = ModelKind::ss;
};

struct FilterInit {
    Eigen::Vector2d a0 = Eigen::Vector2d::Zero();
    Eigen::Matrix2d P0 = Eigen::Matrix2d::Identity();
};

/// Prior at the stationary law of the factors.
FilterInit default_init(const ss::SSParams& p);

struct FilterOutput {
    ModelKind model_kind = ModelKind::ss;
    Eigen::MatrixXd a_pred;                  ///< n x 2, E(x_t | F_{t-1})
    std::vector<Eigen::Matrix2d> P_pred;     ///< Cov(x_t | F_{t-1})
    Eigen::MatrixXd a_filt;                  ///< n x 2, E(x_t | F_t)
    std::vector<Eigen::Matrix2d> P_filt;     ///< Cov(x_t | F_t)
    Eigen::MatrixXd y_fit;                   ///< n x m, h(a_t), measurement space
    Eigen::MatrixXd innovation;              ///< n x m, y_t - E(y_t | F_{t-1})
    std::vector<Eigen::MatrixXd> innovation_cov;
    double loglik = 0.0;
};

using LinearMeasurementFn = std::function<ss::LinearMeasurement(const Eigen::VectorXd& taus)>;

/// Kalman filter for any measurement y_t = d_t + F_t x_t + v_t whose
/// (d_t, F_t) depend on that row's maturities.
FilterOutput linear_kalman_filter(const ss::StateTransition& trans,
                                  const LinearMeasurementFn& measurement,
                                  const ObservationPanel& panel,
                                  const Eigen::MatrixXd& sigma_v, const FilterInit& init);

FilterOutput kalman_filter(const ss::StateTransition& trans, const ss::SSParams& params,
                           const ObservationPanel& panel, const ss::MeasurementErrorSpec& errs,
                           const FilterInit& init);

/// EKF with the measurement linearized at the predicted state. The state
/// equation is linear so its Jacobian is E exactly.
FilterOutput extended_kalman_filter(const ss::StateTransition& trans, const pd::PDParams& params,
                                    const ObservationPanel& panel,
                                    const ss::MeasurementErrorSpec& errs, const FilterInit& init);

FilterOutput unscented_kalman_filter(const ss::StateTransition& trans, const pd::PDParams& params,
                                     const ObservationPanel& panel,
                                     const ss::MeasurementErrorSpec& errs, const FilterInit& init);

/// Unscented transform tuning for the 2-dimensional state.
struct UnscentedWeights {
    static constexpr int n_points = 5;
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 1.0;
    double lambda = 1.0;
    Eigen::Matrix<double, n_points, 1> mean;
    Eigen::Matrix<double, n_points, 1> cov;
};

UnscentedWeights unscented_weights(double alpha = 1.0, double beta = 2.0, double kappa = 1.0);

/// Columns: mean, mean + sqrt(2 + lambda) L_i, mean - sqrt(2 + lambda) L_i,
/// with L the lower Cholesky factor of cov.
Eigen::Matrix<double, 2, 5> sigma_points(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                         const UnscentedWeights& w);

struct Bands {
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
};

/// Two-sided standard normal quantile z with P(|Z| <= z) = level.
double two_sided_z(double level);

/// y_fit +/- z * sqrt(diag S_t). SS bands are built in log space and
/// exponentiated, so they are reported in price space for both models.
Bands confidence_bands(const FilterOutput& out, double level);

/// Fitted values in price space (exp(y_fit) for SS).
Eigen::MatrixXd fitted_prices(const FilterOutput& out);

} // namespace pdsim::filters
