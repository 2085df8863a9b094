#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pdsim::ss {

/// Schwartz-Smith parameters. Time is measured in years.
struct SSParams {
    double kappa = 0.0;      ///< short-term mean reversion speed
    double gamma = 0.0;      ///< long-term mean reversion speed
    double mu_xi = 0.0;      ///< long-term drift
    double sigma_chi = 0.0;
    double sigma_xi = 0.0;
    double rho = 0.0;        ///< correlation of the two Brownian drivers
    double lambda_chi = 0.0; ///< risk premium, short-term factor
    double lambda_xi = 0.0;  ///< risk premium, long-term factor
};

/// Throws InvalidInput (field set) on hard violations: positivity of kappa,
/// gamma and both volatilities, |rho| < 1, finiteness. Returns soft warnings
/// for kappa/gamma outside (0, 3] and kappa <= gamma.
std::vector<std::string> validate(const SSParams& p);

/// Measurement error standard deviations, evenly spaced from the first to the
/// last contract.
struct MeasurementErrorSpec {
    int m = 1;
    double sigma_first = 0.0;
    double sigma_last = 0.0;

    /// sigma_1..sigma_m. With m == 1 only sigma_first is used.
    Eigen::VectorXd sigmas() const;
    /// Diagonal measurement covariance.
    Eigen::MatrixXd covariance() const;
};

std::vector<std::string> validate(const MeasurementErrorSpec& e);

/// x_t = c + E x_{t-1} + w_t, w_t ~ N(0, Sigma_w), under the real measure.
struct StateTransition {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    Eigen::Matrix2d E = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d Sigma_w = Eigen::Matrix2d::Zero();
    double dt = 0.0;
};

/// (1 - exp(-rate * t)) / rate, with the rate -> 0 limit used below 1e-8.
double decay_integral(double rate, double t);

StateTransition build_transition(const SSParams& p, double dt);

/// Deterministic part of the log futures price at time to maturity tau.
double a_function(const SSParams& p, double tau);

/// Stationary law of the factors: mean (0, mu_xi / gamma) and covariance
/// [s_chi^2/2k, r s_chi s_xi/(k+g); ., s_xi^2/2g].
Eigen::Vector2d stationary_mean(const SSParams& p);
Eigen::Matrix2d stationary_covariance(const SSParams& p);

/// Linear measurement of log futures prices y = d + F x.
struct LinearMeasurement {
    Eigen::VectorXd d;
    Eigen::MatrixXd F; ///< m x 2
};

LinearMeasurement build_measurement(const SSParams& p, const Eigen::VectorXd& taus);

} // namespace pdsim::ss
