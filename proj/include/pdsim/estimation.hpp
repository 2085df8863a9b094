#pragma once

#include "pdsim/filters.hpp"
#include "pdsim/simulator.hpp"

#include <Eigen/Dense>

namespace pdsim::estimation {

/// Observation panel from price-space data; SS prices are log-transformed.
filters::ObservationPanel observation_panel(ModelKind kind, const Eigen::MatrixXd& prices,
                                            const Eigen::MatrixXd& maturities, double dt);

/// Runs the requested filter at the given (true) parameters from the
/// stationary prior. Throws InvalidInput on a model/filter mismatch.
filters::FilterOutput run_filter(const sim::ModelParams& params,
                                 const ss::MeasurementErrorSpec& errs, FilterKind filter,
                                 const filters::ObservationPanel& panel);

struct Estimate {
    FilterKind filter = FilterKind::kf;
    double level = 0.95;
    filters::FilterOutput output;
    Eigen::MatrixXd fitted_prices; ///< n x m, price space
    filters::Bands bands;          ///< price space
    Eigen::VectorXd rmse;          ///< per contract, fitted vs observed prices
};

Estimate estimate(const sim::ModelParams& params, const ss::MeasurementErrorSpec& errs,
                  FilterKind filter, const Eigen::MatrixXd& prices,
                  const Eigen::MatrixXd& maturities, double dt, double level = 0.95);

} // namespace pdsim::estimation
