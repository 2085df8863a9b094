#include "pdsim/estimation.hpp"

#include "pdsim/diagnostics.hpp"
#include "pdsim/errors.hpp"

namespace pdsim::estimation {

filters::ObservationPanel observation_panel(ModelKind kind, const Eigen::MatrixXd& prices,
                                            const Eigen::MatrixXd& maturities, double dt)
{
    filters::ObservationPanel panel;
    panel.model_kind = kind;
    panel.dt = dt;
    panel.maturities = maturities;
    if (kind == ModelKind::ss) {
        if ((prices.array() <= 0.0).any())
            throw InvalidInput("Schwartz-Smith prices must be strictly positive", "prices");
        panel.y = prices.array().log().matrix();
    } else {
        panel.y = prices;
    }
    return panel;
}

filters::FilterOutput run_filter(const sim::ModelParams& params,
                                 const ss::MeasurementErrorSpec& errs, FilterKind filter,
                                 const filters::ObservationPanel& panel)
{
    const ModelKind kind = sim::model_kind(params);
    if (!filter_matches_model(kind, filter))
        throw InvalidInput("filter " + std::string(to_string(filter)) +
                               " cannot be paired with model " + std::string(to_string(kind)),
                           "filter");
    if (panel.model_kind != kind)
        throw InvalidInput("panel does not match the model", "model");

    const ss::SSParams& factors = sim::factor_params(params);
    const ss::StateTransition trans = ss::build_transition(factors, panel.dt);
    const filters::FilterInit init = filters::default_init(factors);

    switch (filter) {
    case FilterKind::kf:
        return filters::kalman_filter(trans, std::get<ss::SSParams>(params), panel, errs, init);
    case FilterKind::ekf:
        return filters::extended_kalman_filter(trans, std::get<pd::PDParams>(params), panel, errs,
                                               init);
    case FilterKind::ukf:
        return filters::unscented_kalman_filter(trans, std::get<pd::PDParams>(params), panel,
                                                errs, init);
    }
    throw InvalidInput("unknown filter", "filter");
}

Estimate estimate(const sim::ModelParams& params, const ss::MeasurementErrorSpec& errs,
                  FilterKind filter, const Eigen::MatrixXd& prices,
                  const Eigen::MatrixXd& maturities, double dt, double level)
{
    const ModelKind kind = sim::model_kind(params);
    const filters::ObservationPanel panel = observation_panel(kind, prices, maturities, dt);

    Estimate e;
    e.filter = filter;
    e.level = level;
    e.output = run_filter(params, errs, filter, panel);
    e.fitted_prices = filters::fitted_prices(e.output);
    e.bands = filters::confidence_bands(e.output, level);
    e.rmse = diagnostics::rmse(e.fitted_prices, prices);
    return e;
}

} // namespace pdsim::estimation
