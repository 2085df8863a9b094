#include "pdsim/simulator.hpp"

#include "pdsim/errors.hpp"
#include "pdsim/mathcore.hpp"

#include <cmath>
#include <optional>

namespace pdsim::sim {

ModelKind model_kind(const ModelParams& p)
{
    return std::holds_alternative<ss::SSParams>(p) ? ModelKind::ss : ModelKind::pd;
}

const ss::SSParams& factor_params(const ModelParams& p)
{
    if (const auto* s = std::get_if<ss::SSParams>(&p)) return *s;
    return std::get<pd::PDParams>(p).base;
}

std::vector<std::string> validate(const ModelParams& p)
{
    if (const auto* s = std::get_if<ss::SSParams>(&p)) return ss::validate(*s);
    return pd::validate(std::get<pd::PDParams>(p));
}

void validate(const SimConfig& c)
{
    if (c.n_obs < 2) throw InvalidInput("n_obs must be >= 2", "n_obs");
    if (c.m < 1) throw InvalidInput("m must be >= 1", "m");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw InvalidInput("dt must be > 0", "dt");
    if (!filter_matches_model(c.model_kind, c.filter_kind))
        throw InvalidInput("filter " + std::string(to_string(c.filter_kind)) +
                               " cannot be paired with model " +
                               std::string(to_string(c.model_kind)),
                           "filter");
}

Eigen::MatrixXd maturity_grid(const SimConfig& config)
{
    Eigen::MatrixXd tau(config.n_obs, config.m);
    for (int t = 0; t < config.n_obs; ++t)
        for (int j = 0; j < config.m; ++j)
            tau(t, j) = (30.0 * (j + 1) - static_cast<double>(t % 30)) / 360.0;
    return tau;
}

SimulatedPanel simulate(const ModelParams& params, const ss::MeasurementErrorSpec& errs,
                        const SimConfig& config)
{
    validate(config);
    validate(params);
    ss::validate(errs);
    if (model_kind(params) != config.model_kind)
        throw InvalidInput("parameters do not match the configured model", "model");
    if (errs.m != config.m)
        throw InvalidInput("measurement error count must equal the contract count", "m");

    const ss::SSParams& factors = factor_params(params);
    const ss::StateTransition trans = ss::build_transition(factors, config.dt);
    const Eigen::MatrixXd process_factor = math::sampling_factor(trans.Sigma_w);
    const Eigen::MatrixXd noise_factor = math::sampling_factor(errs.covariance());

    math::RandomStream process_noise(math::derive_seed(config.seed, 0));
    math::RandomStream measurement_noise(math::derive_seed(config.seed, 1));

    SimulatedPanel panel;
    panel.model_kind = config.model_kind;
    panel.seed = config.seed;
    panel.maturities = maturity_grid(config);
    panel.states.resize(config.n_obs, 2);
    panel.prices.resize(config.n_obs, config.m);
    if (config.model_kind == ModelKind::ss) panel.log_prices.resize(config.n_obs, config.m);

    const Eigen::VectorXd zero_m = Eigen::VectorXd::Zero(config.m);
    std::optional<pd::Pricer> pricer;
    if (const auto* pdp = std::get_if<pd::PDParams>(&params)) pricer.emplace(*pdp);

    Eigen::Vector2d x = ss::stationary_mean(factors);
    for (int t = 0; t < config.n_obs; ++t) {
        const Eigen::Vector2d mean = trans.c + trans.E * x;
        x = math::mvn_sample_with_factor(mean, process_factor, process_noise);
        panel.states.row(t) = x.transpose();

        const Eigen::VectorXd taus = panel.maturities.row(t).transpose();
        const Eigen::VectorXd noise =
            math::mvn_sample_with_factor(zero_m, noise_factor, measurement_noise);
        if (pricer) {
            panel.prices.row(t) = (pricer->measurement(x, taus) + noise).transpose();
        } else {
            const ss::LinearMeasurement lm = ss::build_measurement(factors, taus);
            const Eigen::VectorXd y = lm.d + lm.F * x + noise;
            panel.log_prices.row(t) = y.transpose();
            panel.prices.row(t) = y.array().exp().matrix().transpose();
        }
    }
    return panel;
}

SimulatedPanel regenerate(const ModelParams& params, const ss::MeasurementErrorSpec& errs,
                          SimConfig config, std::uint64_t new_seed)
{
    config.seed = new_seed;
    return simulate(params, errs, config);
}

} // namespace pdsim::sim
