#include "pdsim/ss_model.hpp"

#include "pdsim/errors.hpp"

#include <cmath>

namespace pdsim::ss {

namespace {

constexpr double small_rate = 1e-8;

void require_finite(double v, const char* field)
{
    if (!std::isfinite(v)) throw InvalidInput(std::string(field) + " must be finite", field);
}

void require_positive(double v, const char* field)
{
    require_finite(v, field);
    if (!(v > 0.0)) throw InvalidInput(std::string(field) + " must be > 0", field);
}

} // namespace

std::vector<std::string> validate(const SSParams& p)
{
    require_positive(p.kappa, "kappa");
    require_positive(p.gamma, "gamma");
    require_finite(p.mu_xi, "mu_xi");
    require_positive(p.sigma_chi, "sigma_chi");
    require_positive(p.sigma_xi, "sigma_xi");
    require_finite(p.rho, "rho");
    if (!(p.rho > -1.0 && p.rho < 1.0)) throw InvalidInput("rho must lie in (-1, 1)", "rho");
    require_finite(p.lambda_chi, "lambda_chi");
    require_finite(p.lambda_xi, "lambda_xi");

    std::vector<std::string> warnings;
    if (p.kappa > 3.0) warnings.emplace_back("kappa is outside the typical range (0, 3]");
    if (p.gamma > 3.0) warnings.emplace_back("gamma is outside the typical range (0, 3]");
    if (p.kappa <= p.gamma)
        warnings.emplace_back("kappa should be greater than gamma to keep the factors identifiable");
    return warnings;
}

Eigen::VectorXd MeasurementErrorSpec::sigmas() const
{
    if (m < 1) throw InvalidInput("contract count m must be >= 1", "m");
    Eigen::VectorXd s(m);
    if (m == 1) {
        s(0) = sigma_first;
        return s;
    }
    const double step = (sigma_last - sigma_first) / static_cast<double>(m - 1);
    for (int i = 0; i < m; ++i) s(i) = sigma_first + step * static_cast<double>(i);
    s(m - 1) = sigma_last;
    return s;
}

Eigen::MatrixXd MeasurementErrorSpec::covariance() const
{
    return sigmas().array().square().matrix().asDiagonal();
}

std::vector<std::string> validate(const MeasurementErrorSpec& e)
{
    if (e.m < 1) throw InvalidInput("contract count m must be >= 1", "m");
    require_positive(e.sigma_first, "sigma_first");
    std::vector<std::string> warnings;
    if (e.m == 1) {
        if (std::isfinite(e.sigma_last) && e.sigma_last != e.sigma_first)
            warnings.emplace_back("sigma_last is ignored when m = 1");
        return warnings;
    }
    require_positive(e.sigma_last, "sigma_last");
    return warnings;
}

double decay_integral(double rate, double t)
{
    if (std::abs(rate) < small_rate) return t * (1.0 - 0.5 * rate * t);
    return -std::expm1(-rate * t) / rate;
}

StateTransition build_transition(const SSParams& p, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be > 0", "dt");

    StateTransition t;
    t.dt = dt;
    t.c = Eigen::Vector2d(0.0, p.mu_xi * decay_integral(p.gamma, dt));
    t.E << std::exp(-p.kappa * dt), 0.0,
           0.0, std::exp(-p.gamma * dt);

    const double var_chi = decay_integral(2.0 * p.kappa, dt) * p.sigma_chi * p.sigma_chi;
    const double var_xi = decay_integral(2.0 * p.gamma, dt) * p.sigma_xi * p.sigma_xi;
    const double cov = decay_integral(p.kappa + p.gamma, dt) * p.sigma_chi * p.sigma_xi * p.rho;
    t.Sigma_w << var_chi, cov,
                 cov, var_xi;
    return t;
}

double a_function(const SSParams& p, double tau)
{
    if (!(tau >= 0.0)) throw InvalidInput("time to maturity must be >= 0", "tau");
    const double drift = -p.lambda_chi * decay_integral(p.kappa, tau)
                       + (p.mu_xi - p.lambda_xi) * decay_integral(p.gamma, tau);
    const double variance = decay_integral(2.0 * p.kappa, tau) * p.sigma_chi * p.sigma_chi
                          + decay_integral(2.0 * p.gamma, tau) * p.sigma_xi * p.sigma_xi
                          + 2.0 * decay_integral(p.kappa + p.gamma, tau) * p.sigma_chi *
                                p.sigma_xi * p.rho;
    return drift + 0.5 * variance;
}

Eigen::Vector2d stationary_mean(const SSParams& p)
{
    return {0.0, p.mu_xi / p.gamma};
}

Eigen::Matrix2d stationary_covariance(const SSParams& p)
{
    const double cov = p.sigma_chi * p.sigma_xi * p.rho / (p.kappa + p.gamma);
    Eigen::Matrix2d s;
    s << p.sigma_chi * p.sigma_chi / (2.0 * p.kappa), cov,
         cov, p.sigma_xi * p.sigma_xi / (2.0 * p.gamma);
    return s;
}

LinearMeasurement build_measurement(const SSParams& p, const Eigen::VectorXd& taus)
{
    const Eigen::Index m = taus.size();
    LinearMeasurement out{Eigen::VectorXd(m), Eigen::MatrixXd(m, 2)};
    for (Eigen::Index i = 0; i < m; ++i) {
        const double tau = taus(i);
        if (!(tau >= 0.0)) throw InvalidInput("time to maturity must be >= 0", "maturities");
        out.d(i) = a_function(p, tau);
        out.F(i, 0) = std::exp(-p.kappa * tau);
        out.F(i, 1) = std::exp(-p.gamma * tau);
    }
    return out;
}

} // namespace pdsim::ss
