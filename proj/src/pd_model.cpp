#include "pdsim/pd_model.hpp"

#include "pdsim/errors.hpp"
#include "pdsim/mathcore.hpp"

#include <cmath>

namespace pdsim::pd {

namespace {

void check_tau(double tau)
{
    if (!(tau >= 0.0)) throw InvalidInput("time to maturity must be >= 0", "tau");
}

void check_state(const Eigen::Vector2d& x)
{
    if (!x.allFinite()) throw InvalidInput("state must be finite", "x");
}

Vector6d coordinates_from(const Matrix6d& g, const Vector6d& alpha, double tau)
{
    check_tau(tau);
    if (tau == 0.0) return alpha;
    const Eigen::MatrixXd scaled = tau * g;
    return math::expm(scaled) * alpha;
}

} // namespace

int PolyCoeffs::degree() const
{
    return (alpha(3) == 0.0 && alpha(4) == 0.0 && alpha(5) == 0.0) ? 1 : 2;
}

std::vector<std::string> validate(const PDParams& p)
{
    auto warnings = ss::validate(p.base);
    if (!p.coeffs.alpha.allFinite()) throw InvalidInput("coefficients must be finite", "coeffs");
    if ((p.coeffs.alpha.array() == 0.0).all())
        throw InvalidInput("at least one polynomial coefficient must be non-zero", "coeffs");
    if (p.base.rho != 0.0)
        warnings.emplace_back(
            "rho enters the state transition only; polynomial pricing treats the factors as uncorrelated");
    return warnings;
}

Vector6d basis(const Eigen::Vector2d& x)
{
    check_state(x);
    const double chi = x(0);
    const double xi = x(1);
    Vector6d h;
    h << 1.0, chi, xi, chi * chi, chi * xi, xi * xi;
    return h;
}

Matrix62d basis_jacobian(const Eigen::Vector2d& x)
{
    check_state(x);
    const double chi = x(0);
    const double xi = x(1);
    Matrix62d j;
    j << 0.0, 0.0,
         1.0, 0.0,
         0.0, 1.0,
         2.0 * chi, 0.0,
         xi, chi,
         0.0, 2.0 * xi;
    return j;
}

Matrix6d generator_matrix(const PDParams& p)
{
    const auto& b = p.base;
    const double drift_xi = b.mu_xi - b.lambda_xi;
    Matrix6d g = Matrix6d::Zero();

    g(0, 1) = -b.lambda_chi;
    g(0, 2) = drift_xi;
    g(0, 3) = b.sigma_chi * b.sigma_chi;
    g(0, 5) = b.sigma_xi * b.sigma_xi;

    g(1, 1) = -b.kappa;
    g(1, 3) = -2.0 * b.lambda_chi;
    g(1, 4) = drift_xi;

    g(2, 2) = -b.gamma;
    g(2, 4) = -b.lambda_chi;
    g(2, 5) = 2.0 * drift_xi;

    g(3, 3) = -2.0 * b.kappa;
    g(4, 4) = -b.kappa - b.gamma;
    g(5, 5) = -2.0 * b.gamma;
    return g;
}

Vector6d price_coordinates(const PDParams& p, double tau)
{
    return coordinates_from(generator_matrix(p), p.coeffs.alpha, tau);
}

double futures_price(const PDParams& p, const Eigen::Vector2d& x, double tau)
{
    return basis(x).dot(price_coordinates(p, tau));
}

Eigen::VectorXd measurement(const PDParams& p, const Eigen::Vector2d& x,
                            const Eigen::VectorXd& taus)
{
    Pricer pricer(p);
    return pricer.measurement(x, taus);
}

Eigen::MatrixXd measurement_jacobian(const PDParams& p, const Eigen::Vector2d& x,
                                     const Eigen::VectorXd& taus)
{
    Pricer pricer(p);
    return pricer.jacobian(x, taus);
}

Pricer::Pricer(PDParams params)
    : params_(std::move(params)), generator_(generator_matrix(params_))
{
}

const Vector6d& Pricer::coordinates(double tau)
{
    check_tau(tau);
    auto it = cache_.find(tau);
    if (it == cache_.end())
        it = cache_.emplace(tau, coordinates_from(generator_, params_.coeffs.alpha, tau)).first;
    return it->second;
}

Eigen::VectorXd Pricer::measurement(const Eigen::Vector2d& x, const Eigen::VectorXd& taus)
{
    const Vector6d h = basis(x);
    Eigen::VectorXd y(taus.size());
    for (Eigen::Index i = 0; i < taus.size(); ++i) y(i) = h.dot(coordinates(taus(i)));
    return y;
}

Eigen::MatrixXd Pricer::jacobian(const Eigen::Vector2d& x, const Eigen::VectorXd& taus)
{
    const Matrix62d jh = basis_jacobian(x);
    Eigen::MatrixXd j(taus.size(), 2);
    for (Eigen::Index i = 0; i < taus.size(); ++i)
        j.row(i) = (jh.transpose() * coordinates(taus(i))).transpose();
    return j;
}

} // namespace pdsim::pd
