#pragma once

#include "pdsim/ss_model.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace pdsim::pd {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix62d = Eigen::Matrix<double, 6, 2>;

/// Coefficients of the spot polynomial in the monomial basis
/// (1, chi, xi, chi^2, chi*xi, xi^2). This order is used everywhere,
/// including serialized arrays.
struct PolyCoeffs {
    Vector6d alpha = Vector6d::Zero();

    /// 1 when the quadratic coefficients are all zero, else 2.
    int degree() const;
};

struct PDParams {
    ss::SSParams base;
    PolyCoeffs coeffs;
};

/// SSParams checks plus "at least one alpha is non-zero". The pricing
/// generator has no correlation term, so rho != 0 yields a warning.
std::vector<std::string> validate(const PDParams& p);

Vector6d basis(const Eigen::Vector2d& x);

/// Gradients of the basis monomials, one row per monomial.
Matrix62d basis_jacobian(const Eigen::Vector2d& x);

/// Matrix of the risk-neutral generator acting on basis coordinates.
Matrix6d generator_matrix(const PDParams& p);

/// Coordinates of x -> E*[p(X_{t+tau}) | X_t = x], i.e. expm(tau G) alpha.
Vector6d price_coordinates(const PDParams& p, double tau);

double futures_price(const PDParams& p, const Eigen::Vector2d& x, double tau);

Eigen::VectorXd measurement(const PDParams& p, const Eigen::Vector2d& x,
                            const Eigen::VectorXd& taus);

/// m x 2 Jacobian of measurement() with respect to the state.
Eigen::MatrixXd measurement_jacobian(const PDParams& p, const Eigen::Vector2d& x,
                                     const Eigen::VectorXd& taus);

// Evaluates prices and Jacobians with the pricing coordinates memoized per
// distinct maturity. Not thread-safe; give each filter run its own pricer.
class Pricer {
public:
    explicit Pricer(PDParams params);

    const PDParams& params() const { return params_; }
    const Vector6d& coordinates(double tau);

    Eigen::VectorXd measurement(const Eigen::Vector2d& x, const Eigen::VectorXd& taus);
    Eigen::MatrixXd jacobian(const Eigen::Vector2d& x, const Eigen::VectorXd& taus);

private:
    PDParams params_;
    Matrix6d generator_;
    std::map<double, Vector6d> cache_;
};

} // namespace pdsim::pd
