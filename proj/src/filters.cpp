#include "pdsim/filters.hpp"

#include "pdsim/errors.hpp"
#include "pdsim/mathcore.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace pdsim::filters {

namespace {

const double log_two_pi = std::log(2.0 * std::numbers::pi);

void check_panel(const ObservationPanel& panel, const Eigen::MatrixXd& sigma_v)
{
    if (panel.y.rows() < 1 || panel.y.cols() < 1)
        throw InvalidInput("panel must have at least one row and one contract", "y");
    if (panel.y.rows() != panel.maturities.rows() || panel.y.cols() != panel.maturities.cols())
        throw InvalidInput("prices and maturities must have the same shape", "maturities");
    if (!panel.y.allFinite()) throw InvalidInput("observations must be finite", "y");
    if (!panel.maturities.allFinite() || (panel.maturities.array() < 0.0).any())
        throw InvalidInput("maturities must be finite and >= 0", "maturities");
    if (sigma_v.rows() != panel.y.cols() || sigma_v.cols() != panel.y.cols())
        throw InvalidInput("measurement error count must equal the contract count", "m");
}

void check_kind(const ObservationPanel& panel, ModelKind expected, const char* filter)
{
    if (panel.model_kind != expected)
        throw InvalidInput(std::string(filter) + " cannot run on a " +
                               std::string(to_string(panel.model_kind)) + " panel",
                           "filter");
}

template <typename M>
M symmetrized(const M& p)
{
    return 0.5 * (p + p.transpose());
}

FilterOutput allocate(const ObservationPanel& panel)
{
    const Eigen::Index n = panel.y.rows();
    const Eigen::Index m = panel.y.cols();
    FilterOutput out;
    out.model_kind = panel.model_kind;
    out.a_pred.resize(n, 2);
    out.a_filt.resize(n, 2);
    out.P_pred.resize(static_cast<std::size_t>(n));
    out.P_filt.resize(static_cast<std::size_t>(n));
    out.y_fit.resize(n, m);
    out.innovation.resize(n, m);
    out.innovation_cov.resize(static_cast<std::size_t>(n));
    return out;
}

// Measurement update shared by all three filters. `cross` is Cov(x, y) under
// the prediction and `h` the (possibly statistical) linearization used for
// the Joseph form.
struct Update {
    Eigen::Vector2d a;
    Eigen::Matrix2d P;
    double loglik_term;
};

Update measurement_update(std::size_t t, const Eigen::Vector2d& a_pred,
                          const Eigen::Matrix2d& p_pred, const Eigen::VectorXd& innovation,
                          const Eigen::MatrixXd& s, const Eigen::MatrixXd& cross,
                          const Eigen::MatrixXd& h, const Eigen::MatrixXd& sigma_v)
{
    Eigen::MatrixXd l;
    try {
        l = math::cholesky(s);
    } catch (const NotPositiveDefinite& e) {
        throw NumericalFailure("innovation covariance is not invertible at observation " +
                                   std::to_string(t) + " (pivot " + std::to_string(e.pivot()) +
                                   ")",
                               t);
    }
    const auto lower = l.triangularView<Eigen::Lower>();

    // K = cross * S^{-1}, via S K^T = cross^T.
    const Eigen::MatrixXd kt =
        l.transpose().triangularView<Eigen::Upper>().solve(lower.solve(cross.transpose()));
    const Eigen::MatrixXd k = kt.transpose();

    const Eigen::VectorXd whitened = lower.solve(innovation);
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const auto m = static_cast<double>(innovation.size());

    const Eigen::Matrix2d a_mat = Eigen::Matrix2d::Identity() - k * h;
    const Eigen::Matrix2d p = a_mat * p_pred * a_mat.transpose() + k * sigma_v * k.transpose();

    Update u;
    u.a = a_pred + k * innovation;
    u.P = symmetrized(p);
    u.loglik_term = -0.5 * (m * log_two_pi + log_det + whitened.squaredNorm());
    if (!std::isfinite(u.loglik_term) || !u.a.allFinite() || !u.P.allFinite())
        throw NumericalFailure("non-finite filter state at observation " + std::to_string(t), t);
    return u;
}

void store(FilterOutput& out, std::size_t t, const Eigen::Vector2d& a_pred,
           const Eigen::Matrix2d& p_pred, const Eigen::VectorXd& innovation,
           const Eigen::MatrixXd& s, const Update& u)
{
    const auto row = static_cast<Eigen::Index>(t);
    out.a_pred.row(row) = a_pred.transpose();
    out.P_pred[t] = p_pred;
    out.a_filt.row(row) = u.a.transpose();
    out.P_filt[t] = u.P;
    out.innovation.row(row) = innovation.transpose();
    out.innovation_cov[t] = s;
    out.loglik += u.loglik_term;
}

// Sigma points with one jittered retry; throws NumericalFailure with t.
Eigen::Matrix<double, 2, 5> robust_sigma_points(const Eigen::Vector2d& mean,
                                                const Eigen::Matrix2d& cov,
                                                const UnscentedWeights& w, std::size_t t)
{
    try {
        return sigma_points(mean, cov, w);
    } catch (const NotPositiveDefinite&) {
    }
    const double jitter = 1e-9 * cov.trace();
    try {
        return sigma_points(mean, cov + jitter * Eigen::Matrix2d::Identity(), w);
    } catch (const NotPositiveDefinite&) {
        throw NumericalFailure("sigma-point covariance is not positive definite at observation " +
                                   std::to_string(t),
                               t);
    }
}

} // namespace

FilterInit default_init(const ss::SSParams& p)
{
    return {ss::stationary_mean(p), ss::stationary_covariance(p)};
}

FilterOutput linear_kalman_filter(const ss::StateTransition& trans,
                                  const LinearMeasurementFn& measurement,
                                  const ObservationPanel& panel,
                                  const Eigen::MatrixXd& sigma_v, const FilterInit& init)
{
    check_panel(panel, sigma_v);
    FilterOutput out = allocate(panel);

    Eigen::Vector2d a = init.a0;
    Eigen::Matrix2d p = init.P0;
    const auto n = static_cast<std::size_t>(panel.y.rows());
    for (std::size_t t = 0; t < n; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const Eigen::Vector2d a_pred = trans.c + trans.E * a;
        const Eigen::Matrix2d p_pred =
            symmetrized(Eigen::Matrix2d(trans.E * p * trans.E.transpose() + trans.Sigma_w));

        const Eigen::VectorXd taus = panel.maturities.row(row).transpose();
        const ss::LinearMeasurement lm = measurement(taus);
        const Eigen::VectorXd y = panel.y.row(row).transpose();
        const Eigen::VectorXd innovation = y - (lm.d + lm.F * a_pred);
        const Eigen::MatrixXd cross = p_pred * lm.F.transpose();
        const Eigen::MatrixXd s = symmetrized(Eigen::MatrixXd(lm.F * cross + sigma_v));

        const Update u = measurement_update(t, a_pred, p_pred, innovation, s, cross, lm.F, sigma_v);
        store(out, t, a_pred, p_pred, innovation, s, u);
        out.y_fit.row(row) = (lm.d + lm.F * u.a).transpose();
        a = u.a;
        p = u.P;
    }
    return out;
}

FilterOutput kalman_filter(const ss::StateTransition& trans, const ss::SSParams& params,
                           const ObservationPanel& panel, const ss::MeasurementErrorSpec& errs,
                           const FilterInit& init)
{
    check_kind(panel, ModelKind::ss, "kf");
    const auto measurement = [&params](const Eigen::VectorXd& taus) {
        return ss::build_measurement(params, taus);
    };
    return linear_kalman_filter(trans, measurement, panel, errs.covariance(), init);
}

FilterOutput extended_kalman_filter(const ss::StateTransition& trans, const pd::PDParams& params,
                                    const ObservationPanel& panel,
                                    const ss::MeasurementErrorSpec& errs, const FilterInit& init)
{
    check_kind(panel, ModelKind::pd, "ekf");
    const Eigen::MatrixXd sigma_v = errs.covariance();
    check_panel(panel, sigma_v);
    FilterOutput out = allocate(panel);
    pd::Pricer pricer(params);

    Eigen::Vector2d a = init.a0;
    Eigen::Matrix2d p = init.P0;
    const auto n = static_cast<std::size_t>(panel.y.rows());
    for (std::size_t t = 0; t < n; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const Eigen::Vector2d a_pred = trans.c + trans.E * a;
        const Eigen::Matrix2d p_pred =
            symmetrized(Eigen::Matrix2d(trans.E * p * trans.E.transpose() + trans.Sigma_w));

        const Eigen::VectorXd taus = panel.maturities.row(row).transpose();
        const Eigen::MatrixXd jac = pricer.jacobian(a_pred, taus);
        const Eigen::VectorXd y = panel.y.row(row).transpose();
        const Eigen::VectorXd innovation = y - pricer.measurement(a_pred, taus);
        const Eigen::MatrixXd cross = p_pred * jac.transpose();
        const Eigen::MatrixXd s = symmetrized(Eigen::MatrixXd(jac * cross + sigma_v));

        const Update u = measurement_update(t, a_pred, p_pred, innovation, s, cross, jac, sigma_v);
        store(out, t, a_pred, p_pred, innovation, s, u);
        out.y_fit.row(row) = pricer.measurement(u.a, taus).transpose();
        a = u.a;
        p = u.P;
    }
    return out;
}

UnscentedWeights unscented_weights(double alpha, double beta, double kappa)
{
    constexpr double dim = 2.0;
    UnscentedWeights w;
    w.alpha = alpha;
    w.beta = beta;
    w.kappa = kappa;
    w.lambda = alpha * alpha * (dim + kappa) - dim;
    const double spread = dim + w.lambda;
    w.mean.setConstant(0.5 / spread);
    w.cov.setConstant(0.5 / spread);
    w.mean(0) = w.lambda / spread;
    w.cov(0) = w.lambda / spread + (1.0 - alpha * alpha + beta);
    return w;
}

Eigen::Matrix<double, 2, 5> sigma_points(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                         const UnscentedWeights& w)
{
    const Eigen::MatrixXd l = math::cholesky(cov);
    const double scale = std::sqrt(2.0 + w.lambda);
    Eigen::Matrix<double, 2, 5> x;
    x.col(0) = mean;
    for (int i = 0; i < 2; ++i) {
        x.col(1 + i) = mean + scale * l.col(i);
        x.col(3 + i) = mean - scale * l.col(i);
    }
    return x;
}

FilterOutput unscented_kalman_filter(const ss::StateTransition& trans, const pd::PDParams& params,
                                     const ObservationPanel& panel,
                                     const ss::MeasurementErrorSpec& errs, const FilterInit& init)
{
    check_kind(panel, ModelKind::pd, "ukf");
    const Eigen::MatrixXd sigma_v = errs.covariance();
    check_panel(panel, sigma_v);
    FilterOutput out = allocate(panel);
    pd::Pricer pricer(params);
    const UnscentedWeights w = unscented_weights();
    constexpr int np = UnscentedWeights::n_points;
    const Eigen::Index m = panel.y.cols();

    Eigen::Vector2d a = init.a0;
    Eigen::Matrix2d p = init.P0;
    const auto n = static_cast<std::size_t>(panel.y.rows());
    for (std::size_t t = 0; t < n; ++t) {
        const auto row = static_cast<Eigen::Index>(t);

        // Predict: push sigma points through the state equation.
        Eigen::Matrix<double, 2, np> x = robust_sigma_points(a, p, w, t);
        for (int i = 0; i < np; ++i) x.col(i) = trans.c + trans.E * x.col(i);
        const Eigen::Vector2d a_pred = x * w.mean;
        Eigen::Matrix2d p_pred = trans.Sigma_w;
        for (int i = 0; i < np; ++i) {
            const Eigen::Vector2d dx = x.col(i) - a_pred;
            p_pred += w.cov(i) * dx * dx.transpose();
        }
        p_pred = symmetrized(p_pred);

        // Update: redraw around the prediction and push through h.
        x = robust_sigma_points(a_pred, p_pred, w, t);
        const Eigen::VectorXd taus = panel.maturities.row(row).transpose();
        Eigen::MatrixXd ys(m, np);
        for (int i = 0; i < np; ++i) ys.col(i) = pricer.measurement(x.col(i), taus);
        const Eigen::VectorXd y_hat = ys * w.mean;

        Eigen::MatrixXd s = sigma_v;
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(2, m);
        for (int i = 0; i < np; ++i) {
            const Eigen::VectorXd dy = ys.col(i) - y_hat;
            const Eigen::Vector2d dx = x.col(i) - a_pred;
            s += w.cov(i) * dy * dy.transpose();
            cross += w.cov(i) * dx * dy.transpose();
        }
        s = symmetrized(s);

        // Statistical linearization H = cross^T P_pred^{-1} for the Joseph form.
        const Eigen::MatrixXd h = (p_pred.ldlt().solve(cross)).transpose();

        const Eigen::VectorXd y = panel.y.row(row).transpose();
        const Eigen::VectorXd innovation = y - y_hat;
        const Update u = measurement_update(t, a_pred, p_pred, innovation, s, cross, h, sigma_v);
        store(out, t, a_pred, p_pred, innovation, s, u);
        out.y_fit.row(row) = pricer.measurement(u.a, taus).transpose();
        a = u.a;
        p = u.P;
    }
    return out;
}

double two_sided_z(double level)
{
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must lie in (0, 1)", "level");
    const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, 0.5 * (1.0 + level));
}

Bands confidence_bands(const FilterOutput& out, double level)
{
    const double z = two_sided_z(level);
    const Eigen::Index n = out.y_fit.rows();
    const Eigen::Index m = out.y_fit.cols();
    Bands b{Eigen::MatrixXd(n, m), Eigen::MatrixXd(n, m)};
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto& s = out.innovation_cov[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < m; ++j) {
            const double half = z * std::sqrt(std::max(s(j, j), 0.0));
            b.lower(t, j) = out.y_fit(t, j) - half;
            b.upper(t, j) = out.y_fit(t, j) + half;
        }
    }
    if (out.model_kind == ModelKind::ss) {
        b.lower = b.lower.array().exp().matrix();
        b.upper = b.upper.array().exp().matrix();
    }
    return b;
}

Eigen::MatrixXd fitted_prices(const FilterOutput& out)
{
    if (out.model_kind == ModelKind::ss) return out.y_fit.array().exp().matrix();
    return out.y_fit;
}

} // namespace pdsim::filters
