#include "pdsim/mathcore.hpp"

#include "pdsim/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace pdsim::math {

namespace {

// Higham (2005) [13/13] coefficients and the 1-norm bound below which the
// unscaled approximant is accurate to double precision.
constexpr std::array<double, 14> pade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};
constexpr double theta13 = 5.371920351148152;

bool strictly_lower_is_zero(const Eigen::MatrixXd& a)
{
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = j + 1; i < a.rows(); ++i)
            if (a(i, j) != 0.0) return false;
    return true;
}

constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

} // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a)
{
    if (a.rows() != a.cols()) throw InvalidInput("expm: matrix must be square");
    if (a.rows() == 0 || a.rows() > max_expm_dim)
        throw InvalidInput("expm: dimension must be in [1, 12], got " + std::to_string(a.rows()));
    if (!a.allFinite()) throw InvalidInput("expm: non-finite entry");

    const Eigen::Index n = a.rows();
    const bool upper = strictly_lower_is_zero(a);

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Eigen::MatrixXd as = a * std::ldexp(1.0, -squarings);

    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a2 = as * as;
    const Eigen::MatrixXd a4 = a2 * a2;
    const Eigen::MatrixXd a6 = a4 * a2;
    const auto& b = pade13;

    const Eigen::MatrixXd u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2)
                                  + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const Eigen::MatrixXd u = as * u_inner;
    const Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2)
                            + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    const Eigen::MatrixXd p = v + u;
    const Eigen::MatrixXd q = v - u;
    Eigen::MatrixXd r;
    if (upper)
        r = q.triangularView<Eigen::Upper>().solve(p);
    else
        r = q.partialPivLu().solve(p);

    for (int k = 0; k < squarings; ++k) r = (r * r).eval();
    if (upper) r.triangularView<Eigen::StrictlyLower>().setZero();
    return r;
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& s)
{
    if (s.rows() != s.cols()) throw InvalidInput("cholesky: matrix must be square");
    if (!s.allFinite()) throw InvalidInput("cholesky: non-finite entry");
    const Eigen::Index n = s.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    if (n == 0) return l;

    const double tol = 1e-14 * s.diagonal().maxCoeff();
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = s(j, j);
        for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > tol) || pivot <= 0.0)
            throw NotPositiveDefinite("cholesky: matrix is not positive definite at pivot " +
                                          std::to_string(j),
                                      static_cast<std::size_t>(j));
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double acc = s(i, j);
            for (Eigen::Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / ljj;
        }
    }
    return l;
}

std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) noexcept
{
    return mix64(seed ^ mix64(i + golden_gamma));
}

std::uint64_t RandomStream::next_u64() noexcept
{
    ++position_;
    state_ += golden_gamma;
    return mix64(state_);
}

double RandomStream::uniform() noexcept
{
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept
{
    if (cached_normal_) {
        const double z = *cached_normal_;
        cached_normal_.reset();
        return z;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov)
{
    if (cov.rows() != cov.cols()) throw InvalidInput("covariance must be square");
    const Eigen::Index n = cov.rows();

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cov(i, i) < 0.0)
            throw NotPositiveDefinite("negative variance at index " + std::to_string(i),
                                      static_cast<std::size_t>(i));
        if (cov(i, i) > 0.0) active.push_back(i);
    }

    Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(n, n);
    if (active.empty()) return factor;

    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = cov(active[i], active[j]);

    Eigen::MatrixXd l_sub;
    try {
        l_sub = cholesky(sub);
    } catch (const NotPositiveDefinite& e) {
        const auto idx = static_cast<std::size_t>(active[e.pivot()]);
        throw NotPositiveDefinite("covariance is not positive definite at index " +
                                      std::to_string(idx),
                                  idx);
    }
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) factor(active[i], active[j]) = l_sub(i, j);
    return factor;
}

Eigen::VectorXd mvn_sample_with_factor(const Eigen::VectorXd& mean,
                                       const Eigen::MatrixXd& chol_lower,
                                       RandomStream& stream)
{
    const Eigen::Index n = mean.size();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = stream.normal();
    return mean + chol_lower.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RandomStream& stream)
{
    if (cov.rows() != mean.size()) throw InvalidInput("mvn_sample: mean/covariance size mismatch");
    return mvn_sample_with_factor(mean, sampling_factor(cov), stream);
}

} // namespace pdsim::math
