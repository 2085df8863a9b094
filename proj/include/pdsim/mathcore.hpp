#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace pdsim::math {

/// Largest matrix dimension accepted by expm.
inline constexpr Eigen::Index max_expm_dim = 12;

/// Matrix exponential by scaling and squaring with a fixed [13/13] Pade
/// approximant. Upper-triangular input gives exactly upper-triangular output.
/// Throws InvalidInput on non-square, oversized or non-finite input.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// Lower Cholesky factor of a symmetric matrix. Only the lower triangle of
/// `s` is read. A pivot at or below 1e-14 * max diagonal throws
/// NotPositiveDefinite carrying the 0-based pivot index.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& s);

/// SplitMix64 mixing function (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Seed of the i-th independent sub-stream of `seed`:
/// mix64(seed ^ mix64(i + 0x9e3779b97f4a7c15)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) noexcept;

// Counter-based SplitMix64 stream. Draw k (0-based) is
// mix64(seed + (k + 1) * 0x9e3779b97f4a7c15), so the output is bit-exact on
// every platform. Normals use Box-Muller on two uniforms; the sine branch is
// cached and returned by the next normal() call.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    /// Number of 64-bit words consumed so far.
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;
    double normal() noexcept;

    RandomStream substream(std::uint64_t i) const noexcept
    {
        return RandomStream(derive_seed(seed_, i));
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    std::uint64_t position_ = 0;
    std::optional<double> cached_normal_;
};

/// One draw from N(mean, cov). Always consumes exactly mean.size() normals.
/// Coordinates with zero variance are returned equal to the mean; the rest
/// must form a positive-definite block, otherwise NotPositiveDefinite.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           RandomStream& stream);

/// Same draw with a precomputed lower Cholesky factor of cov.
Eigen::VectorXd mvn_sample_with_factor(const Eigen::VectorXd& mean,
                                       const Eigen::MatrixXd& chol_lower,
                                       RandomStream& stream);

/// Factor usable by mvn_sample_with_factor; handles zero-variance coordinates.
Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov);

} // namespace pdsim::math
