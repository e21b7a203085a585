#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>

namespace rgf
{

/// Raised when a covariance cannot be factorized even after bounded jitter.
class NotPositiveDefinite : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the innovation covariance of a joint Gaussian cannot be inverted.
class SingularInnovationCovariance : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/**
 * Mean and covariance of a multivariate Gaussian.
 *
 * The covariance is expected to be symmetric positive semi-definite; see
 * is_valid() for the tolerances used throughout the library.
 */
struct GaussianBelief
{
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    Eigen::Index dim() const { return mean.size(); }

    /// Symmetric within 1e-9 (relative Frobenius) and smallest eigenvalue
    /// no lower than -1e-9 times the largest.
    bool is_valid() const;
};

/// Gaussian approximation of the joint over a state x and an observation y.
struct JointGaussian
{
    Eigen::VectorXd mean_x;
    Eigen::VectorXd mean_y;
    Eigen::MatrixXd cov_xx;
    Eigen::MatrixXd cov_yy;
    Eigen::MatrixXd cov_xy;
};

/**
 * Cholesky factorization with a deterministic jitter schedule.
 *
 * Tries the plain factorization first, then adds lambda*I with lambda
 * starting at 1e-12*trace/N and growing by x10 up to 1e-6*trace/N.
 * Returns nullopt if every attempt fails. Only the lower triangle of the
 * input is read.
 */
std::optional<Eigen::LLT<Eigen::MatrixXd>> regularized_llt(const Eigen::MatrixXd& m);

/// Lower-triangular L with L*L^T equal to the (possibly jittered) input.
/// Throws NotPositiveDefinite when regularized_llt() fails.
Eigen::MatrixXd cholesky_sqrt(const Eigen::MatrixXd& cov);

/// Number of cholesky_sqrt() calls made by this process so far.
std::uint64_t cholesky_sqrt_count();

/// (A + A^T) / 2 with negative eigenvalues clamped to zero.
Eigen::MatrixXd symmetrize_psd(const Eigen::MatrixXd& m);

/// Conditions the joint on an observed y. Throws SingularInnovationCovariance
/// if cov_yy cannot be factorized and std::invalid_argument on shape mismatch.
GaussianBelief condition(const JointGaussian& joint, const Eigen::VectorXd& y_obs);

}  // namespace rgf
