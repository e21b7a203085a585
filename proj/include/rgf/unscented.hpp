#pragma once

#include <rgf/gaussian.hpp>

#include <Eigen/Dense>

#include <cstdint>

namespace rgf
{

/// Scaling parameters of the unscented transform.
struct UTParams
{
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 0.0;

    /// alpha^2 (n + kappa) - n
    double lambda(Eigen::Index n) const;
};

/**
 * The 2N+1 sigma points of a Gaussian, stored column-wise.
 *
 * Column 0 is the source mean; columns 1..N and N+1..2N are the mean plus and
 * minus the columns of sqrt((N + lambda) * cov).
 */
struct SigmaPointSet
{
    Eigen::MatrixXd points;
    Eigen::VectorXd w_mean;
    Eigen::VectorXd w_cov;
    /// Lower Cholesky factor of the source covariance (not scaled).
    Eigen::MatrixXd cov_sqrt;

    Eigen::Index size() const { return points.cols(); }
    Eigen::Index dim() const { return points.rows(); }
};

/// Throws std::invalid_argument if N + lambda <= 0, NotPositiveDefinite if
/// the covariance cannot be factorized.
SigmaPointSet generate_sigma_points(const GaussianBelief& belief, const UTParams& params = {});

/// Number of generate_sigma_points() calls made by this process so far.
std::uint64_t sigma_point_generation_count();

/// Weighted sum of the sample columns.
Eigen::VectorXd empirical_mean(const Eigen::MatrixXd& samples, const Eigen::VectorXd& w_mean);

/// sum_k w_k (a_k - mean_a)(b_k - mean_b)^T over sample columns.
Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& samples_a,
                              const Eigen::MatrixXd& samples_b,
                              const Eigen::VectorXd& mean_a,
                              const Eigen::VectorXd& mean_b,
                              const Eigen::VectorXd& w_cov);

/// Auto-covariance; the result is exactly symmetric.
Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& samples,
                              const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& w_cov);

}  // namespace rgf
