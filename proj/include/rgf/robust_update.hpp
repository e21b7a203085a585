#pragma once

#include <rgf/depth_model.hpp>
#include <rgf/depth_observation.hpp>
#include <rgf/gaussian.hpp>
#include <rgf/mesh.hpp>
#include <rgf/state_model.hpp>
#include <rgf/unscented.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace rgf
{

inline constexpr Eigen::Index kFeatureDim = 3;

/// Feature vectors stored column-wise, one column per sigma point.
using FeaturePoints = Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic>;

/// The robust virtual measurement of one pixel: normalized body density,
/// y-weighted body density and normalized tail density.
using PixelFeature = Eigen::Vector3d;

/// Mean and variance of a pixel's depth under the body model and the prior.
struct PixelBodyMoments
{
    double mean = 0.0;
    double variance = 0.0;
};

/// Linear-Gaussian conditional q(phi | x) = N(phi | offset + gain * x, cov).
struct PixelLinearModel
{
    Eigen::Vector3d offset;
    Eigen::Matrix<double, kFeatureDim, Eigen::Dynamic> gain;
    /// Conditional covariance, eigenvalue-floored.
    Eigen::Matrix3d cov;
    /// Inverse of `cov`, from the same eigendecomposition.
    Eigen::Matrix3d precision;
};

/// Running information-form sums over pixels.
struct InfoAccumulator
{
    Eigen::MatrixXd precision;  // D
    Eigen::VectorXd shift;      // d
    std::size_t pixels = 0;
    std::size_t singular = 0;

    InfoAccumulator() = default;
    explicit InfoAccumulator(Eigen::Index state_dim)
        : precision(Eigen::MatrixXd::Zero(state_dim, state_dim)), shift(Eigen::VectorXd::Zero(state_dim))
    {
    }

    /// Element-wise sum; associative and commutative.
    InfoAccumulator& merge(const InfoAccumulator& other);
};

/**
 * Depth mean (w_mean) and variance (w_cov) over the sigma-point depths, plus
 * the pixel noise variance.
 */
PixelBodyMoments pixel_body_moments(const Eigen::Ref<const Eigen::VectorXd>& depths,
                                    const Eigen::VectorXd& w_mean,
                                    const Eigen::VectorXd& w_cov,
                                    double pixel_noise_var);

/**
 * Robust feature of a depth measurement:
 *
 *   (N(y|mu,S), y N(y|mu,S), t(y)) / ((1-w) N(y|mu,S) + w t(y))
 *
 * evaluated in log space so that far-away measurements saturate to
 * (0, 0, 1/w) instead of producing 0/0. With w = 0 the tail is not part of
 * the model and the feature is (1, y, 0).
 */
PixelFeature feature(double y, const PixelBodyMoments& moments, const ObservationParams& params);

/// Feature means at each sigma point with the pixel noise integrated out,
/// and the expected conditional feature covariance.
struct PixelFeatureSamples
{
    FeaturePoints points;
    Eigen::Matrix3d noise_cov;
};

/**
 * For every sigma-point depth d_k, the mean and variance of feature(y) under
 * y ~ (1 - w) N(d_k, pixel_noise_var) + w t(y). The body part uses a
 * three-node rule (nodes d_k and d_k +- sqrt(3 var), weights 2/3, 1/6, 1/6;
 * exact up to degree five). The tail part does not depend on d_k and is
 * integrated once per pixel with composite Gauss-Legendre. noise_cov
 * accumulates sum_k w_mean_k Var[phi | x_k]. Throws std::invalid_argument if
 * depths and w_mean differ in size.
 */
PixelFeatureSamples feature_samples(const Eigen::Ref<const Eigen::VectorXd>& depths,
                                    const PixelBodyMoments& moments,
                                    const ObservationParams& params,
                                    const Eigen::VectorXd& w_mean);

/**
 * Fits q(phi | x) from sigma-point features:
 *   L = S_xphi^T S_xx^-1,  l = mu_phi - L mu_x,
 *   P = S_phiphi + feature_noise_cov - S_xphi^T S_xx^-1 S_xphi
 * with P symmetrized and eigenvalue-floored at 1e-12 * trace(S_phiphi).
 * Propagates NotPositiveDefinite from the prior factorization.
 */
PixelLinearModel pixel_linear_model(const FeaturePoints& features,
                                    const SigmaPointSet& state_points,
                                    const GaussianBelief& prior,
                                    const Eigen::Matrix3d& feature_noise_cov = Eigen::Matrix3d::Zero());

/**
 * Adds one pixel's information:
 *   D += L^T P^-1 L,  d += L^T P^-1 (phi_obs - l - L mu_x).
 * Returns false (and counts the pixel as singular) when P has no usable
 * inverse; the accumulator is then unchanged apart from the counter.
 */
bool accumulate(InfoAccumulator& acc,
                const PixelLinearModel& model,
                const PixelFeature& observed,
                const Eigen::VectorXd& prior_mean);

/// Sigma_post = (Sigma^-1 + D)^-1, mu_post = mu + Sigma_post d.
GaussianBelief finalize(const GaussianBelief& prior, const InfoAccumulator& acc);

/// Same, with the prior precision supplied by the caller.
GaussianBelief finalize(const GaussianBelief& prior,
                        const InfoAccumulator& acc,
                        const Eigen::MatrixXd& prior_precision);

struct UpdateDiagnostics
{
    std::size_t pixels_used = 0;
    std::size_t skipped_invalid = 0;   // missing or out-of-range measurement
    std::size_t skipped_miss = 0;      // mean-state ray misses the object
    std::size_t skipped_singular = 0;  // pixel covariance not invertible
    bool all_pixels_skipped = false;

    std::size_t skipped() const { return skipped_invalid + skipped_miss + skipped_singular; }
};

struct UpdateResult
{
    GaussianBelief belief;
    UpdateDiagnostics diagnostics;
};

/**
 * Factorized robust measurement update.
 *
 * Sigma points of the prior are generated once. For each pixel (ascending
 * index) the sigma-point depths are turned into body moments, features and a
 * linear-Gaussian conditional whose information is summed; the sums are
 * combined with the prior at the end. The sums are formed in the whitened
 * coordinates of the prior Cholesky factor, which gives the same result as
 * pixel_linear_model + accumulate up to rounding. Sigma-point rays that miss while the
 * mean ray hits take range_max as their depth. If no pixel is usable the
 * prior is returned unchanged and all_pixels_skipped is set.
 */
UpdateResult update(const GaussianBelief& prior,
                    const DepthModel& model,
                    std::span<const double> observed,
                    const ObservationParams& params,
                    const UTParams& ut = {});

/// Mesh-based update on a depth image whose pixels correspond to `camera`.
UpdateResult update(const GaussianBelief& prior,
                    const Pose& anchor,
                    const DepthImage& image,
                    const MeshRaycaster& mesh,
                    const CameraModel& camera,
                    const ObservationParams& params,
                    const UTParams& ut = {});

}  // namespace rgf
