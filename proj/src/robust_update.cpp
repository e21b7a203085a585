#include <rgf/robust_update.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rgf
{
namespace
{
constexpr double kPrecisionFloor = 1e-12;

// three-node Gaussian rule for integrating over the pixel noise
constexpr double kNoiseNodeWeightCenter = 2.0 / 3.0;
constexpr double kNoiseNodeWeightSide = 1.0 / 6.0;
const double kNoiseNodeOffset = std::sqrt(3.0);

Eigen::MatrixXd inverse_factor(const Eigen::MatrixXd& lower)
{
    return lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(lower.rows(), lower.cols()));
}

Eigen::MatrixXd precision_of(const Eigen::MatrixXd& cov)
{
    auto llt = regularized_llt(cov);
    if (!llt)
        throw NotPositiveDefinite("prior covariance is not positive definite");
    Eigen::MatrixXd precision = llt->solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
    return 0.5 * (precision + precision.transpose());
}

/// Feature of one pixel with the per-pixel constants hoisted out: one exp
/// per evaluation.
class FeatureEvaluator
{
public:
    FeatureEvaluator(const PixelBodyMoments& moments, const ObservationParams& params)
        : w_(params.tail_weight), mean_(moments.mean)
    {
        if (w_ > 0.0)
        {
            half_inv_var_ = 0.5 / moments.variance;
            log_ratio0_ =
                std::log(params.tail_density()) + 0.5 * std::log(2.0 * std::numbers::pi * moments.variance);
        }
    }

    PixelFeature operator()(double y) const
    {
        if (w_ <= 0.0)
            return {1.0, y, 0.0};
        const double dy = y - mean_;
        // tail density over body density
        const double e = std::exp(log_ratio0_ + dy * dy * half_inv_var_);
        const double body_ratio = 1.0 / ((1.0 - w_) + w_ * e);
        const double tail_ratio = 1.0 / ((1.0 - w_) / e + w_);
        return {body_ratio, y * body_ratio, tail_ratio};
    }

private:
    double w_;
    double mean_;
    double half_inv_var_ = 0.0;
    double log_ratio0_ = 0.0;
};

/**
 * Mean and covariance of the feature when y is drawn from the tail, i.e.
 * uniformly over the sensor range. The feature equals (0, 0, 1/w) except in
 * a bump around the body mean, so only the bump g = phi - (0, 0, 1/w) is
 * integrated, in u = (y - mu) / sigma with composite 4-point Gauss-Legendre.
 */
struct TailMoments
{
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

TailMoments tail_moments(const PixelBodyMoments& moments, const ObservationParams& params)
{
    static constexpr std::array<double, 4> kNodes = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                     0.8611363115940526};
    static constexpr std::array<double, 4> kWeights = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                       0.3478548451374538};
    constexpr double kPanelWidth = 0.5;
    // body responsibility below exp(-37) is dropped
    constexpr double kCutoff = 37.0;

    const double w = params.tail_weight;
    const double t = params.tail_density();
    const double mu = moments.mean;
    const double sigma = std::sqrt(moments.variance);
    // body responsibility is s(u) = 1 / (1 + exp(u^2 / 2 - c))
    const double c = std::log((1.0 - w) / (w * t * sigma * std::sqrt(2.0 * std::numbers::pi)));

    TailMoments out;
    out.mean.z() = 1.0 / w;
    const double reach = std::sqrt(2.0 * std::max(c + kCutoff, 0.0));
    double lo = std::max(-reach, (params.range_min - mu) / sigma);
    double hi = std::min(reach, (params.range_max - mu) / sigma);
    if (!(hi > lo))
        return out;
    // s is even, so an untruncated interval only needs its upper half
    const bool symmetric = lo == -reach && hi == reach;
    if (symmetric)
        lo = 0.0;

    // integrals of s, s u, s^2, s^2 u, s^2 u^2 over u
    double s0 = 0.0, s1 = 0.0, q0 = 0.0, q1 = 0.0, q2 = 0.0;
    const int panels = static_cast<int>(std::ceil((hi - lo) / kPanelWidth));
    const double half = 0.5 * (hi - lo) / panels;
    for (int p = 0; p < panels; ++p)
    {
        const double center = lo + (2 * p + 1) * half;
        for (std::size_t j = 0; j < kNodes.size(); ++j)
        {
            const double u = center + half * kNodes[j];
            const double s = 1.0 / (1.0 + std::exp(0.5 * u * u - c));
            const double ws = kWeights[j] * half * s;
            s0 += ws;
            s1 += ws * u;
            q0 += ws * s;
            q1 += ws * s * u;
            q2 += ws * s * u * u;
        }
    }
    if (symmetric)
    {
        s0 *= 2.0, q0 *= 2.0, q2 *= 2.0;
        s1 = q1 = 0.0;
    }

    // g = s (a, a y, b) with y = mu + sigma u
    const double a = 1.0 / (1.0 - w);
    const double b = -1.0 / w;
    const double scale = t * sigma;
    const double ys = mu * s0 + sigma * s1;
    const double yq = mu * q0 + sigma * q1;
    const double yyq = mu * mu * q0 + 2.0 * mu * sigma * q1 + sigma * sigma * q2;
    const Eigen::Vector3d g_mean = scale * Eigen::Vector3d(a * s0, a * ys, b * s0);
    Eigen::Matrix3d g_second;
    g_second << a * a * q0, a * a * yq, a * b * q0,
                a * a * yq, a * a * yyq, a * b * yq,
                a * b * q0, a * b * yq, b * b * q0;
    out.mean += g_mean;
    out.cov = scale * g_second - g_mean * g_mean.transpose();
    return out;
}

/**
 * Conditional feature mean at each sigma-point depth d_k and the expected
 * conditional covariance, for y ~ (1 - w) N(d_k, sigma^2) + w t. The body
 * part uses nodes d_k and d_k +- sqrt(3) sigma with weights 2/3, 1/6, 1/6.
 */
template <class Points>
void integrate_pixel_noise(const double* depths,
                           Eigen::Index count,
                           const PixelBodyMoments& moments,
                           const ObservationParams& params,
                           const Eigen::VectorXd& w_mean,
                           Points& points,
                           Eigen::Matrix3d& noise_cov)
{
    const FeatureEvaluator phi(moments, params);
    const double w = params.tail_weight;
    const TailMoments tail = w > 0.0 ? tail_moments(moments, params) : TailMoments{};
    const double offset = kNoiseNodeOffset * params.pixel_noise_std;

    noise_cov.setZero();
    for (Eigen::Index k = 0; k < count; ++k)
    {
        const PixelFeature c = phi(depths[k]);
        const PixelFeature hi = phi(depths[k] + offset);
        const PixelFeature lo = phi(depths[k] - offset);
        const PixelFeature body = kNoiseNodeWeightCenter * c + kNoiseNodeWeightSide * (hi + lo);
        const PixelFeature dc = c - body;
        const PixelFeature dh = hi - body;
        const PixelFeature dl = lo - body;
        Eigen::Matrix3d var = kNoiseNodeWeightCenter * dc * dc.transpose() +
                              kNoiseNodeWeightSide * (dh * dh.transpose() + dl * dl.transpose());
        if (w > 0.0)
        {
            const PixelFeature gap = body - tail.mean;
            points.col(k) = (1.0 - w) * body + w * tail.mean;
            var = (1.0 - w) * var + w * tail.cov + (w * (1.0 - w)) * gap * gap.transpose();
        }
        else
        {
            points.col(k) = body;
        }
        noise_cov.noalias() += w_mean(k) * var;
    }
}

/// Floored eigendecomposition of a pixel covariance; false if unusable.
bool floored_eigen(const Eigen::Matrix3d& p, double floor, Eigen::Matrix3d& vectors, Eigen::Vector3d& values)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(p);
    vectors = eig.eigenvectors();
    values = eig.eigenvalues().cwiseMax(floor);
    return floor > 0.0 && values.allFinite() && vectors.allFinite();
}

/**
 * Information sums of all pixels in whitened state coordinates z with
 * x = mu + L z, where L is the prior Cholesky factor.
 *
 * Sigma point 1 + j is mu + s L e_j and point 1 + N + j is mu - s L e_j with
 * s^2 = N + lambda and equal weights w = 1 / (2 s^2). Writing Delta for the
 * 3 x N matrix of feature differences between the two, the regression
 * reduces to
 *   L_phi L = Delta / (2 s),  S_xphi^T S_xx^-1 S_xphi = Delta Delta^T / (4 s^2),
 * so each pixel costs O(N) plus a rank-3 update of the N x N sums.
 */
template <int N>
struct WhitenedSums
{
    static constexpr int K = N == Eigen::Dynamic ? Eigen::Dynamic : 2 * N + 1;
    using Square = Eigen::Matrix<double, N, N>;
    using Vector = Eigen::Matrix<double, N, 1>;
    using Features = Eigen::Matrix<double, kFeatureDim, K>;
    using Delta = Eigen::Matrix<double, kFeatureDim, N>;

    Square info;
    Vector shift;
    std::size_t pixels = 0;

    void run(const SigmaPointSet& sp,
             double scale,
             const std::vector<PixelPredictor>& predictors,
             std::span<const double> observed,
             const ObservationParams& params,
             UpdateDiagnostics& diag)
    {
        const Eigen::Index n = sp.dim();
        const Eigen::Index count = sp.size();
        info.setZero(n, n);
        shift.setZero(n);

        const double gain_scale = 1.0 / (2.0 * scale);
        const double noise_var = params.noise_variance();
        Eigen::VectorXd depths(count);
        Features phi(kFeatureDim, count);
        Delta delta(kFeatureDim, n);
        // per-pixel bases and whitened residuals, reduced by one product at the end
        Eigen::Matrix<double, N, Eigen::Dynamic> bases(n, kFeatureDim * observed.size());
        Eigen::VectorXd residuals(kFeatureDim * observed.size());
        Eigen::Matrix3d noise_cov;
        Eigen::Matrix3d vectors;
        Eigen::Vector3d values;

        for (std::size_t i = 0; i < observed.size(); ++i)
        {
            const double y = observed[i];
            if (!is_valid_depth(y, params.range_min, params.range_max))
            {
                ++diag.skipped_invalid;
                continue;
            }
            depths(0) = predictors[0](i);
            if (std::isnan(depths(0)))
            {
                ++diag.skipped_miss;
                continue;
            }
            for (Eigen::Index k = 1; k < count; ++k)
            {
                const double d = predictors[static_cast<std::size_t>(k)](i);
                depths(k) = std::isnan(d) ? params.range_max : d;
            }

            const PixelBodyMoments moments = pixel_body_moments(depths, sp.w_mean, sp.w_cov, noise_var);
            integrate_pixel_noise(depths.data(), count, moments, params, sp.w_mean, phi, noise_cov);

            const Eigen::Vector3d mean_phi = phi * sp.w_mean;
            Eigen::Matrix3d cov_phi = noise_cov;
            for (Eigen::Index k = 0; k < count; ++k)
            {
                const Eigen::Vector3d dphi = phi.col(k) - mean_phi;
                cov_phi.noalias() += sp.w_cov(k) * dphi * dphi.transpose();
            }
            delta = phi.middleCols(1, n) - phi.middleCols(1 + n, n);
            Eigen::Matrix3d p = cov_phi;
            p.noalias() -= (gain_scale * gain_scale) * delta * delta.transpose();
            p = (0.5 * (p + p.transpose())).eval();

            if (!floored_eigen(p, kPrecisionFloor * cov_phi.trace(), vectors, values))
            {
                ++diag.skipped_singular;
                continue;
            }
            const Eigen::Vector3d inv_sqrt = values.cwiseSqrt().cwiseInverse();
            const Eigen::Index col = kFeatureDim * static_cast<Eigen::Index>(pixels);
            bases.middleCols(col, kFeatureDim).noalias() =
                gain_scale * delta.transpose() * (vectors * inv_sqrt.asDiagonal());
            residuals.segment<kFeatureDim>(col) =
                inv_sqrt.asDiagonal() * (vectors.transpose() * (feature(y, moments, params) - mean_phi));
            ++pixels;
        }
        const Eigen::Index used = kFeatureDim * static_cast<Eigen::Index>(pixels);
        info.noalias() = bases.leftCols(used) * bases.leftCols(used).transpose();
        shift.noalias() = bases.leftCols(used) * residuals.head(used);
    }
};

template <int N>
InfoAccumulator accumulate_pixels(const SigmaPointSet& sp,
                                  double scale,
                                  const Eigen::MatrixXd& inv_sqrt_cov,
                                  const std::vector<PixelPredictor>& predictors,
                                  std::span<const double> observed,
                                  const ObservationParams& params,
                                  UpdateDiagnostics& diag)
{
    WhitenedSums<N> sums;
    sums.run(sp, scale, predictors, observed, params, diag);
    InfoAccumulator acc(sp.dim());
    acc.pixels = sums.pixels;
    acc.singular = diag.skipped_singular;
    acc.precision = inv_sqrt_cov.transpose() * (0.5 * (sums.info + sums.info.transpose())) * inv_sqrt_cov;
    acc.shift = inv_sqrt_cov.transpose() * sums.shift;
    return acc;
}
}  // namespace

InfoAccumulator& InfoAccumulator::merge(const InfoAccumulator& other)
{
    precision += other.precision;
    shift += other.shift;
    pixels += other.pixels;
    singular += other.singular;
    return *this;
}

PixelBodyMoments pixel_body_moments(const Eigen::Ref<const Eigen::VectorXd>& depths,
                                    const Eigen::VectorXd& w_mean,
                                    const Eigen::VectorXd& w_cov,
                                    double pixel_noise_var)
{
    if (depths.size() != w_mean.size() || depths.size() != w_cov.size())
        throw std::invalid_argument("pixel_body_moments: depth and weight counts differ");
    PixelBodyMoments m;
    m.mean = depths.dot(w_mean);
    m.variance = (depths.array() - m.mean).square().matrix().dot(w_cov) + pixel_noise_var;
    return m;
}

PixelFeature feature(double y, const PixelBodyMoments& moments, const ObservationParams& params)
{
    return FeatureEvaluator(moments, params)(y);
}

PixelFeatureSamples feature_samples(const Eigen::Ref<const Eigen::VectorXd>& depths,
                                    const PixelBodyMoments& moments,
                                    const ObservationParams& params,
                                    const Eigen::VectorXd& w_mean)
{
    if (depths.size() != w_mean.size())
        throw std::invalid_argument("feature_samples: depth and weight counts differ");
    PixelFeatureSamples out;
    out.points.resize(kFeatureDim, depths.size());
    const Eigen::VectorXd d = depths;
    integrate_pixel_noise(d.data(), d.size(), moments, params, w_mean, out.points, out.noise_cov);
    return out;
}

PixelLinearModel pixel_linear_model(const FeaturePoints& features,
                                    const SigmaPointSet& state_points,
                                    const GaussianBelief& prior,
                                    const Eigen::Matrix3d& feature_noise_cov)
{
    if (features.cols() != state_points.size() || state_points.dim() != prior.dim())
        throw std::invalid_argument("pixel_linear_model: inconsistent shapes");
    const Eigen::MatrixXd precision = precision_of(prior.cov);
    const Eigen::VectorXd& w_cov = state_points.w_cov;

    const Eigen::Vector3d mean_phi = features * state_points.w_mean;
    const FeaturePoints dphi = features.colwise() - mean_phi;
    const Eigen::MatrixXd dx = state_points.points.colwise() - prior.mean;
    Eigen::Matrix3d cov_phi = dphi * w_cov.asDiagonal() * dphi.transpose();
    cov_phi = (0.5 * (cov_phi + cov_phi.transpose())).eval() + feature_noise_cov;
    const Eigen::Matrix<double, Eigen::Dynamic, kFeatureDim> cov_x_phi = dx * w_cov.asDiagonal() * dphi.transpose();
    const Eigen::Matrix<double, Eigen::Dynamic, kFeatureDim> gain_t = precision * cov_x_phi;

    PixelLinearModel model;
    model.gain = gain_t.transpose();
    model.offset = mean_phi - model.gain * prior.mean;
    Eigen::Matrix3d p = cov_phi - cov_x_phi.transpose() * gain_t;
    p = (0.5 * (p + p.transpose())).eval();

    Eigen::Matrix3d vectors;
    Eigen::Vector3d values;
    const bool usable = floored_eigen(p, kPrecisionFloor * cov_phi.trace(), vectors, values);
    model.cov = vectors * values.asDiagonal() * vectors.transpose();
    if (usable)
        model.precision = vectors * values.cwiseInverse().asDiagonal() * vectors.transpose();
    else
        model.precision.setConstant(std::numeric_limits<double>::quiet_NaN());
    return model;
}

bool accumulate(InfoAccumulator& acc,
                const PixelLinearModel& model,
                const PixelFeature& observed,
                const Eigen::VectorXd& prior_mean)
{
    if (!model.precision.allFinite() || !model.gain.allFinite() || !observed.allFinite())
    {
        ++acc.singular;
        return false;
    }
    const Eigen::Matrix<double, Eigen::Dynamic, kFeatureDim> weighted = model.gain.transpose() * model.precision;
    const Eigen::Vector3d residual = observed - model.offset - model.gain * prior_mean;
    acc.precision.noalias() += weighted * model.gain;
    acc.shift.noalias() += weighted * residual;
    ++acc.pixels;
    return true;
}

GaussianBelief finalize(const GaussianBelief& prior, const InfoAccumulator& acc)
{
    if (acc.precision.isZero(0.0) && acc.shift.isZero(0.0))
        return prior;
    return finalize(prior, acc, precision_of(prior.cov));
}

GaussianBelief finalize(const GaussianBelief& prior,
                        const InfoAccumulator& acc,
                        const Eigen::MatrixXd& prior_precision)
{
    if (acc.precision.isZero(0.0) && acc.shift.isZero(0.0))
        return prior;
    const Eigen::MatrixXd info = prior_precision + 0.5 * (acc.precision + acc.precision.transpose());
    auto llt = regularized_llt(info);
    if (!llt)
        throw NotPositiveDefinite("finalize: posterior precision is not positive definite");
    GaussianBelief post;
    post.cov = symmetrize_psd(llt->solve(Eigen::MatrixXd::Identity(info.rows(), info.cols())));
    post.mean = prior.mean + post.cov * acc.shift;
    return post;
}

UpdateResult update(const GaussianBelief& prior,
                    const DepthModel& model,
                    std::span<const double> observed,
                    const ObservationParams& params,
                    const UTParams& ut)
{
    if (observed.size() != model.pixel_count())
        throw std::invalid_argument("update: observation size does not match the depth model");

    UpdateResult result{prior, {}};
    UpdateDiagnostics& diag = result.diagnostics;

    const SigmaPointSet sp = generate_sigma_points(prior, ut);
    const Eigen::MatrixXd inv_sqrt_cov = inverse_factor(sp.cov_sqrt);
    const Eigen::Index n = sp.dim();
    const double scale = std::sqrt(static_cast<double>(n) + ut.lambda(n));

    std::vector<PixelPredictor> predictors;
    predictors.reserve(static_cast<std::size_t>(sp.size()));
    for (Eigen::Index k = 0; k < sp.size(); ++k)
        predictors.push_back(model.bind(sp.points.col(k)));

    const InfoAccumulator acc =
        n == kStateDim ? accumulate_pixels<kStateDim>(sp, scale, inv_sqrt_cov, predictors, observed, params, diag)
                       : accumulate_pixels<Eigen::Dynamic>(sp, scale, inv_sqrt_cov, predictors, observed, params, diag);

    diag.pixels_used = acc.pixels;
    if (acc.pixels == 0)
    {
        diag.all_pixels_skipped = true;
        return result;
    }
    result.belief = finalize(prior, acc, inv_sqrt_cov.transpose() * inv_sqrt_cov);
    return result;
}

UpdateResult update(const GaussianBelief& prior,
                    const Pose& anchor,
                    const DepthImage& image,
                    const MeshRaycaster& mesh,
                    const CameraModel& camera,
                    const ObservationParams& params,
                    const UTParams& ut)
{
    if (image.width != camera.width || image.height != camera.height)
        throw std::invalid_argument("update: image size does not match the camera");
    const std::vector<Eigen::Vector3d> rays = pixel_rays(camera);
    const MeshDepthModel model(mesh, anchor, rays, camera.range_min, camera.range_max);
    return update(prior, model, image.depth, params, ut);
}

}  // namespace rgf
