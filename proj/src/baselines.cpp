#include <rgf/baselines.hpp>
#include <rgf/robust_update.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rgf
{
namespace
{

JointGaussian ut_joint(const SigmaPointSet& sp, const GaussianBelief& prior, const Eigen::MatrixXd& y_points)
{
    JointGaussian joint;
    joint.mean_x = prior.mean;
    joint.cov_xx = prior.cov;
    joint.mean_y = empirical_mean(y_points, sp.w_mean);
    joint.cov_yy = empirical_cov(y_points, joint.mean_y, sp.w_cov);
    joint.cov_xy = empirical_cov(sp.points, y_points, empirical_mean(sp.points, sp.w_mean), joint.mean_y, sp.w_cov);
    return joint;
}

}  // namespace

GaussianBelief dense_gf_update(const GaussianBelief& prior,
                               const ObservationFn& observation,
                               const Eigen::VectorXd& y_obs,
                               double noise_var,
                               const UTParams& ut)
{
    const SigmaPointSet sp = generate_sigma_points(prior, ut);
    Eigen::MatrixXd y_points(y_obs.size(), sp.size());
    for (Eigen::Index k = 0; k < sp.size(); ++k)
    {
        Eigen::VectorXd y = observation(sp.points.col(k));
        if (y.size() != y_obs.size())
            throw std::invalid_argument("dense_gf_update: observation size mismatch");
        y_points.col(k) = y;
    }
    JointGaussian joint = ut_joint(sp, prior, y_points);
    joint.cov_yy.diagonal().array() += noise_var;
    return condition(joint, y_obs);
}

GaussianBelief dense_gf_update(const GaussianBelief& prior,
                               const DepthModel& model,
                               const Eigen::VectorXd& y_obs,
                               double noise_var,
                               const UTParams& ut)
{
    const auto m = static_cast<Eigen::Index>(model.pixel_count());
    auto h = [&model, m](const Eigen::Ref<const Eigen::VectorXd>& x) {
        const PixelPredictor predict = model.bind(x);
        Eigen::VectorXd y(m);
        for (Eigen::Index i = 0; i < m; ++i)
            y(i) = predict(static_cast<std::size_t>(i));
        return y;
    };
    return dense_gf_update(prior, h, y_obs, noise_var, ut);
}

GaussianBelief sequential_gf_update(const GaussianBelief& prior,
                                    const DepthModel& model,
                                    std::span<const double> y_obs,
                                    const ObservationParams& params,
                                    SequentialMeasurement measurement,
                                    const UTParams& ut)
{
    if (y_obs.size() != model.pixel_count())
        throw std::invalid_argument("sequential_gf_update: observation size mismatch");

    GaussianBelief belief = prior;
    const double noise_var = params.noise_variance();
    for (std::size_t i = 0; i < y_obs.size(); ++i)
    {
        const double y = y_obs[i];
        if (!is_valid_depth(y, params.range_min, params.range_max))
            continue;

        const SigmaPointSet sp = generate_sigma_points(belief, ut);
        Eigen::VectorXd depths(sp.size());
        bool mean_hit = true;
        for (Eigen::Index k = 0; k < sp.size(); ++k)
        {
            const double d = model.bind(sp.points.col(k))(i);
            if (std::isnan(d))
            {
                if (k == 0)
                {
                    mean_hit = false;
                    break;
                }
                depths(k) = params.range_max;
            }
            else
            {
                depths(k) = d;
            }
        }
        if (!mean_hit)
            continue;

        if (measurement == SequentialMeasurement::kRawDepth)
        {
            JointGaussian joint = ut_joint(sp, belief, depths.transpose());
            joint.cov_yy(0, 0) += noise_var;
            belief = condition(joint, Eigen::VectorXd::Constant(1, y));
        }
        else
        {
            const PixelBodyMoments moments = pixel_body_moments(depths, sp.w_mean, sp.w_cov, noise_var);
            const PixelFeatureSamples samples = feature_samples(depths, moments, params, sp.w_mean);
            JointGaussian joint = ut_joint(sp, belief, samples.points);
            joint.cov_yy += samples.noise_cov;
            // the feature satisfies one exact linear constraint, so cov_yy is rank deficient
            joint.cov_yy.diagonal().array() += 1e-12 * joint.cov_yy.trace();
            belief = condition(joint, feature(y, moments, params));
        }
    }
    return belief;
}

double ParticleSet::effective_sample_size() const
{
    double sq = 0.0;
    for (double w : weights)
        sq += w * w;
    return sq > 0.0 ? 1.0 / sq : 0.0;
}

Pose ParticleSet::mean_pose() const
{
    Pose out;
    out.position.setZero();
    Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
    const Eigen::Vector4d ref = apply_state_to_pose(anchors.front(), states.front()).orientation.coeffs();
    for (std::size_t i = 0; i < size(); ++i)
    {
        const Pose p = apply_state_to_pose(anchors[i], states[i]);
        out.position += weights[i] * p.position;
        Eigen::Vector4d q = p.orientation.coeffs();
        if (q.dot(ref) < 0.0)
            q = -q;
        q_sum += weights[i] * q;
    }
    out.orientation.coeffs() = q_sum.normalized();
    return out;
}

ParticleSet make_particles(const Pose& pose, std::size_t n, std::uint64_t seed)
{
    ParticleSet set;
    set.anchors.assign(n, pose);
    set.states.assign(n, StateVector::Zero());
    set.weights.assign(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
    set.rng_seed = seed;
    set.rng.seed(seed);
    return set;
}

ParticleSet make_particles(const GaussianBelief& belief, const Pose& anchor, std::size_t n, std::uint64_t seed)
{
    if (belief.dim() != kStateDim)
        throw std::invalid_argument("make_particles: belief must be 12-dimensional");
    ParticleSet set = make_particles(anchor, n, seed);
    const Eigen::MatrixXd l = cholesky_sqrt(belief.cov);
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n; ++i)
    {
        StateVector z;
        for (Eigen::Index k = 0; k < kStateDim; ++k)
            z(k) = normal(set.rng);
        const StateVector x = belief.mean + l * z;
        set.anchors[i] = apply_state_to_pose(anchor, x);
        set.states[i].setZero();
        set.states[i].tail<6>() = x.tail<6>();
    }
    return set;
}

double log_likelihood(const Pose& pose,
                      const DepthImage& image,
                      const MeshRaycaster& mesh,
                      const std::vector<Eigen::Vector3d>& rays,
                      const ObservationParams& params)
{
    const PosedMesh posed(mesh, pose);
    double sum = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i)
    {
        const double y = image.depth[i];
        if (!is_valid_depth(y, params.range_min, params.range_max))
            continue;
        double d = posed.hit_depth(rays[i]);
        if (!is_valid_depth(d, params.range_min, params.range_max))
            d = params.range_max;
        sum += log_mixture_density(y, d, params);
    }
    return sum;
}

void pf_reweight(ParticleSet& particles,
                 const DepthImage& image,
                 const MeshRaycaster& mesh,
                 const CameraModel& camera,
                 const ObservationParams& params)
{
    if (image.width != camera.width || image.height != camera.height)
        throw std::invalid_argument("pf: image size does not match the camera");
    const std::vector<Eigen::Vector3d> rays = pixel_rays(camera);
    const std::size_t n = particles.size();

    std::vector<double> log_w(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const Pose pose = apply_state_to_pose(particles.anchors[i], particles.states[i]);
        log_w[i] = std::log(particles.weights[i]) + log_likelihood(pose, image, mesh, rays, params);
    }
    const double max_log = *std::max_element(log_w.begin(), log_w.end());
    particles.degenerate = !std::isfinite(max_log);
    if (particles.degenerate)
    {
        std::fill(particles.weights.begin(), particles.weights.end(), 1.0 / static_cast<double>(n));
        return;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        particles.weights[i] = std::exp(log_w[i] - max_log);
        total += particles.weights[i];
    }
    for (double& w : particles.weights)
        w /= total;
}

ParticleSet pf_step(ParticleSet particles,
                    const ProcessNoiseParams& process,
                    const DepthImage& image,
                    const MeshRaycaster& mesh,
                    const CameraModel& camera,
                    const ObservationParams& params)
{
    using namespace state_block;
    const std::size_t n = particles.size();
    if (n < 2)
        throw std::invalid_argument("pf_step: need at least two particles");

    const Eigen::MatrixXd a = transition_matrix();
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n; ++i)
    {
        StateVector x = a * particles.states[i];
        for (Eigen::Index k = 0; k < 3; ++k)
            x(kVelocity + k) += process.sigma_v * normal(particles.rng);
        for (Eigen::Index k = 0; k < 3; ++k)
            x(kAngularVelocity + k) += process.sigma_omega * normal(particles.rng);
        particles.anchors[i] = apply_state_to_pose(particles.anchors[i], x);
        x.head<6>().setZero();
        particles.states[i] = x;
    }

    pf_reweight(particles, image, mesh, camera, params);

    particles.resampled = particles.effective_sample_size() < 0.5 * static_cast<double>(n);
    if (particles.resampled)
    {
        std::uniform_real_distribution<double> uniform(0.0, 1.0 / static_cast<double>(n));
        const double u0 = uniform(particles.rng);
        std::vector<Pose> anchors;
        std::vector<StateVector> states;
        anchors.reserve(n);
        states.reserve(n);
        double cumulative = particles.weights[0];
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
            while (u > cumulative && j + 1 < n)
                cumulative += particles.weights[++j];
            anchors.push_back(particles.anchors[j]);
            states.push_back(particles.states[j]);
        }
        particles.anchors = std::move(anchors);
        particles.states = std::move(states);
        std::fill(particles.weights.begin(), particles.weights.end(), 1.0 / static_cast<double>(n));
    }
    return particles;
}

}  // namespace rgf
