#pragma once

#include <rgf/depth_model.hpp>
#include <rgf/depth_observation.hpp>
#include <rgf/gaussian.hpp>
#include <rgf/mesh.hpp>
#include <rgf/state_model.hpp>
#include <rgf/unscented.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace rgf
{

/// Maps a state to the full M-vector of predicted measurements.
using ObservationFn = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>;

/**
 * Standard GF update on the stacked measurement: UT moments of y = h(x) + e,
 * e ~ N(0, noise_var I), then condition. Costs O(N^3 + M^3).
 */
GaussianBelief dense_gf_update(const GaussianBelief& prior,
                               const ObservationFn& observation,
                               const Eigen::VectorXd& y_obs,
                               double noise_var,
                               const UTParams& ut = {});

/// Same, with h given per pixel by a depth model.
GaussianBelief dense_gf_update(const GaussianBelief& prior,
                               const DepthModel& model,
                               const Eigen::VectorXd& y_obs,
                               double noise_var,
                               const UTParams& ut = {});

enum class SequentialMeasurement
{
    kRawDepth,  // condition on y with noise variance C
    kFeature,   // condition on the robust feature of y
};

/**
 * Incorporates the pixels one by one: for every pixel, fresh sigma points of
 * the current belief, a joint over that pixel's measurement and a
 * conditioning step. Pixels whose measurement is invalid or whose mean ray
 * misses are skipped, as in the factorized update.
 */
GaussianBelief sequential_gf_update(const GaussianBelief& prior,
                                    const DepthModel& model,
                                    std::span<const double> y_obs,
                                    const ObservationParams& params,
                                    SequentialMeasurement measurement = SequentialMeasurement::kRawDepth,
                                    const UTParams& ut = {});

/**
 * Bootstrap particle filter over the same state parametrization as the
 * Gaussian filters. Every particle carries its own anchor, so its state is
 * re-zeroed after each step and only the velocity blocks are non-zero.
 */
struct ParticleSet
{
    std::vector<Pose> anchors;
    std::vector<StateVector> states;
    std::vector<double> weights;
    std::uint64_t rng_seed = 0;
    std::mt19937_64 rng;
    /// Set by the last weighting if every likelihood underflowed; the weights
    /// are then reset to uniform.
    bool degenerate = false;
    /// Set by the last pf_step() if it resampled.
    bool resampled = false;

    std::size_t size() const { return states.size(); }
    double effective_sample_size() const;
    /// Weighted position mean and sign-aligned weighted quaternion mean.
    Pose mean_pose() const;
};

/// n copies of `pose` with zero velocity and uniform weights.
ParticleSet make_particles(const Pose& pose, std::size_t n, std::uint64_t seed);

/// n particles drawn from a Gaussian belief over the state relative to `anchor`.
ParticleSet make_particles(const GaussianBelief& belief, const Pose& anchor, std::size_t n, std::uint64_t seed);

/// Sum over valid pixels of log mixture_density; rays that miss predict range_max.
double log_likelihood(const Pose& pose,
                      const DepthImage& image,
                      const MeshRaycaster& mesh,
                      const std::vector<Eigen::Vector3d>& rays,
                      const ObservationParams& params);

/**
 * Propagates every particle with sampled process noise, weights it by the
 * pixel-wise mixture likelihood (log space) and resamples systematically when
 * the effective sample size drops below half the particle count.
 * Throws std::invalid_argument for fewer than two particles.
 */
ParticleSet pf_step(ParticleSet particles,
                    const ProcessNoiseParams& process,
                    const DepthImage& image,
                    const MeshRaycaster& mesh,
                    const CameraModel& camera,
                    const ObservationParams& params);

/// Deterministic measurement-only reweighting (no propagation, no resampling).
void pf_reweight(ParticleSet& particles,
                 const DepthImage& image,
                 const MeshRaycaster& mesh,
                 const CameraModel& camera,
                 const ObservationParams& params);

}  // namespace rgf
