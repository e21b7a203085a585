#pragma once

#include <rgf/depth_observation.hpp>
#include <rgf/mesh.hpp>
#include <rgf/state_model.hpp>

#include <cstdint>
#include <vector>

namespace rgf
{

inline constexpr double kFrameRate = 30.0;

/// Static mesh in the camera frame, present during [first_frame, last_frame].
struct Occluder
{
    TriangleMesh mesh;
    Pose pose;
    int first_frame = 0;
    int last_frame = -1;  // negative: until the end of the sequence

    bool active(int frame) const { return frame >= first_frame && (last_frame < 0 || frame <= last_frame); }
};

struct Scene
{
    TriangleMesh object_mesh;
    std::vector<Occluder> occluders;
    std::vector<Pose> trajectory;
    CameraModel camera;
};

struct NoiseSpec
{
    double depth_noise_std = 0.001;
    double outlier_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Mean translational (m/s) and rotational (rad/s) speed of a category of
/// Table-I-style motion; category 0 is static.
struct SpeedTarget
{
    double translational = 0.0;
    double rotational = 0.0;
};
SpeedTarget category_speed(int category);

/// Mean speeds of a trajectory sampled at kFrameRate.
SpeedTarget measure_speed(const std::vector<Pose>& trajectory);

/**
 * Smooth random motion around `center`: a damped, spring-anchored random walk
 * of the velocities, scaled so the mean speeds equal the category targets.
 * Category 0 gives a static trajectory. Throws std::invalid_argument for
 * frames < 2 or an unknown category.
 */
std::vector<Pose> make_trajectory(int category, int frames, std::uint64_t seed, const Pose& center);

/// Default trajectory center: 0.95 m in front of the camera, tilted so three
/// faces of a box are visible.
Pose default_object_pose();

/// Per pixel, the nearest z-depth over the object and the active occluders;
/// misses and out-of-range hits are missing.
DepthImage render_depth(const Scene& scene, int frame);

/// Outliers uniform over the camera range, Gaussian noise clamped to it.
/// The generator is seeded from (spec.seed, frame).
DepthImage corrupt(const DepthImage& image, const NoiseSpec& spec, const CameraModel& camera, int frame = 0);

/**
 * Axis-aligned rectangle at depth `z` spanning the full image height and the
 * left `fraction` of the object's silhouette columns in the given image.
 */
Occluder make_column_occluder(const CameraModel& camera,
                              const DepthImage& object_only,
                              double fraction,
                              double z,
                              int first_frame,
                              int last_frame = -1);

/// Rectangle at depth `z` covering the whole field of view.
Occluder make_full_occluder(const CameraModel& camera, double z, int first_frame, int last_frame = -1);

}  // namespace rgf
