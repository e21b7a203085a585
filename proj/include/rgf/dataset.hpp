#pragma once

#include <rgf/config.hpp>
#include <rgf/depth_observation.hpp>
#include <rgf/mesh.hpp>
#include <rgf/state_model.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace rgf
{

inline constexpr double kDefaultDepthScale = 0.001;

/// A recorded (or simulated) depth sequence with ground truth.
struct SequenceData
{
    /// Intrinsics of the stored frames.
    CameraModel camera;
    /// Pixel stride of the stored frames relative to the full-resolution sensor.
    int stride = 1;
    double depth_scale = kDefaultDepthScale;
    double frame_rate = 30.0;
    std::vector<Pose> poses;
    std::vector<DepthImage> frames;
    TriangleMesh mesh;
};

/// Rounds to multiples of `scale`; values that do not fit 16 bits become missing.
DepthImage quantize(const DepthImage& image, double scale);

/// 16-bit little-endian unsigned, row-major, 0 = missing.
void write_depth_file(const std::string& path, const DepthImage& image, double scale);
DepthImage read_depth_file(const std::string& path, int width, int height, double scale);

/**
 * Directory layout:
 *   meta              key=value header (intrinsics, range, scale, rate, stride, frames)
 *   frames/NNNNNN.depth
 *   poses.txt         one "tx ty tz qw qx qy qz" line per frame
 *   object.obj
 * `comment` is written as a leading '#' line of meta.
 */
void write_sequence(const std::string& dir, const SequenceData& data, const std::string& comment = {});
/// Throws std::runtime_error on missing or inconsistent files.
SequenceData read_sequence(const std::string& dir);

TriangleMesh make_object_mesh(const SceneConfig& config);

/**
 * Renders the configured scene: trajectory, occluders, sensor noise and
 * outliers, quantized to the stored depth scale so that a write/read round
 * trip is lossless. Deterministic in (config, seed).
 */
SequenceData simulate_sequence(const SceneConfig& config, std::uint64_t seed);

}  // namespace rgf
