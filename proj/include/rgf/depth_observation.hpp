#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace rgf
{

/// Pinhole intrinsics plus the working range of the depth sensor.
struct CameraModel
{
    int width = 640;
    int height = 480;
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
    double range_min = 0.5;
    double range_max = 7.0;

    std::size_t pixel_count() const
    {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    /// Throws std::invalid_argument when the intrinsics or range are unusable.
    void validate() const;
};

/// Camera seeing every stride-th pixel of `camera`, starting at (stride/2, stride/2).
CameraModel downsample(const CameraModel& camera, int stride);

/// Unit direction of the ray through the center of a row-major pixel index.
Eigen::Vector3d pixel_ray(const CameraModel& camera, std::size_t pixel_index);

/// Sub-pixel image coordinates (u, v) of a camera-frame point with z > 0.
Eigen::Vector2d project(const CameraModel& camera, const Eigen::Vector3d& point);

/// Row-major z-depth image in meters; NaN marks a missing return.
struct DepthImage
{
    static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

    int width = 0;
    int height = 0;
    std::vector<double> depth;

    DepthImage() = default;
    DepthImage(int w, int h)
        : width(w), height(h), depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), kMissing)
    {
    }

    std::size_t size() const { return depth.size(); }
    double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
    double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
};

DepthImage downsample(const DepthImage& image, int stride);

/// Per-pixel observation model: Gaussian body around the predicted depth
/// mixed with a uniform tail over the sensor range.
struct ObservationParams
{
    double pixel_noise_std = 0.001;
    double tail_weight = 0.1;
    double range_min = 0.5;
    double range_max = 7.0;

    double noise_variance() const { return pixel_noise_std * pixel_noise_std; }
    double tail_density() const { return 1.0 / (range_max - range_min); }

    void validate() const;
};

/// True if y is a finite depth inside the sensor range.
bool is_valid_depth(double y, double range_min, double range_max);

/// N(y | predicted_depth, std^2)
double body_density(double y, double predicted_depth, const ObservationParams& params);

/// (1 - w) * body + w / (range_max - range_min)
double mixture_density(double y, double predicted_depth, const ObservationParams& params);

/// log of mixture_density(), finite even where the body term underflows.
double log_mixture_density(double y, double predicted_depth, const ObservationParams& params);

}  // namespace rgf
