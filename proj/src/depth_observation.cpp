#include <rgf/depth_observation.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rgf
{

void CameraModel::validate() const
{
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("camera: image size must be positive");
    if (!(fx > 0.0) || !(fy > 0.0))
        throw std::invalid_argument("camera: focal lengths must be positive");
    if (!(range_min > 0.0) || !(range_min < range_max))
        throw std::invalid_argument("camera: need 0 < range_min < range_max");
}

CameraModel downsample(const CameraModel& camera, int stride)
{
    if (stride < 1)
        throw std::invalid_argument("downsample: stride must be >= 1");
    const int phase = stride / 2;
    CameraModel out = camera;
    out.width = (camera.width - phase + stride - 1) / stride;
    out.height = (camera.height - phase + stride - 1) / stride;
    out.fx = camera.fx / stride;
    out.fy = camera.fy / stride;
    out.cx = (camera.cx - phase) / stride;
    out.cy = (camera.cy - phase) / stride;
    return out;
}

Eigen::Vector3d pixel_ray(const CameraModel& camera, std::size_t pixel_index)
{
    const auto u = static_cast<double>(pixel_index % static_cast<std::size_t>(camera.width));
    const auto v = static_cast<double>(pixel_index / static_cast<std::size_t>(camera.width));
    return Eigen::Vector3d((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0).normalized();
}

Eigen::Vector2d project(const CameraModel& camera, const Eigen::Vector3d& point)
{
    return {camera.fx * point.x() / point.z() + camera.cx, camera.fy * point.y() / point.z() + camera.cy};
}

DepthImage downsample(const DepthImage& image, int stride)
{
    if (stride < 1)
        throw std::invalid_argument("downsample: stride must be >= 1");
    const int phase = stride / 2;
    DepthImage out((image.width - phase + stride - 1) / stride, (image.height - phase + stride - 1) / stride);
    for (int v = 0; v < out.height; ++v)
        for (int u = 0; u < out.width; ++u)
            out.at(u, v) = image.at(phase + u * stride, phase + v * stride);
    return out;
}

void ObservationParams::validate() const
{
    if (!(pixel_noise_std > 0.0))
        throw std::invalid_argument("observation: pixel_noise_std must be positive");
    if (!(tail_weight >= 0.0 && tail_weight < 1.0))
        throw std::invalid_argument("observation: tail_weight must lie in [0, 1)");
    if (!(range_min > 0.0) || !(range_min < range_max))
        throw std::invalid_argument("observation: need 0 < range_min < range_max");
}

bool is_valid_depth(double y, double range_min, double range_max)
{
    return std::isfinite(y) && y >= range_min && y <= range_max;
}

double body_density(double y, double predicted_depth, const ObservationParams& params)
{
    const double s = params.pixel_noise_std;
    const double z = (y - predicted_depth) / s;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * s);
}

double mixture_density(double y, double predicted_depth, const ObservationParams& params)
{
    const double w = params.tail_weight;
    return (1.0 - w) * body_density(y, predicted_depth, params) + w * params.tail_density();
}

double log_mixture_density(double y, double predicted_depth, const ObservationParams& params)
{
    const double w = params.tail_weight;
    const double s = params.pixel_noise_std;
    const double z = (y - predicted_depth) / s;
    const double log_body = -0.5 * z * z - std::log(std::sqrt(2.0 * std::numbers::pi) * s);
    if (w <= 0.0)
        return log_body;
    const double log_a = std::log1p(-w) + log_body;
    const double log_b = std::log(w * params.tail_density());
    const double hi = std::max(log_a, log_b);
    return hi + std::log(std::exp(log_a - hi) + std::exp(log_b - hi));
}

}  // namespace rgf
