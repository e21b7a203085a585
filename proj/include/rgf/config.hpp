#pragma once

#include <rgf/depth_observation.hpp>
#include <rgf/state_model.hpp>
#include <rgf/unscented.hpp>

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>

namespace rgf
{

/// Flat `key=value` text. '#' starts a comment; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

struct FilterConfig
{
    double pixel_noise_std = 0.001;
    double tail_weight = 0.1;
    double process_sigma_v = 0.001;
    double process_sigma_omega = 0.01;
    double ut_alpha = 1.0;
    double ut_beta = 2.0;
    double ut_kappa = 0.0;
    double range_min = 0.5;
    double range_max = 7.0;
    int downsample = 10;
    int pf_particles = 200;
    // standard deviations of the initial belief around the ground truth
    double init_sigma_position = 0.001;
    double init_sigma_orientation = 0.01;
    double init_sigma_velocity = 0.001;
    double init_sigma_angular_velocity = 0.01;

    ObservationParams observation() const;
    ProcessNoiseParams process() const;
    UTParams ut() const;
    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
    /// One line, `key=value` pairs separated by spaces, in a fixed order.
    std::string to_string() const;
};

/// Unknown keys and malformed numbers throw std::invalid_argument.
FilterConfig filter_config_from(const KeyValues& kv);
FilterConfig load_filter_config(const std::string& path);

struct SceneConfig
{
    int frames = 300;
    int category = 1;  // 0 static, 1..3 as in category_speed()
    std::string object = "box";  // box, sphere, ellipsoid or a path to an OBJ file
    // box half extents, also the ellipsoid semi-axes
    double box_x = 0.12;
    double box_y = 0.09;
    double box_z = 0.07;
    double sphere_radius = 0.1;
    double depth_noise_std = 0.001;
    double outlier_rate = 0.02;
    double occlusion_fraction = 0.0;  // of the object's silhouette columns; 1 means a full plane
    int occlusion_start = 0;
    int occlusion_end = -1;
    double occluder_depth = 0.6;
    double background_depth = 0.0;  // fronto-parallel wall behind the object; 0 means none
    int width = 640;
    int height = 480;
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
    double range_min = 0.5;
    double range_max = 7.0;
    /// Frames are rendered at every `render_stride`-th pixel of the camera.
    int render_stride = 1;

    CameraModel camera() const;
    void validate() const;
    std::string to_string() const;
};

SceneConfig scene_config_from(const KeyValues& kv);
SceneConfig load_scene_config(const std::string& path);

}  // namespace rgf
