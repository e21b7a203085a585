#include <rgf/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace rgf
{
namespace
{

// second-order walk: correlated acceleration drives a damped, sprung velocity
constexpr double kAccelCorrelation = 0.85;
constexpr double kDamping = 0.93;
constexpr double kSpring = 0.01;
constexpr int kRotationScaleIterations = 8;

std::vector<Eigen::Vector3d> damped_walk(int frames, std::mt19937_64& rng, const Eigen::Vector3d& axis_scale)
{
    std::normal_distribution<double> normal;
    std::vector<Eigen::Vector3d> offsets(static_cast<std::size_t>(frames), Eigen::Vector3d::Zero());
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d accel = Eigen::Vector3d::Zero();
    for (int t = 1; t < frames; ++t)
    {
        const Eigen::Vector3d noise(normal(rng), normal(rng), normal(rng));
        const auto& prev = offsets[static_cast<std::size_t>(t) - 1];
        accel = kAccelCorrelation * accel + noise.cwiseProduct(axis_scale);
        velocity = kDamping * velocity - kSpring * prev + accel;
        offsets[static_cast<std::size_t>(t)] = prev + velocity;
    }
    return offsets;
}

double angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b)
{
    return 2.0 * std::acos(std::min(1.0, std::abs(a.dot(b))));
}

}  // namespace

void NoiseSpec::validate() const
{
    if (!(depth_noise_std >= 0.0))
        throw std::invalid_argument("noise: depth_noise_std must be non-negative");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0))
        throw std::invalid_argument("noise: outlier_rate must lie in [0, 1]");
}

SpeedTarget category_speed(int category)
{
    constexpr double deg = std::numbers::pi / 180.0;
    switch (category)
    {
    case 0:
        return {0.0, 0.0};
    case 1:
        return {0.05, 10.0 * deg};
    case 2:
        return {0.11, 25.0 * deg};
    case 3:
        return {0.21, 50.0 * deg};
    default:
        throw std::invalid_argument("unknown motion category " + std::to_string(category));
    }
}

SpeedTarget measure_speed(const std::vector<Pose>& trajectory)
{
    SpeedTarget s;
    if (trajectory.size() < 2)
        return s;
    for (std::size_t t = 1; t < trajectory.size(); ++t)
    {
        s.translational += (trajectory[t].position - trajectory[t - 1].position).norm();
        s.rotational += angle_between(trajectory[t].orientation, trajectory[t - 1].orientation);
    }
    const double steps = static_cast<double>(trajectory.size() - 1);
    s.translational *= kFrameRate / steps;
    s.rotational *= kFrameRate / steps;
    return s;
}

Pose default_object_pose()
{
    Pose p;
    p.position = Eigen::Vector3d(0.0, 0.0, 0.95);
    p.orientation = exp_quat(Eigen::Vector3d(0.5, 0.6, 0.1));
    return p;
}

std::vector<Pose> make_trajectory(int category, int frames, std::uint64_t seed, const Pose& center)
{
    if (frames < 2)
        throw std::invalid_argument("make_trajectory: need at least two frames");
    const SpeedTarget target = category_speed(category);
    std::vector<Pose> traj(static_cast<std::size_t>(frames), center);
    if (category == 0)
        return traj;

    std::mt19937_64 rng(seed);
    const std::vector<Eigen::Vector3d> shift = damped_walk(frames, rng, Eigen::Vector3d(1.0, 1.0, 0.5));
    const std::vector<Eigen::Vector3d> spin = damped_walk(frames, rng, Eigen::Vector3d::Ones());

    double path = 0.0;
    for (int t = 1; t < frames; ++t)
        path += (shift[static_cast<std::size_t>(t)] - shift[static_cast<std::size_t>(t) - 1]).norm();
    const double steps = static_cast<double>(frames - 1);
    const double shift_scale = path > 0.0 ? target.translational * steps / (kFrameRate * path) : 0.0;
    for (std::size_t t = 0; t < traj.size(); ++t)
        traj[t].position = center.position + shift_scale * shift[t];

    // the geodesic speed is only approximately linear in the rotation-vector scale
    double spin_scale = 1.0;
    for (int it = 0; it < kRotationScaleIterations; ++it)
    {
        for (std::size_t t = 0; t < traj.size(); ++t)
            traj[t].orientation = (exp_quat(spin_scale * spin[t]) * center.orientation).normalized();
        const double measured = measure_speed(traj).rotational;
        if (measured <= 0.0)
            break;
        spin_scale *= target.rotational / measured;
    }
    for (std::size_t t = 0; t < traj.size(); ++t)
        traj[t].orientation = (exp_quat(spin_scale * spin[t]) * center.orientation).normalized();
    return traj;
}

DepthImage render_depth(const Scene& scene, int frame)
{
    if (frame < 0 || static_cast<std::size_t>(frame) >= scene.trajectory.size())
        throw std::out_of_range("render_depth: frame outside the trajectory");
    const CameraModel& cam = scene.camera;

    const MeshRaycaster object(scene.object_mesh);
    std::vector<MeshRaycaster> occluder_casters;
    std::vector<Pose> occluder_poses;
    for (const auto& occ : scene.occluders)
    {
        if (!occ.active(frame))
            continue;
        occluder_casters.emplace_back(occ.mesh);
        occluder_poses.push_back(occ.pose);
    }
    std::vector<PosedMesh> posed;
    posed.emplace_back(object, scene.trajectory[static_cast<std::size_t>(frame)]);
    for (std::size_t k = 0; k < occluder_casters.size(); ++k)
        posed.emplace_back(occluder_casters[k], occluder_poses[k]);

    DepthImage image(cam.width, cam.height);
    for (std::size_t i = 0; i < image.size(); ++i)
    {
        const Eigen::Vector3d ray = pixel_ray(cam, i);
        double z = kNoHit;
        for (const auto& p : posed)
            z = std::min(z, p.hit_depth(ray));
        if (is_valid_depth(z, cam.range_min, cam.range_max))
            image.depth[i] = z;
    }
    return image;
}

DepthImage corrupt(const DepthImage& image, const NoiseSpec& spec, const CameraModel& camera, int frame)
{
    spec.validate();
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(frame)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> range(camera.range_min, camera.range_max);
    std::normal_distribution<double> normal;

    DepthImage out = image;
    for (double& y : out.depth)
    {
        if (!is_valid_depth(y, camera.range_min, camera.range_max))
            continue;
        // always draw the same number of variates per pixel
        const double u = unit(rng);
        const double outlier = range(rng);
        const double n = normal(rng);
        if (u < spec.outlier_rate)
            y = outlier;
        else
            y = std::clamp(y + spec.depth_noise_std * n, camera.range_min, camera.range_max);
    }
    return out;
}

Occluder make_column_occluder(const CameraModel& camera,
                              const DepthImage& object_only,
                              double fraction,
                              double z,
                              int first_frame,
                              int last_frame)
{
    if (object_only.width != camera.width || object_only.height != camera.height)
        throw std::invalid_argument("make_column_occluder: image does not match the camera");
    int u_min = camera.width;
    int u_max = -1;
    for (int v = 0; v < object_only.height; ++v)
        for (int u = 0; u < object_only.width; ++u)
            if (std::isfinite(object_only.at(u, v)))
            {
                u_min = std::min(u_min, u);
                u_max = std::max(u_max, u);
            }
    if (u_max < 0)
        throw std::invalid_argument("make_column_occluder: object not visible");

    const int columns = u_max - u_min + 1;
    const int covered = static_cast<int>(std::lround(fraction * columns));
    const double u_edge = u_min + covered - 0.5;
    const double x_edge = (u_edge - camera.cx) / camera.fx * z;
    const double x_far = (-1.0 - camera.cx) / camera.fx * z;
    const double y_lo = (-1.0 - camera.cy) / camera.fy * z;
    const double y_hi = (camera.height - camera.cy) / camera.fy * z;

    Occluder occ;
    occ.mesh = make_rectangle(x_far, x_edge, y_lo, y_hi);
    occ.pose.position = Eigen::Vector3d(0.0, 0.0, z);
    occ.first_frame = first_frame;
    occ.last_frame = last_frame;
    return occ;
}

Occluder make_full_occluder(const CameraModel& camera, double z, int first_frame, int last_frame)
{
    Occluder occ;
    occ.mesh = make_rectangle((-1.0 - camera.cx) / camera.fx * z, (camera.width - camera.cx) / camera.fx * z,
                              (-1.0 - camera.cy) / camera.fy * z, (camera.height - camera.cy) / camera.fy * z);
    occ.pose.position = Eigen::Vector3d(0.0, 0.0, z);
    occ.first_frame = first_frame;
    occ.last_frame = last_frame;
    return occ;
}

}  // namespace rgf
