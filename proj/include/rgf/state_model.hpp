#pragma once

#include <rgf/gaussian.hpp>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <string>
#include <utility>

namespace rgf
{

/// The tracked state is the 12-vector (delta_r, delta_o, v, omega): position
/// and rotation-vector increments relative to a default pose, followed by the
/// linear (m/frame) and angular (rad/frame) velocities.
inline constexpr Eigen::Index kStateDim = 12;

namespace state_block
{
inline constexpr Eigen::Index kPosition = 0;
inline constexpr Eigen::Index kOrientation = 3;
inline constexpr Eigen::Index kVelocity = 6;
inline constexpr Eigen::Index kAngularVelocity = 9;
}  // namespace state_block

using StateVector = Eigen::Matrix<double, kStateDim, 1>;

/// Rigid pose of the object in the camera frame.
struct Pose
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

    Eigen::Isometry3d isometry() const;
};

/// Which side of the default orientation the rotation increment is applied on.
enum class IncrementSide
{
    kCameraFrame,  // o = exp(delta_o) * o0
    kObjectFrame,  // o = o0 * exp(delta_o)
};

inline constexpr IncrementSide kIncrementSide = IncrementSide::kCameraFrame;

struct ProcessNoiseParams
{
    double sigma_v = 0.001;
    double sigma_omega = 0.01;
};

/// Unit quaternion of a rotation vector.
Eigen::Quaterniond exp_quat(const Eigen::Vector3d& rotation_vector);

/// Rotation vector of a unit quaternion, with angle in [0, pi].
Eigen::Vector3d log_quat(const Eigen::Quaterniond& q);

/// The 12x12 constant-velocity transition matrix.
Eigen::MatrixXd transition_matrix();

/// Closed-form linear prediction A*mu, A*Sigma*A^T + Q.
GaussianBelief predict(const GaussianBelief& belief, const ProcessNoiseParams& noise);

/// Global pose represented by a state relative to its anchor.
Pose apply_state_to_pose(const Pose& anchor, const Eigen::Ref<const Eigen::VectorXd>& state);

/**
 * Moves the anchor to the pose represented by the belief mean and zeroes the
 * pose blocks of the mean. Velocity means and the covariance are unchanged.
 */
std::pair<Pose, GaussianBelief> rezero(const GaussianBelief& belief, const Pose& anchor);

/// "tx ty tz qw qx qy qz"
std::string format_pose(const Pose& pose);

/// Parses format_pose() output; throws std::invalid_argument on malformed input.
Pose parse_pose(const std::string& line);

}  // namespace rgf
