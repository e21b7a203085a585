#include <rgf/state_model.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace rgf
{

Eigen::Isometry3d Pose::isometry() const
{
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = orientation.toRotationMatrix();
    t.translation() = position;
    return t;
}

Eigen::Quaterniond exp_quat(const Eigen::Vector3d& rotation_vector)
{
    const double angle = rotation_vector.norm();
    if (angle < 1e-12)
    {
        // second-order expansion keeps tiny increments exact to round-off
        Eigen::Quaterniond q(1.0, 0.5 * rotation_vector.x(), 0.5 * rotation_vector.y(),
                             0.5 * rotation_vector.z());
        return q.normalized();
    }
    return Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotation_vector / angle));
}

Eigen::Vector3d log_quat(const Eigen::Quaterniond& q)
{
    Eigen::Quaterniond u = q.normalized();
    if (u.w() < 0.0)
        u.coeffs() = -u.coeffs();
    const double s = u.vec().norm();
    if (s < 1e-12)
        return 2.0 * u.vec();
    const double angle = 2.0 * std::atan2(s, u.w());
    return angle * u.vec() / s;
}

Eigen::MatrixXd transition_matrix()
{
    using namespace state_block;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(kStateDim, kStateDim);
    a.block<3, 3>(kPosition, kVelocity).setIdentity();
    a.block<3, 3>(kOrientation, kAngularVelocity).setIdentity();
    return a;
}

GaussianBelief predict(const GaussianBelief& belief, const ProcessNoiseParams& noise)
{
    using namespace state_block;
    if (belief.dim() != kStateDim)
        throw std::invalid_argument("predict: belief must be 12-dimensional");

    const Eigen::MatrixXd a = transition_matrix();
    GaussianBelief out;
    out.mean = a * belief.mean;
    Eigen::MatrixXd cov = a * belief.cov * a.transpose();
    cov.block<3, 3>(kVelocity, kVelocity).diagonal().array() += noise.sigma_v * noise.sigma_v;
    cov.block<3, 3>(kAngularVelocity, kAngularVelocity).diagonal().array() +=
        noise.sigma_omega * noise.sigma_omega;
    out.cov = symmetrize_psd(cov);
    return out;
}

Pose apply_state_to_pose(const Pose& anchor, const Eigen::Ref<const Eigen::VectorXd>& state)
{
    using namespace state_block;
    Pose pose;
    pose.position = anchor.position + state.segment<3>(kPosition);
    const Eigen::Quaterniond inc = exp_quat(state.segment<3>(kOrientation));
    if constexpr (kIncrementSide == IncrementSide::kCameraFrame)
        pose.orientation = inc * anchor.orientation;
    else
        pose.orientation = anchor.orientation * inc;
    pose.orientation.normalize();
    return pose;
}

std::pair<Pose, GaussianBelief> rezero(const GaussianBelief& belief, const Pose& anchor)
{
    using namespace state_block;
    std::pair<Pose, GaussianBelief> out{apply_state_to_pose(anchor, belief.mean), belief};
    out.second.mean.segment<3>(kPosition).setZero();
    out.second.mean.segment<3>(kOrientation).setZero();
    return out;
}

std::string format_pose(const Pose& pose)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g", pose.position.x(),
                  pose.position.y(), pose.position.z(), pose.orientation.w(), pose.orientation.x(),
                  pose.orientation.y(), pose.orientation.z());
    return buf;
}

Pose parse_pose(const std::string& line)
{
    std::istringstream in(line);
    double v[7];
    for (double& x : v)
    {
        if (!(in >> x))
            throw std::invalid_argument("parse_pose: expected 7 numbers in '" + line + "'");
    }
    Pose p;
    p.position = Eigen::Vector3d(v[0], v[1], v[2]);
    p.orientation = Eigen::Quaterniond(v[3], v[4], v[5], v[6]);
    if (p.orientation.norm() < 1e-6)
        throw std::invalid_argument("parse_pose: zero quaternion");
    p.orientation.normalize();
    return p;
}

}  // namespace rgf
