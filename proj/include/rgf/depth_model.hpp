#pragma once

#include <rgf/mesh.hpp>
#include <rgf/state_model.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace rgf
{

/// Predicted depth of one pixel for a fixed state; NaN means the ray misses.
using PixelPredictor = std::function<double(std::size_t pixel)>;

/**
 * Deterministic part d^i(x) of the per-pixel observation model.
 *
 * bind() does whatever per-state work is needed (posing a mesh, ...) and
 * returns a cheap per-pixel query. Implementations are immutable and may be
 * shared between threads.
 */
class DepthModel
{
public:
    virtual ~DepthModel() = default;

    virtual std::size_t pixel_count() const = 0;
    virtual PixelPredictor bind(const Eigen::Ref<const Eigen::VectorXd>& state) const = 0;
};

/// d^i(x): z-depth of the mesh posed at apply_state_to_pose(anchor, x).
/// Hits outside [range_min, range_max] count as misses.
class MeshDepthModel final : public DepthModel
{
public:
    /// `raycaster` and `rays` must outlive the model.
    MeshDepthModel(const MeshRaycaster& raycaster,
                   const Pose& anchor,
                   const std::vector<Eigen::Vector3d>& rays,
                   double range_min,
                   double range_max);

    std::size_t pixel_count() const override { return rays_->size(); }
    PixelPredictor bind(const Eigen::Ref<const Eigen::VectorXd>& state) const override;

private:
    const MeshRaycaster* raycaster_;
    Pose anchor_;
    const std::vector<Eigen::Vector3d>* rays_;
    double range_min_;
    double range_max_;
};

/// d(x) = offset + jacobian * x. Used as a linear-Gaussian surrogate.
class AffineDepthModel final : public DepthModel
{
public:
    AffineDepthModel(Eigen::VectorXd offset, Eigen::MatrixXd jacobian);

    std::size_t pixel_count() const override { return static_cast<std::size_t>(offset_.size()); }
    PixelPredictor bind(const Eigen::Ref<const Eigen::VectorXd>& state) const override;

    const Eigen::VectorXd& offset() const { return offset_; }
    const Eigen::MatrixXd& jacobian() const { return jacobian_; }

private:
    Eigen::VectorXd offset_;
    Eigen::MatrixXd jacobian_;
};

}  // namespace rgf
