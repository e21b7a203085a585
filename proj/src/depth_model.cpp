#include <rgf/depth_model.hpp>

#include <limits>
#include <memory>
#include <stdexcept>

namespace rgf
{

MeshDepthModel::MeshDepthModel(const MeshRaycaster& raycaster,
                               const Pose& anchor,
                               const std::vector<Eigen::Vector3d>& rays,
                               double range_min,
                               double range_max)
    : raycaster_(&raycaster), anchor_(anchor), rays_(&rays), range_min_(range_min), range_max_(range_max)
{
}

PixelPredictor MeshDepthModel::bind(const Eigen::Ref<const Eigen::VectorXd>& state) const
{
    auto posed = std::make_shared<const PosedMesh>(*raycaster_, apply_state_to_pose(anchor_, state));
    return [posed, rays = rays_, lo = range_min_, hi = range_max_](std::size_t pixel) {
        const double z = posed->hit_depth((*rays)[pixel]);
        return is_valid_depth(z, lo, hi) ? z : std::numeric_limits<double>::quiet_NaN();
    };
}

AffineDepthModel::AffineDepthModel(Eigen::VectorXd offset, Eigen::MatrixXd jacobian)
    : offset_(std::move(offset)), jacobian_(std::move(jacobian))
{
    if (jacobian_.rows() != offset_.size())
        throw std::invalid_argument("AffineDepthModel: offset/jacobian row mismatch");
}

PixelPredictor AffineDepthModel::bind(const Eigen::Ref<const Eigen::VectorXd>& state) const
{
    if (state.size() != jacobian_.cols())
        throw std::invalid_argument("AffineDepthModel: state dimension mismatch");
    auto depths = std::make_shared<const Eigen::VectorXd>(offset_ + jacobian_ * state);
    return [depths](std::size_t pixel) { return (*depths)(static_cast<Eigen::Index>(pixel)); };
}

}  // namespace rgf
