#pragma once

#include <rgf/depth_observation.hpp>
#include <rgf/state_model.hpp>

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rgf
{

/// Triangle soup in the object frame (meters).
struct TriangleMesh
{
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;
};

/// Validates indices and drops zero-area triangles. Throws std::invalid_argument
/// on out-of-range indices.
TriangleMesh make_mesh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles);

/// Reads `v x y z` and `f i j k` lines (1-based, triangles only). Face tokens
/// of the form i/j/k use the vertex index. Everything else is ignored.
TriangleMesh parse_obj(std::istream& in);
TriangleMesh load_obj(const std::string& path);
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void save_obj(const std::string& path, const TriangleMesh& mesh);

/// Axis-aligned box centered at the origin (12 triangles, outward winding).
TriangleMesh make_box(const Eigen::Vector3d& half_extents);

/// Icosphere; subdivisions = 2 gives 320 triangles.
TriangleMesh make_icosphere(double radius, int subdivisions);

/// Axis-aligned rectangle in the plane z = 0 spanning [x0, x1] x [y0, y1].
TriangleMesh make_rectangle(double x0, double x1, double y0, double y1);

inline constexpr double kNoHit = std::numeric_limits<double>::infinity();

/**
 * Precomputed per-triangle data for Moller-Trumbore intersection, plus an
 * object-frame bounding box and per-triangle planes used to reject rays
 * early. The pre-tests never change a result, only skip triangle tests that
 * cannot produce a closer hit.
 */
class MeshRaycaster
{
public:
    explicit MeshRaycaster(const TriangleMesh& mesh);

    /// Smallest positive ray parameter t with origin + t*dir on a triangle,
    /// or kNoHit. Object frame.
    double nearest_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;

    std::size_t triangle_count() const { return v0_.size(); }

private:
    std::vector<Eigen::Vector3d> v0_;
    std::vector<Eigen::Vector3d> e1_;
    std::vector<Eigen::Vector3d> e2_;
    // unnormalized plane normal e1 x e2 and its offset n . v0
    std::vector<Eigen::Vector3d> normal_;
    std::vector<double> plane_offset_;
    Eigen::Vector3d box_min_;
    Eigen::Vector3d box_max_;
};

/// Moller-Trumbore for a single triangle; kNoHit if the ray misses it.
double intersect_triangle(const Eigen::Vector3d& origin,
                          const Eigen::Vector3d& dir,
                          const Eigen::Vector3d& v0,
                          const Eigen::Vector3d& e1,
                          const Eigen::Vector3d& e2);

/// A mesh placed at a pose, queried with camera-frame rays from the origin.
class PosedMesh
{
public:
    PosedMesh(const MeshRaycaster& raycaster, const Pose& pose);

    /// Distance along a unit camera-frame ray to the first surface, or kNoHit.
    double hit_distance(const Eigen::Vector3d& ray) const;

    /// z-depth of the first surface along the ray, or kNoHit.
    double hit_depth(const Eigen::Vector3d& ray) const;

private:
    const MeshRaycaster* raycaster_;
    Eigen::Matrix3d rotation_t_;
    Eigen::Vector3d origin_;
};

/// z-depth seen at a pixel, or nullopt if the ray misses the mesh or the hit
/// lies outside [range_min, range_max].
std::optional<double> raycast_depth(const MeshRaycaster& mesh,
                                    const Pose& pose,
                                    const CameraModel& camera,
                                    std::size_t pixel_index);

/// Unit rays of every pixel of a camera, in row-major order.
std::vector<Eigen::Vector3d> pixel_rays(const CameraModel& camera);

}  // namespace rgf
