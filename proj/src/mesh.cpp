#include <rgf/mesh.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rgf
{

TriangleMesh make_mesh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles)
{
    TriangleMesh mesh;
    mesh.vertices = std::move(vertices);
    const int n = static_cast<int>(mesh.vertices.size());
    for (const auto& tri : triangles)
    {
        for (int idx : tri)
            if (idx < 0 || idx >= n)
                throw std::invalid_argument("mesh: triangle index out of range");
        const Eigen::Vector3d e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        const Eigen::Vector3d e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        if (e1.cross(e2).norm() > 1e-14)
            mesh.triangles.push_back(tri);
    }
    return mesh;
}

TriangleMesh parse_obj(std::istream& in)
{
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::string line;
    while (std::getline(in, line))
    {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag))
            continue;
        if (tag == "v")
        {
            Eigen::Vector3d v;
            if (!(ls >> v.x() >> v.y() >> v.z()))
                throw std::invalid_argument("obj: malformed vertex line '" + line + "'");
            vertices.push_back(v);
        }
        else if (tag == "f")
        {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok)
                idx.push_back(std::stoi(tok.substr(0, tok.find('/'))));
            if (idx.size() != 3)
                throw std::invalid_argument("obj: only triangular faces are supported");
            triangles.push_back({idx[0] - 1, idx[1] - 1, idx[2] - 1});
        }
    }
    return make_mesh(std::move(vertices), std::move(triangles));
}

TriangleMesh load_obj(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open mesh file " + path);
    return parse_obj(in);
}

void write_obj(std::ostream& out, const TriangleMesh& mesh)
{
    out.precision(17);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void save_obj(const std::string& path, const TriangleMesh& mesh)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write mesh file " + path);
    write_obj(out, mesh);
}

TriangleMesh make_box(const Eigen::Vector3d& h)
{
    std::vector<Eigen::Vector3d> v;
    for (int i = 0; i < 8; ++i)
        v.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    std::vector<std::array<int, 3>> t = {
        {0, 2, 1}, {1, 2, 3},  // -z
        {4, 5, 6}, {5, 7, 6},  // +z
        {0, 1, 4}, {1, 5, 4},  // -y
        {2, 6, 3}, {3, 6, 7},  // +y
        {0, 4, 2}, {2, 4, 6},  // -x
        {1, 3, 5}, {3, 7, 5},  // +x
    };
    return make_mesh(std::move(v), std::move(t));
}

TriangleMesh make_icosphere(double radius, int subdivisions)
{
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> v = {
        {-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
        {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1},
    };
    for (auto& x : v)
        x.normalize();
    std::vector<std::array<int, 3>> f = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
        {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    for (int s = 0; s < subdivisions; ++s)
    {
        std::map<std::pair<int, int>, int> midpoints;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoints.find(key); it != midpoints.end())
                return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(f.size() * 4);
        for (const auto& t : f)
        {
            const int a = midpoint(t[0], t[1]);
            const int b = midpoint(t[1], t[2]);
            const int c = midpoint(t[2], t[0]);
            next.push_back({t[0], a, c});
            next.push_back({t[1], b, a});
            next.push_back({t[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    for (auto& x : v)
        x *= radius;
    return make_mesh(std::move(v), std::move(f));
}

TriangleMesh make_rectangle(double x0, double x1, double y0, double y1)
{
    std::vector<Eigen::Vector3d> v = {{x0, y0, 0}, {x1, y0, 0}, {x0, y1, 0}, {x1, y1, 0}};
    return make_mesh(std::move(v), {{0, 2, 1}, {1, 2, 3}});
}

double intersect_triangle(const Eigen::Vector3d& origin,
                          const Eigen::Vector3d& dir,
                          const Eigen::Vector3d& v0,
                          const Eigen::Vector3d& e1,
                          const Eigen::Vector3d& e2)
{
    constexpr double kParallel = 1e-14;
    const Eigen::Vector3d p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < kParallel)
        return kNoHit;
    const double inv_det = 1.0 / det;
    const Eigen::Vector3d s = origin - v0;
    const double u = s.dot(p) * inv_det;
    if (u < 0.0 || u > 1.0)
        return kNoHit;
    const Eigen::Vector3d q = s.cross(e1);
    const double v = dir.dot(q) * inv_det;
    if (v < 0.0 || u + v > 1.0)
        return kNoHit;
    const double t = e2.dot(q) * inv_det;
    return t > 0.0 ? t : kNoHit;
}

MeshRaycaster::MeshRaycaster(const TriangleMesh& mesh)
    : box_min_(Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity())),
      box_max_(Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity()))
{
    v0_.reserve(mesh.triangles.size());
    e1_.reserve(mesh.triangles.size());
    e2_.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles)
    {
        const auto& a = mesh.vertices[t[0]];
        v0_.push_back(a);
        e1_.push_back(mesh.vertices[t[1]] - a);
        e2_.push_back(mesh.vertices[t[2]] - a);
        normal_.push_back(e1_.back().cross(e2_.back()));
        plane_offset_.push_back(normal_.back().dot(a));
        for (int k = 0; k < 3; ++k)
        {
            box_min_ = box_min_.cwiseMin(mesh.vertices[t[k]]);
            box_max_ = box_max_.cwiseMax(mesh.vertices[t[k]]);
        }
    }
    // pad so that hits exactly on the boundary are never culled
    const Eigen::Vector3d pad = 1e-9 * (Eigen::Vector3d::Ones() + box_max_.cwiseAbs() + box_min_.cwiseAbs());
    box_min_ -= pad;
    box_max_ += pad;
}

double MeshRaycaster::nearest_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const
{
    if (v0_.empty())
        return kNoHit;

    // slab test against the bounding box
    double t_near = 0.0;
    double t_far = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k)
    {
        if (dir[k] == 0.0)
        {
            if (origin[k] < box_min_[k] || origin[k] > box_max_[k])
                return kNoHit;
            continue;
        }
        const double inv = 1.0 / dir[k];
        double t0 = (box_min_[k] - origin[k]) * inv;
        double t1 = (box_max_[k] - origin[k]) * inv;
        if (t0 > t1)
            std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far)
            return kNoHit;
    }

    // a triangle is only tested if its plane is hit in front of the origin
    // and not clearly behind the best hit so far; the margin absorbs the
    // rounding difference between the plane and Moller-Trumbore distances
    constexpr double kMargin = 1e-9;
    double best = kNoHit;
    for (std::size_t i = 0; i < v0_.size(); ++i)
    {
        const double denom = normal_[i].dot(dir);
        if (denom == 0.0)
            continue;
        const double t_plane = (plane_offset_[i] - normal_[i].dot(origin)) / denom;
        if (t_plane < -kMargin * (1.0 + std::abs(t_plane)) || t_plane > best + kMargin * (1.0 + t_plane))
            continue;
        best = std::min(best, intersect_triangle(origin, dir, v0_[i], e1_[i], e2_[i]));
    }
    return best;
}

PosedMesh::PosedMesh(const MeshRaycaster& raycaster, const Pose& pose)
    : raycaster_(&raycaster),
      rotation_t_(pose.orientation.toRotationMatrix().transpose()),
      origin_(-(rotation_t_ * pose.position))
{
}

double PosedMesh::hit_distance(const Eigen::Vector3d& ray) const
{
    return raycaster_->nearest_hit(origin_, rotation_t_ * ray);
}

double PosedMesh::hit_depth(const Eigen::Vector3d& ray) const
{
    const double t = hit_distance(ray);
    return t == kNoHit ? kNoHit : t * ray.z();
}

std::optional<double> raycast_depth(const MeshRaycaster& mesh,
                                    const Pose& pose,
                                    const CameraModel& camera,
                                    std::size_t pixel_index)
{
    const double z = PosedMesh(mesh, pose).hit_depth(pixel_ray(camera, pixel_index));
    if (!is_valid_depth(z, camera.range_min, camera.range_max))
        return std::nullopt;
    return z;
}

std::vector<Eigen::Vector3d> pixel_rays(const CameraModel& camera)
{
    std::vector<Eigen::Vector3d> rays(camera.pixel_count());
    for (std::size_t i = 0; i < rays.size(); ++i)
        rays[i] = pixel_ray(camera, i);
    return rays;
}

}  // namespace rgf
