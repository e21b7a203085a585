#include <rgf/depth_model.hpp>
#include <rgf/mesh.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rgf;

namespace
{

double brute_force_hit(const TriangleMesh& mesh, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir)
{
    double best = kNoHit;
    for (const auto& t : mesh.triangles)
    {
        const Eigen::Vector3d& a = mesh.vertices[t[0]];
        best = std::min(best, intersect_triangle(origin, dir, a, mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a));
    }
    return best;
}

void expect_matches_brute_force(const TriangleMesh& mesh, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const MeshRaycaster caster(mesh);
    int hits = 0;
    for (int i = 0; i < 1000; ++i)
    {
        const Eigen::Vector3d origin(2.0 * u(rng), 2.0 * u(rng), 2.0 * u(rng) - 3.0);
        const Eigen::Vector3d target(0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng));
        const Eigen::Vector3d dir = (target - origin).normalized();
        const double expected = brute_force_hit(mesh, origin, dir);
        const double got = caster.nearest_hit(origin, dir);
        if (expected == kNoHit)
        {
            EXPECT_EQ(got, kNoHit);
            continue;
        }
        ++hits;
        EXPECT_NEAR(got, expected, 1e-9);
    }
    EXPECT_GT(hits, 300);
}

}  // namespace

TEST(Raycast, FrontalSquare)
{
    const MeshRaycaster square(make_rectangle(-0.5, 0.5, -0.5, 0.5));
    Pose at_one;
    at_one.position = Eigen::Vector3d(0, 0, 1);
    const PosedMesh posed(square, at_one);
    EXPECT_NEAR(posed.hit_depth(Eigen::Vector3d(0, 0, 1)), 1.0, 1e-15);
    EXPECT_EQ(posed.hit_depth(Eigen::Vector3d(0, 0, -1)), kNoHit);
    EXPECT_EQ(posed.hit_depth(Eigen::Vector3d(1, 0, 1).normalized()), kNoHit);
    EXPECT_NEAR(posed.hit_distance(Eigen::Vector3d(0.3, 0, 1).normalized()), std::sqrt(1.09), 1e-12);
}

TEST(Raycast, ConvexMeshMatchesBruteForce)
{
    TriangleMesh ellipsoid = make_icosphere(1.0, 2);
    for (auto& v : ellipsoid.vertices)
        v = v.cwiseProduct(Eigen::Vector3d(0.4, 0.3, 0.2));
    expect_matches_brute_force(ellipsoid, 1);
    expect_matches_brute_force(make_box(Eigen::Vector3d(0.3, 0.2, 0.25)), 2);
}

TEST(Raycast, TriangleSoupMatchesBruteForce)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;
    for (int t = 0; t < 60; ++t)
    {
        const Eigen::Vector3d c(u(rng), u(rng), u(rng));
        for (int k = 0; k < 3; ++k)
            vertices.push_back(c + 0.4 * Eigen::Vector3d(u(rng), u(rng), u(rng)));
        triangles.push_back({3 * t, 3 * t + 1, 3 * t + 2});
    }
    expect_matches_brute_force(make_mesh(vertices, triangles), 4);
}

TEST(Mesh, BuildersAndValidation)
{
    EXPECT_EQ(make_box(Eigen::Vector3d::Ones()).triangles.size(), 12u);
    EXPECT_EQ(make_icosphere(1.0, 2).triangles.size(), 320u);
    EXPECT_THROW(make_mesh({Eigen::Vector3d::Zero()}, {{0, 0, 1}}), std::invalid_argument);
    // a degenerate triangle is dropped
    const TriangleMesh m = make_mesh({Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX(), 2 * Eigen::Vector3d::UnitX()},
                                     {{0, 1, 2}});
    EXPECT_TRUE(m.triangles.empty());
    EXPECT_EQ(MeshRaycaster(m).nearest_hit(Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()), kNoHit);
}

TEST(Mesh, ObjRoundTrip)
{
    const TriangleMesh box = make_box(Eigen::Vector3d(0.1, 0.2, 0.3));
    std::stringstream ss;
    write_obj(ss, box);
    const TriangleMesh back = parse_obj(ss);
    ASSERT_EQ(back.vertices.size(), box.vertices.size());
    ASSERT_EQ(back.triangles, box.triangles);
    for (std::size_t i = 0; i < box.vertices.size(); ++i)
        EXPECT_EQ(back.vertices[i], box.vertices[i]);

    std::stringstream slashed("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n");
    EXPECT_EQ(parse_obj(slashed).triangles.size(), 1u);
}

TEST(DepthModels, MeshAndAffine)
{
    const MeshRaycaster square(make_rectangle(-0.5, 0.5, -0.5, 0.5));
    Pose anchor;
    anchor.position = Eigen::Vector3d(0, 0, 1);
    const std::vector<Eigen::Vector3d> rays = {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 0, 1).normalized()};
    const MeshDepthModel model(square, anchor, rays, 0.5, 7.0);
    StateVector x = StateVector::Zero();
    x(2) = 0.25;
    const PixelPredictor f = model.bind(x);
    EXPECT_NEAR(f(0), 1.25, 1e-15);
    EXPECT_TRUE(std::isnan(f(1)));
    x(2) = 6.5;
    EXPECT_TRUE(std::isnan(model.bind(x)(0)));

    Eigen::MatrixXd j(2, 3);
    j << 1, 2, 3, 4, 5, 6;
    const AffineDepthModel affine(Eigen::Vector2d(1, 2), j);
    const PixelPredictor g = affine.bind(Eigen::Vector3d(1, 0, -1));
    EXPECT_DOUBLE_EQ(g(0), -1.0);
    EXPECT_DOUBLE_EQ(g(1), 0.0);
    EXPECT_THROW(affine.bind(Eigen::Vector2d(0, 0)), std::invalid_argument);
}
