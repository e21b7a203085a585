#include <rgf/bench.hpp>

#include <rgf/baselines.hpp>
#include <rgf/depth_model.hpp>
#include <rgf/gaussian.hpp>
#include <rgf/robust_update.hpp>
#include <rgf/simulator.hpp>
#include <rgf/state_model.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace rgf
{
namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

GaussianBelief bench_prior()
{
    Eigen::VectorXd sd(kStateDim);
    sd << 0.002, 0.002, 0.002, 0.02, 0.02, 0.02, 0.001, 0.001, 0.001, 0.01, 0.01, 0.01;
    return {Eigen::VectorXd::Zero(kStateDim), sd.array().square().matrix().asDiagonal()};
}

// a large tilted slab that covers the whole field of view
struct BenchScene
{
    CameraModel camera;
    TriangleMesh mesh;
    Pose anchor;
    DepthImage image;
};

BenchScene make_bench_scene(int pixels, std::uint64_t seed)
{
    BenchScene s;
    bench_camera_size(pixels, s.camera.width, s.camera.height);
    s.camera.fx = s.camera.fy = 52.5 * s.camera.width / 64.0;
    s.camera.cx = 0.5 * (s.camera.width - 1);
    s.camera.cy = 0.5 * (s.camera.height - 1);
    s.mesh = make_box(Eigen::Vector3d(3.0, 3.0, 0.1));
    s.anchor.position = Eigen::Vector3d(0.0, 0.0, 1.6);
    s.anchor.orientation = exp_quat(Eigen::Vector3d(0.2, 0.1, 0.0));

    StateVector offset = StateVector::Zero();
    offset.head<6>() << 0.002, -0.001, 0.002, 0.01, -0.01, 0.005;
    Scene scene{s.mesh, {}, {apply_state_to_pose(s.anchor, offset)}, s.camera};
    s.image = corrupt(render_depth(scene, 0), NoiseSpec{0.001, 0.02, seed}, s.camera);
    return s;
}

}  // namespace

void bench_camera_size(int pixels, int& width, int& height)
{
    switch (pixels)
    {
    case 768:
        width = 32, height = 24;
        return;
    case 1536:
        width = 48, height = 32;
        return;
    case 3072:
        width = 64, height = 48;
        return;
    case 6144:
        width = 96, height = 64;
        return;
    default:
        break;
    }
    const int k = static_cast<int>(std::lround(std::sqrt(pixels / 48.0)));
    if (k < 1 || 48 * k * k != pixels)
        throw std::invalid_argument("bench: unsupported pixel count " + std::to_string(pixels));
    width = 8 * k;
    height = 6 * k;
}

BenchReport bench_update(const BenchOptions& options)
{
    if (options.reps < 1)
        throw std::invalid_argument("bench: reps must be >= 1");
    BenchReport report;
    const ObservationParams params;
    const ProcessNoiseParams process;
    const GaussianBelief prior = bench_prior();

    for (int m : options.pixels)
    {
        const BenchScene scene = make_bench_scene(m, options.seed);
        const MeshRaycaster mesh(scene.mesh);
        const std::vector<Eigen::Vector3d> rays = pixel_rays(scene.camera);
        const MeshDepthModel model(mesh, scene.anchor, rays, params.range_min, params.range_max);

        BenchRow row;
        row.pixels = m;
        row.width = scene.camera.width;
        row.height = scene.camera.height;

        // warm-up also records how many pixels are used
        row.pixels_used = update(prior, model, scene.image.depth, params).diagnostics.pixels_used;

        std::vector<double> t_update;
        std::vector<double> t_total;
        const auto gen0 = sigma_point_generation_count();
        const auto chol0 = cholesky_sqrt_count();
        for (int r = 0; r < options.reps; ++r)
        {
            auto start = Clock::now();
            const UpdateResult res = update(prior, model, scene.image.depth, params);
            t_update.push_back(seconds_since(start));

            start = Clock::now();
            const GaussianBelief predicted = predict(res.belief, process);
            const UpdateResult res2 = update(predicted, model, scene.image.depth, params);
            t_total.push_back(seconds_since(start));
            if (!res2.belief.mean.allFinite())
                throw std::runtime_error("bench: non-finite posterior");
        }
        const double updates = 2.0 * options.reps;
        row.sigma_generations_per_update = static_cast<double>(sigma_point_generation_count() - gen0) / updates;
        row.cholesky_per_update = static_cast<double>(cholesky_sqrt_count() - chol0) / updates;
        row.factorized_seconds = median(t_update);
        row.predict_update_seconds = median(t_total);

        if (m <= options.sequential_max_pixels && options.sequential_reps > 0)
        {
            std::vector<double> t_seq;
            for (int r = 0; r < options.sequential_reps; ++r)
            {
                const auto start = Clock::now();
                const GaussianBelief post = sequential_gf_update(prior, model, scene.image.depth, params,
                                                                 SequentialMeasurement::kFeature);
                t_seq.push_back(seconds_since(start));
                if (!post.mean.allFinite())
                    throw std::runtime_error("bench: non-finite sequential posterior");
            }
            row.sequential_seconds = median(t_seq);
        }
        report.rows.push_back(row);
    }

    if (report.rows.size() >= 2)
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(report.rows.size());
        for (const auto& r : report.rows)
        {
            sx += r.pixels;
            sy += r.factorized_seconds;
            sxx += static_cast<double>(r.pixels) * r.pixels;
            sxy += r.pixels * r.factorized_seconds;
        }
        report.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        report.intercept = (sy - report.slope * sx) / n;
    }

    if (options.dense_pixels > 0)
    {
        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> normal;
        const auto md = static_cast<Eigen::Index>(options.dense_pixels);
        Eigen::VectorXd offset(md);
        Eigen::MatrixXd jac(md, kStateDim);
        Eigen::VectorXd y(md);
        for (Eigen::Index i = 0; i < md; ++i)
        {
            offset(i) = 1.0 + 0.1 * normal(rng);
            for (Eigen::Index j = 0; j < kStateDim; ++j)
                jac(i, j) = normal(rng);
            y(i) = offset(i) + 0.001 * normal(rng);
        }
        const AffineDepthModel affine(offset, jac);
        ObservationParams raw = params;
        raw.tail_weight = 0.0;
        raw.range_max = 100.0;

        auto start = Clock::now();
        const GaussianBelief dense = dense_gf_update(prior, affine, y, raw.noise_variance());
        report.dense_seconds = seconds_since(start);
        start = Clock::now();
        const GaussianBelief fact =
            update(prior, affine, std::span<const double>(y.data(), static_cast<std::size_t>(md)), raw).belief;
        report.dense_factorized_seconds = seconds_since(start);
        report.dense_pixels = options.dense_pixels;

        double diff = 0.0;
        for (Eigen::Index i = 0; i < kStateDim; ++i)
        {
            diff = std::max(diff, std::abs(fact.mean(i) - dense.mean(i)) / std::max(1.0, std::abs(dense.mean(i))));
            for (Eigen::Index j = 0; j < kStateDim; ++j)
                diff = std::max(diff,
                                std::abs(fact.cov(i, j) - dense.cov(i, j)) / std::max(1.0, std::abs(dense.cov(i, j))));
        }
        report.dense_max_rel_diff = diff;
    }
    return report;
}

std::vector<double> doubling_ratios(const BenchReport& report)
{
    std::vector<double> out;
    for (std::size_t i = 1; i < report.rows.size(); ++i)
        if (report.rows[i].pixels == 2 * report.rows[i - 1].pixels)
            out.push_back(report.rows[i].factorized_seconds / report.rows[i - 1].factorized_seconds);
    return out;
}

void write_bench_csv(std::ostream& out, const BenchReport& report, const std::string& comment)
{
    out << "# " << comment << '\n';
    char buf[512];
    std::snprintf(buf, sizeof(buf), "# linear fit: seconds = %.6g + %.6g * pixels; dense M=%d %.6g s vs factorized %.6g s, max rel diff %.3g\n",
                  report.intercept, report.slope, report.dense_pixels, report.dense_seconds,
                  report.dense_factorized_seconds, report.dense_max_rel_diff);
    out << buf;
    out << "pixels,width,height,pixels_used,factorized_s,predict_update_s,sequential_s,sequential_over_factorized,"
           "sigma_generations_per_update,cholesky_per_update\n";
    for (const auto& r : report.rows)
    {
        const double ratio = r.sequential_seconds > 0.0 ? r.sequential_seconds / r.factorized_seconds : -1.0;
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%zu,%.6g,%.6g,%.6g,%.4g,%.4g,%.4g\n", r.pixels, r.width, r.height,
                      r.pixels_used, r.factorized_seconds, r.predict_update_seconds, r.sequential_seconds, ratio,
                      r.sigma_generations_per_update, r.cholesky_per_update);
        out << buf;
    }
}

}  // namespace rgf
