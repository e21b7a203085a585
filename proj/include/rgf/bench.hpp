#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace rgf
{

struct BenchOptions
{
    std::vector<int> pixels = {768, 1536, 3072, 6144};
    int reps = 50;
    /// The sequential baseline is only timed up to this pixel count.
    int sequential_max_pixels = 3072;
    int sequential_reps = 3;
    /// Size of the affine problem used for the dense-vs-factorized check.
    int dense_pixels = 100;
    std::uint64_t seed = 1;
};

struct BenchRow
{
    int pixels = 0;
    int width = 0;
    int height = 0;
    /// Pixels that actually entered the update.
    std::size_t pixels_used = 0;
    double factorized_seconds = 0.0;     // median
    double predict_update_seconds = 0.0; // median
    double sequential_seconds = -1.0;    // median; negative if not timed
    double sigma_generations_per_update = 0.0;
    double cholesky_per_update = 0.0;
};

struct BenchReport
{
    std::vector<BenchRow> rows;
    /// Least-squares fit factorized_seconds ~ intercept + slope * pixels.
    double slope = 0.0;
    double intercept = 0.0;
    int dense_pixels = 0;
    double dense_seconds = 0.0;
    double dense_factorized_seconds = 0.0;
    /// max |factorized - dense| / max(1, |dense|) over mean and covariance entries.
    double dense_max_rel_diff = 0.0;
};

/// Camera of the benchmark scene for a pixel count; M must be one of
/// 768, 1536, 3072, 6144 or 48 * k^2 for some integer k.
void bench_camera_size(int pixels, int& width, int& height);

BenchReport bench_update(const BenchOptions& options);

/// doubling ratios t(2M)/t(M) for consecutive rows whose pixel counts double.
std::vector<double> doubling_ratios(const BenchReport& report);

void write_bench_csv(std::ostream& out, const BenchReport& report, const std::string& comment);

}  // namespace rgf
