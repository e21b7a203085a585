#pragma once

#include <rgf/state_model.hpp>

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

namespace rgf
{

double translational_error(const Pose& est, const Pose& truth);

/// Geodesic angle 2 acos(|<q1, q2>|) in [0, pi].
double angular_error(const Eigen::Quaterniond& est, const Eigen::Quaterniond& truth);

struct TrackRecord
{
    int frame = 0;
    Pose estimate;
    Pose truth;
    double translational_error = 0.0;
    double angular_error = 0.0;
    std::size_t skipped_pixels = 0;
    double update_seconds = 0.0;
    /// Empty when the step succeeded.
    std::string error;
};

struct LossThresholds
{
    double translational = 0.05;
    double angular = 0.5235987755982988;  // 30 degrees
};

struct Distribution
{
    double mean = 0.0;
    double median = 0.0;
    double p90 = 0.0;
    double p95 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
};

struct ErrorStats
{
    std::size_t frames = 0;
    Distribution translational;
    Distribution angular;
    std::size_t track_loss = 0;
};

/// Linear interpolation between order statistics; q in [0, 1].
double percentile(std::vector<double> values, double q);

Distribution describe(const std::vector<double>& values);

/// Throws std::invalid_argument for an empty record list.
ErrorStats summarize(const std::vector<TrackRecord>& records, const LossThresholds& loss = {});

/// `bins` equal-width bins over [0, upper]; values above upper land in the last bin.
/// Rows: bin_lo,bin_hi,count.
void write_histogram_csv(std::ostream& out, const std::vector<double>& values, double upper, int bins);

}  // namespace rgf
