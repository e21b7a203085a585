#pragma once

#include <rgf/config.hpp>
#include <rgf/dataset.hpp>
#include <rgf/gaussian.hpp>
#include <rgf/metrics.hpp>

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace rgf
{

enum class FilterKind
{
    kRgf,
    kGfW0,  // the same filter with tail weight 0
    kPf,
};

/// Accepts rgf, gf0 / gf_w0 and pf.
FilterKind parse_filter_kind(const std::string& name);
std::string to_string(FilterKind kind);

struct TrackingOptions
{
    FilterConfig config;
    FilterKind filter = FilterKind::kRgf;
    /// Re-initialize at the ground truth every this many frames; 0 disables.
    int reset_every = 0;
    /// Only used by the particle filter.
    std::uint64_t seed = 0;
};

/// Zero-mean belief with the configured initial standard deviations.
GaussianBelief initial_belief(const FilterConfig& config);

/**
 * Tracks the sequence from the ground truth at frame 0. Every frame runs
 * predict (skipped at initialization frames), update and re-zeroing, and
 * records the estimate. Frames are downsampled to the configured stride
 * first. Filter exceptions are recorded in TrackRecord::error and the
 * prediction is carried forward.
 */
std::vector<TrackRecord> run_tracking(const SequenceData& data, const TrackingOptions& options);

/// Records CSV (wall times excluded so the file is reproducible).
void write_records_csv(std::ostream& out, const std::vector<TrackRecord>& records, const std::string& comment);
std::vector<TrackRecord> read_records_csv(std::istream& in);

/// frame,update_seconds
void write_timing_csv(std::ostream& out, const std::vector<TrackRecord>& records, const std::string& comment);

}  // namespace rgf
