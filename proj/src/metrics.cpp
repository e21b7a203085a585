#include <rgf/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rgf
{

double translational_error(const Pose& est, const Pose& truth)
{
    return (est.position - truth.position).norm();
}

double angular_error(const Eigen::Quaterniond& est, const Eigen::Quaterniond& truth)
{
    const double c = std::abs(est.normalized().dot(truth.normalized()));
    return 2.0 * std::acos(std::min(1.0, c));
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Distribution describe(const std::vector<double>& values)
{
    if (values.empty())
        throw std::invalid_argument("describe: empty set");
    Distribution d;
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    d.median = percentile(values, 0.5);
    d.p90 = percentile(values, 0.9);
    d.p95 = percentile(values, 0.95);
    d.p99 = percentile(values, 0.99);
    d.max = *std::max_element(values.begin(), values.end());
    return d;
}

ErrorStats summarize(const std::vector<TrackRecord>& records, const LossThresholds& loss)
{
    if (records.empty())
        throw std::invalid_argument("summarize: no records");
    std::vector<double> t;
    std::vector<double> a;
    ErrorStats s;
    for (const auto& r : records)
    {
        t.push_back(r.translational_error);
        a.push_back(r.angular_error);
        if (r.translational_error > loss.translational || r.angular_error > loss.angular)
            ++s.track_loss;
    }
    s.frames = records.size();
    s.translational = describe(t);
    s.angular = describe(a);
    return s;
}

void write_histogram_csv(std::ostream& out, const std::vector<double>& values, double upper, int bins)
{
    if (bins < 1 || !(upper > 0.0))
        throw std::invalid_argument("histogram: need bins >= 1 and upper > 0");
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const double width = upper / bins;
    for (double v : values)
    {
        const auto b = static_cast<long>(std::floor(v / width));
        ++counts[static_cast<std::size_t>(std::clamp<long>(b, 0, bins - 1))];
    }
    out << "bin_lo,bin_hi,count\n";
    char buf[128];
    for (int b = 0; b < bins; ++b)
    {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%zu\n", b * width, (b + 1) * width,
                      counts[static_cast<std::size_t>(b)]);
        out << buf;
    }
}

}  // namespace rgf
