// rgftrack: simulate depth sequences, track them, evaluate and benchmark.

#include <rgf/bench.hpp>
#include <rgf/config.hpp>
#include <rgf/dataset.hpp>
#include <rgf/metrics.hpp>
#include <rgf/tracking.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rgf;

namespace
{

std::ofstream open_out(const std::string& path)
{
    const fs::path p(path);
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    return out;
}

int cmd_simulate(const std::string& scene_path, const std::string& out_dir, std::uint64_t seed)
{
    const SceneConfig scene = load_scene_config(scene_path);
    const SequenceData data = simulate_sequence(scene, seed);
    write_sequence(out_dir, data, "scene " + scene.to_string() + " seed=" + std::to_string(seed));
    std::printf("wrote %zu frames (%dx%d) to %s\n", data.frames.size(), data.camera.width, data.camera.height,
                out_dir.c_str());
    return 0;
}

int cmd_track(const std::string& data_dir,
              const std::string& filter,
              const std::string& config_path,
              const std::string& out_csv,
              int reset_every,
              std::uint64_t seed)
{
    TrackingOptions options;
    options.config = config_path.empty() ? FilterConfig{} : load_filter_config(config_path);
    options.filter = parse_filter_kind(filter);
    options.reset_every = reset_every;
    options.seed = seed;

    const SequenceData data = read_sequence(data_dir);
    const std::vector<TrackRecord> records = run_tracking(data, options);

    const std::string comment = "config " + options.config.to_string() + " filter=" + to_string(options.filter) +
                                " reset_every=" + std::to_string(reset_every) + " seed=" + std::to_string(seed);
    auto out = open_out(out_csv);
    write_records_csv(out, records, comment);
    auto timing = open_out(out_csv + ".timing.csv");
    write_timing_csv(timing, records, comment);

    const ErrorStats s = summarize(records);
    std::printf("%s: %zu frames, median %.4f m / %.3f deg, mean %.4f m / %.3f deg, track loss %zu\n",
                to_string(options.filter).c_str(), s.frames, s.translational.median,
                s.angular.median * 180.0 / 3.141592653589793, s.translational.mean,
                s.angular.mean * 180.0 / 3.141592653589793, s.track_loss);
    return 0;
}

int cmd_eval(const std::vector<std::string>& record_paths, const std::string& out_dir)
{
    fs::create_directories(out_dir);
    auto stats = open_out((fs::path(out_dir) / "stats.csv").string());
    for (const auto& path : record_paths)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open " + path);
        std::string first;
        std::getline(in, first);
        stats << "# " << fs::path(path).filename().string() << ": "
              << (first.rfind("# ", 0) == 0 ? first.substr(2) : first) << '\n';
    }
    stats << "records,frames,trans_mean_m,trans_median_m,trans_p90_m,trans_p95_m,trans_p99_m,trans_max_m,"
             "ang_mean_rad,ang_median_rad,ang_p90_rad,ang_p95_rad,ang_p99_rad,ang_max_rad,track_loss\n";

    for (const auto& path : record_paths)
    {
        std::ifstream in(path);
        std::string comment;
        std::getline(in, comment);
        in.seekg(0);
        const std::vector<TrackRecord> records = read_records_csv(in);
        const ErrorStats s = summarize(records);
        const std::string stem = fs::path(path).stem().string();

        char buf[1024];
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n",
                      stem.c_str(), s.frames, s.translational.mean, s.translational.median, s.translational.p90,
                      s.translational.p95, s.translational.p99, s.translational.max, s.angular.mean,
                      s.angular.median, s.angular.p90, s.angular.p95, s.angular.p99, s.angular.max, s.track_loss);
        stats << buf;

        std::vector<double> t;
        std::vector<double> a;
        for (const auto& r : records)
        {
            t.push_back(r.translational_error);
            a.push_back(r.angular_error);
        }
        auto th = open_out((fs::path(out_dir) / (stem + "_translational_hist.csv")).string());
        th << comment << '\n';
        write_histogram_csv(th, t, 0.05, 50);
        auto ah = open_out((fs::path(out_dir) / (stem + "_angular_hist.csv")).string());
        ah << comment << '\n';
        write_histogram_csv(ah, a, 0.5235987755982988, 60);

        std::printf("%s: median %.4f m / %.3f deg, mean %.4f m / %.3f deg\n", stem.c_str(), s.translational.median,
                    s.angular.median * 180.0 / 3.141592653589793, s.translational.mean,
                    s.angular.mean * 180.0 / 3.141592653589793);
    }
    return 0;
}

int cmd_bench(const std::vector<int>& pixels, int reps, int seq_reps, std::uint64_t seed, const std::string& out_csv)
{
    BenchOptions options;
    options.pixels = pixels;
    options.reps = reps;
    options.sequential_reps = seq_reps;
    options.seed = seed;
    const BenchReport report = bench_update(options);

    std::string comment = "bench reps=" + std::to_string(reps) + " sequential_reps=" + std::to_string(seq_reps) +
                          " seed=" + std::to_string(seed) + " pixels=";
    for (std::size_t i = 0; i < pixels.size(); ++i)
        comment += (i ? ";" : "") + std::to_string(pixels[i]);
    auto out = open_out(out_csv);
    write_bench_csv(out, report, comment);

    for (const auto& r : report.rows)
    {
        std::printf("M=%5d  factorized %8.3f ms  predict+update %8.3f ms", r.pixels, 1e3 * r.factorized_seconds,
                    1e3 * r.predict_update_seconds);
        if (r.sequential_seconds > 0.0)
            std::printf("  sequential %9.3f ms (x%.1f)", 1e3 * r.sequential_seconds,
                        r.sequential_seconds / r.factorized_seconds);
        std::printf("  sigma sets/update %.2f\n", r.sigma_generations_per_update);
    }
    for (double ratio : doubling_ratios(report))
        std::printf("doubling ratio %.3f\n", ratio);
    std::printf("fit: %.3g s + %.3g s/pixel\n", report.intercept, report.slope);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Depth-image object tracking with a robust Gaussian filter"};
    app.require_subcommand(1);

    std::string scene_path;
    std::string sim_out;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "render a synthetic depth sequence");
    simulate->add_option("--scene", scene_path, "scene config (key=value)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim_out, "output dataset directory")->required();
    simulate->add_option("--seed", sim_seed, "random seed");

    std::string data_dir;
    std::string filter = "rgf";
    std::string config_path;
    std::string track_out;
    int reset_every = 0;
    std::uint64_t track_seed = 0;
    auto* track = app.add_subcommand("track", "run a filter over a dataset");
    track->add_option("--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
    track->add_option("--filter", filter, "rgf, gf0 or pf")->check(CLI::IsMember({"rgf", "gf0", "gf_w0", "pf"}));
    track->add_option("--config", config_path, "filter config (key=value)")->check(CLI::ExistingFile);
    track->add_option("--out", track_out, "records CSV")->required();
    track->add_option("--reset-every", reset_every, "re-initialize at ground truth every N frames (0: never)")
        ->check(CLI::NonNegativeNumber);
    track->add_option("--seed", track_seed, "particle filter seed");

    std::vector<std::string> records;
    std::string eval_out;
    auto* eval = app.add_subcommand("eval", "error statistics and histograms");
    eval->add_option("--records", records, "records CSV files")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", eval_out, "output directory")->required();

    std::vector<int> pixels = {768, 1536, 3072, 6144};
    int reps = 50;
    int seq_reps = 3;
    std::uint64_t bench_seed = 1;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "time the measurement updates");
    bench->add_option("--pixels", pixels, "pixel counts")->delimiter(',');
    bench->add_option("--reps", reps, "repetitions per pixel count")->check(CLI::PositiveNumber);
    bench->add_option("--sequential-reps", seq_reps, "repetitions of the sequential baseline (0: skip)")
        ->check(CLI::NonNegativeNumber);
    bench->add_option("--seed", bench_seed, "noise seed");
    bench->add_option("--out", bench_out, "timing CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*simulate)
            return cmd_simulate(scene_path, sim_out, sim_seed);
        if (*track)
            return cmd_track(data_dir, filter, config_path, track_out, reset_every, track_seed);
        if (*eval)
            return cmd_eval(records, eval_out);
        if (*bench)
            return cmd_bench(pixels, reps, seq_reps, bench_seed, bench_out);
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
