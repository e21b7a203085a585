#include <rgf/tracking.hpp>

#include <rgf/baselines.hpp>
#include <rgf/depth_model.hpp>
#include <rgf/robust_update.hpp>

#include <chrono>
#include <cstdio>
#include <sstream>
#include <tuple>
#include <stdexcept>

namespace rgf
{
namespace
{

struct Prepared
{
    CameraModel camera;
    std::vector<DepthImage> frames;
};

Prepared prepare_frames(const SequenceData& data, const FilterConfig& config)
{
    if (config.downsample % data.stride != 0)
        throw std::invalid_argument("downsample " + std::to_string(config.downsample) +
                                    " is not a multiple of the stored stride " + std::to_string(data.stride));
    const int stride = config.downsample / data.stride;
    Prepared p;
    p.camera = stride > 1 ? downsample(data.camera, stride) : data.camera;
    p.camera.range_min = config.range_min;
    p.camera.range_max = config.range_max;
    p.frames.reserve(data.frames.size());
    for (const auto& f : data.frames)
        p.frames.push_back(stride > 1 ? downsample(f, stride) : f);
    return p;
}

/// Ground-truth velocities between frames t-1 and t, in the state convention.
StateVector truth_state(const std::vector<Pose>& poses, std::size_t t)
{
    using namespace state_block;
    StateVector x = StateVector::Zero();
    if (t == 0)
        return x;
    const Pose& a = poses[t - 1];
    const Pose& b = poses[t];
    x.segment<3>(kVelocity) = b.position - a.position;
    x.segment<3>(kAngularVelocity) = log_quat(b.orientation * a.orientation.conjugate());
    return x;
}

std::size_t invalid_pixels(const DepthImage& image, const ObservationParams& params)
{
    std::size_t n = 0;
    for (double y : image.depth)
        if (!is_valid_depth(y, params.range_min, params.range_max))
            ++n;
    return n;
}

std::string sanitize(std::string s)
{
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r')
            c = ';';
    return s;
}

std::vector<TrackRecord> track_gaussian(const Prepared& p,
                                        const SequenceData& data,
                                        const TrackingOptions& options,
                                        const ObservationParams& params)
{
    const FilterConfig& config = options.config;
    const MeshRaycaster mesh(data.mesh);
    const std::vector<Eigen::Vector3d> rays = pixel_rays(p.camera);
    const UTParams ut = config.ut();
    const ProcessNoiseParams process = config.process();

    std::vector<TrackRecord> records;
    records.reserve(p.frames.size());
    GaussianBelief belief;
    Pose anchor;
    for (std::size_t t = 0; t < p.frames.size(); ++t)
    {
        TrackRecord rec;
        rec.frame = static_cast<int>(t);
        rec.truth = data.poses[t];
        const bool init = t == 0 || (options.reset_every > 0 && t % static_cast<std::size_t>(options.reset_every) == 0);

        const auto start = std::chrono::steady_clock::now();
        if (init)
        {
            anchor = data.poses[t];
            belief = initial_belief(config);
            belief.mean = truth_state(data.poses, t);
        }
        try
        {
            if (!init)
                belief = predict(belief, process);
            const MeshDepthModel model(mesh, anchor, rays, params.range_min, params.range_max);
            const UpdateResult res = update(belief, model, p.frames[t].depth, params, ut);
            belief = res.belief;
            rec.skipped_pixels = res.diagnostics.skipped();
        }
        catch (const std::exception& e)
        {
            rec.error = sanitize(e.what());
        }
        std::tie(anchor, belief) = rezero(belief, anchor);
        rec.update_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        rec.estimate = anchor;
        rec.translational_error = translational_error(rec.estimate, rec.truth);
        rec.angular_error = angular_error(rec.estimate.orientation, rec.truth.orientation);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<TrackRecord> track_particles(const Prepared& p, const SequenceData& data, const TrackingOptions& options)
{
    const FilterConfig& config = options.config;
    const ObservationParams params = config.observation();
    const MeshRaycaster mesh(data.mesh);
    const auto n = static_cast<std::size_t>(config.pf_particles);

    std::vector<TrackRecord> records;
    records.reserve(p.frames.size());
    ParticleSet particles;
    for (std::size_t t = 0; t < p.frames.size(); ++t)
    {
        TrackRecord rec;
        rec.frame = static_cast<int>(t);
        rec.truth = data.poses[t];
        const bool init = t == 0 || (options.reset_every > 0 && t % static_cast<std::size_t>(options.reset_every) == 0);

        const auto start = std::chrono::steady_clock::now();
        try
        {
            if (init)
            {
                GaussianBelief b = initial_belief(config);
                b.mean = truth_state(data.poses, t);
                // one stream per initialization so resets do not depend on earlier frames
                particles = make_particles(b, data.poses[t], n, options.seed + t);
                pf_reweight(particles, p.frames[t], mesh, p.camera, params);
            }
            else
            {
                particles = pf_step(std::move(particles), config.process(), p.frames[t], mesh, p.camera, params);
            }
            if (particles.degenerate)
                rec.error = "degenerate weights";
        }
        catch (const std::exception& e)
        {
            rec.error = sanitize(e.what());
        }
        rec.update_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.skipped_pixels = invalid_pixels(p.frames[t], params);
        rec.estimate = particles.size() > 0 ? particles.mean_pose() : data.poses[t];
        rec.translational_error = translational_error(rec.estimate, rec.truth);
        rec.angular_error = angular_error(rec.estimate.orientation, rec.truth.orientation);
        records.push_back(std::move(rec));
    }
    return records;
}

const char* kRecordsHeader =
    "frame,est_tx,est_ty,est_tz,est_qw,est_qx,est_qy,est_qz,"
    "true_tx,true_ty,true_tz,true_qw,true_qx,true_qy,true_qz,"
    "trans_err_m,ang_err_rad,skipped_pixels,error";

}  // namespace

FilterKind parse_filter_kind(const std::string& name)
{
    if (name == "rgf")
        return FilterKind::kRgf;
    if (name == "gf0" || name == "gf_w0")
        return FilterKind::kGfW0;
    if (name == "pf")
        return FilterKind::kPf;
    throw std::invalid_argument("unknown filter '" + name + "' (expected rgf, gf0 or pf)");
}

std::string to_string(FilterKind kind)
{
    switch (kind)
    {
    case FilterKind::kRgf:
        return "rgf";
    case FilterKind::kGfW0:
        return "gf0";
    case FilterKind::kPf:
        return "pf";
    }
    return "?";
}

GaussianBelief initial_belief(const FilterConfig& config)
{
    using namespace state_block;
    GaussianBelief b;
    b.mean = Eigen::VectorXd::Zero(kStateDim);
    Eigen::VectorXd sd(kStateDim);
    sd << Eigen::Vector3d::Constant(config.init_sigma_position), Eigen::Vector3d::Constant(config.init_sigma_orientation),
        Eigen::Vector3d::Constant(config.init_sigma_velocity),
        Eigen::Vector3d::Constant(config.init_sigma_angular_velocity);
    b.cov = sd.array().square().matrix().asDiagonal();
    return b;
}

std::vector<TrackRecord> run_tracking(const SequenceData& data, const TrackingOptions& options)
{
    options.config.validate();
    if (data.frames.empty() || data.frames.size() != data.poses.size())
        throw std::invalid_argument("run_tracking: sequence has no frames or mismatched poses");
    const Prepared p = prepare_frames(data, options.config);
    switch (options.filter)
    {
    case FilterKind::kRgf:
        return track_gaussian(p, data, options, options.config.observation());
    case FilterKind::kGfW0:
    {
        ObservationParams params = options.config.observation();
        params.tail_weight = 0.0;
        return track_gaussian(p, data, options, params);
    }
    case FilterKind::kPf:
        return track_particles(p, data, options);
    }
    throw std::logic_error("unreachable");
}

void write_records_csv(std::ostream& out, const std::vector<TrackRecord>& records, const std::string& comment)
{
    out << "# " << comment << '\n' << kRecordsHeader << '\n';
    char buf[128];
    for (const auto& r : records)
    {
        out << r.frame;
        for (const Pose* p : {&r.estimate, &r.truth})
        {
            std::string s = format_pose(*p);
            for (char& c : s)
                if (c == ' ')
                    c = ',';
            out << ',' << s;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%zu,", r.translational_error, r.angular_error, r.skipped_pixels);
        out << buf << r.error << '\n';
    }
}

std::vector<TrackRecord> read_records_csv(std::istream& in)
{
    std::vector<TrackRecord> records;
    std::string line;
    bool header = false;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header)
        {
            if (line != kRecordsHeader)
                throw std::runtime_error("records CSV: unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() == 18)
            cells.emplace_back();
        if (cells.size() != 19)
            throw std::runtime_error("records CSV: expected 19 columns in '" + line + "'");
        TrackRecord r;
        try
        {
            r.frame = std::stoi(cells[0]);
            auto pose_at = [&](std::size_t k) {
                std::string s;
                for (std::size_t j = 0; j < 7; ++j)
                    s += cells[k + j] + ' ';
                return parse_pose(s);
            };
            r.estimate = pose_at(1);
            r.truth = pose_at(8);
            r.translational_error = std::stod(cells[15]);
            r.angular_error = std::stod(cells[16]);
            r.skipped_pixels = std::stoul(cells[17]);
        }
        catch (const std::logic_error&)
        {
            throw std::runtime_error("records CSV: malformed row '" + line + "'");
        }
        r.error = cells[18];
        records.push_back(std::move(r));
    }
    if (!header)
        throw std::runtime_error("records CSV: missing header");
    return records;
}

void write_timing_csv(std::ostream& out, const std::vector<TrackRecord>& records, const std::string& comment)
{
    out << "# " << comment << '\n' << "frame,update_seconds\n";
    char buf[64];
    for (const auto& r : records)
    {
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", r.frame, r.update_seconds);
        out << buf;
    }
}

}  // namespace rgf
