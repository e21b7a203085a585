#include <rgf/dataset.hpp>
#include <rgf/simulator.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rgf
{
namespace
{

namespace fs = std::filesystem;

std::string frame_name(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu.depth", index);
    return buf;
}

double number(const KeyValues& kv, const std::string& key)
{
    const auto it = kv.find(key);
    if (it == kv.end())
        throw std::runtime_error("meta: missing key '" + key + "'");
    try
    {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    }
    catch (const std::exception&)
    {
        throw std::runtime_error("meta: bad value for '" + key + "'");
    }
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// decorrelates the sensor-noise stream from the trajectory stream
constexpr std::uint64_t kNoiseSeedMix = 0x9e3779b97f4a7c15ULL;

}  // namespace

DepthImage quantize(const DepthImage& image, double scale)
{
    DepthImage out = image;
    for (double& y : out.depth)
    {
        if (!std::isfinite(y))
            continue;
        const double q = std::round(y / scale);
        y = (q >= 1.0 && q <= 65535.0) ? q * scale : DepthImage::kMissing;
    }
    return out;
}

void write_depth_file(const std::string& path, const DepthImage& image, double scale)
{
    std::vector<unsigned char> bytes(image.size() * 2, 0);
    for (std::size_t i = 0; i < image.size(); ++i)
    {
        const double y = image.depth[i];
        if (!std::isfinite(y))
            continue;
        const double q = std::round(y / scale);
        if (q < 1.0 || q > 65535.0)
            continue;
        const auto v = static_cast<std::uint16_t>(q);
        bytes[2 * i] = static_cast<unsigned char>(v & 0xff);
        bytes[2 * i + 1] = static_cast<unsigned char>(v >> 8);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write depth file " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DepthImage read_depth_file(const std::string& path, int width, int height, double scale)
{
    DepthImage image(width, height);
    std::vector<unsigned char> bytes(image.size() * 2);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open depth file " + path);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()) || in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("depth file " + path + " does not match the image size in meta");
    for (std::size_t i = 0; i < image.size(); ++i)
    {
        const unsigned v = bytes[2 * i] | (static_cast<unsigned>(bytes[2 * i + 1]) << 8);
        if (v != 0)
            image.depth[i] = v * scale;
    }
    return image;
}

void write_sequence(const std::string& dir, const SequenceData& data, const std::string& comment)
{
    if (data.frames.size() != data.poses.size())
        throw std::invalid_argument("write_sequence: frame and pose counts differ");
    fs::create_directories(fs::path(dir) / "frames");

    std::ofstream meta(fs::path(dir) / "meta");
    if (!meta)
        throw std::runtime_error("cannot write meta in " + dir);
    if (!comment.empty())
        meta << "# " << comment << '\n';
    const CameraModel& c = data.camera;
    meta << "width=" << c.width << "\nheight=" << c.height << "\nfx=" << fmt(c.fx) << "\nfy=" << fmt(c.fy)
         << "\ncx=" << fmt(c.cx) << "\ncy=" << fmt(c.cy) << "\nrange_min=" << fmt(c.range_min)
         << "\nrange_max=" << fmt(c.range_max) << "\ndepth_scale=" << fmt(data.depth_scale)
         << "\nframe_rate=" << fmt(data.frame_rate) << "\nstride=" << data.stride
         << "\nframes=" << data.frames.size() << '\n';

    std::ofstream poses(fs::path(dir) / "poses.txt");
    for (const auto& p : data.poses)
        poses << format_pose(p) << '\n';

    for (std::size_t i = 0; i < data.frames.size(); ++i)
        write_depth_file((fs::path(dir) / "frames" / frame_name(i)).string(), data.frames[i], data.depth_scale);

    save_obj((fs::path(dir) / "object.obj").string(), data.mesh);
}

SequenceData read_sequence(const std::string& dir)
{
    const KeyValues kv = load_key_values((fs::path(dir) / "meta").string());
    SequenceData data;
    CameraModel& c = data.camera;
    c.width = static_cast<int>(number(kv, "width"));
    c.height = static_cast<int>(number(kv, "height"));
    c.fx = number(kv, "fx");
    c.fy = number(kv, "fy");
    c.cx = number(kv, "cx");
    c.cy = number(kv, "cy");
    c.range_min = number(kv, "range_min");
    c.range_max = number(kv, "range_max");
    c.validate();
    data.depth_scale = number(kv, "depth_scale");
    data.frame_rate = number(kv, "frame_rate");
    data.stride = static_cast<int>(number(kv, "stride"));
    const auto frames = static_cast<std::size_t>(number(kv, "frames"));

    std::ifstream poses(fs::path(dir) / "poses.txt");
    if (!poses)
        throw std::runtime_error("cannot open poses.txt in " + dir);
    std::string line;
    while (std::getline(poses, line))
        if (!line.empty())
            data.poses.push_back(parse_pose(line));
    if (data.poses.size() != frames)
        throw std::runtime_error("poses.txt has " + std::to_string(data.poses.size()) + " poses, meta says " +
                                 std::to_string(frames));

    data.frames.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i)
        data.frames.push_back(read_depth_file((fs::path(dir) / "frames" / frame_name(i)).string(), c.width,
                                              c.height, data.depth_scale));
    data.mesh = load_obj((fs::path(dir) / "object.obj").string());
    return data;
}

TriangleMesh make_object_mesh(const SceneConfig& config)
{
    if (config.object == "box")
        return make_box(Eigen::Vector3d(config.box_x, config.box_y, config.box_z));
    if (config.object == "sphere")
        return make_icosphere(config.sphere_radius, 2);
    if (config.object == "ellipsoid")
    {
        TriangleMesh mesh = make_icosphere(1.0, 2);
        const Eigen::Vector3d axes(config.box_x, config.box_y, config.box_z);
        for (auto& v : mesh.vertices)
            v = v.cwiseProduct(axes);
        return mesh;
    }
    return load_obj(config.object);
}

SequenceData simulate_sequence(const SceneConfig& config, std::uint64_t seed)
{
    config.validate();
    SequenceData data;
    data.camera = config.camera();
    data.stride = config.render_stride;
    data.mesh = make_object_mesh(config);
    data.poses = make_trajectory(config.category, config.frames, seed, default_object_pose());

    Scene scene{data.mesh, {}, data.poses, data.camera};
    if (config.occlusion_fraction > 0.0)
    {
        if (config.occlusion_fraction >= 1.0)
        {
            scene.occluders.push_back(make_full_occluder(data.camera, config.occluder_depth, config.occlusion_start,
                                                         config.occlusion_end));
        }
        else
        {
            const int ref = std::min(config.occlusion_start, config.frames - 1);
            scene.occluders.push_back(make_column_occluder(data.camera, render_depth(scene, ref),
                                                           config.occlusion_fraction, config.occluder_depth,
                                                           config.occlusion_start, config.occlusion_end));
        }
    }

    // added last so the column occluder is fitted to the object alone
    if (config.background_depth > 0.0)
        scene.occluders.push_back(make_full_occluder(data.camera, config.background_depth, 0));

    const NoiseSpec noise{config.depth_noise_std, config.outlier_rate, seed ^ kNoiseSeedMix};
    data.frames.reserve(data.poses.size());
    for (int t = 0; t < config.frames; ++t)
        data.frames.push_back(quantize(corrupt(render_depth(scene, t), noise, data.camera, t), data.depth_scale));
    return data;
}

}  // namespace rgf
