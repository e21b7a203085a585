#include <rgf/config.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace rgf
{
namespace
{

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text)
{
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw std::invalid_argument("config: bad value '" + text + "' for key '" + key + "'");
    return value;
}

using FieldRef = std::variant<double*, int*, std::string*>;
using Field = std::pair<const char*, FieldRef>;

void assign(const std::vector<Field>& fields, const KeyValues& kv)
{
    for (const auto& [key, value] : kv)
    {
        bool found = false;
        for (const auto& [name, ref] : fields)
        {
            if (key != name)
                continue;
            found = true;
            std::visit(
                [&](auto* p) {
                    using T = std::remove_pointer_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, std::string>)
                        *p = value;
                    else
                        *p = parse_number<T>(key, value);
                },
                ref);
        }
        if (!found)
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

std::string render(const std::vector<Field>& fields)
{
    std::string out;
    char buf[64];
    for (const auto& [name, ref] : fields)
    {
        if (!out.empty())
            out += ' ';
        out += name;
        out += '=';
        std::visit(
            [&](auto* p) {
                using T = std::remove_pointer_t<decltype(p)>;
                if constexpr (std::is_same_v<T, std::string>)
                    out += *p;
                else if constexpr (std::is_same_v<T, int>)
                    out += std::to_string(*p);
                else
                {
                    std::snprintf(buf, sizeof(buf), "%.17g", *p);
                    out += buf;
                }
            },
            ref);
    }
    return out;
}

std::vector<Field> fields_of(FilterConfig& c)
{
    return {
        {"pixel_noise_std", &c.pixel_noise_std},
        {"tail_weight", &c.tail_weight},
        {"process_sigma_v", &c.process_sigma_v},
        {"process_sigma_omega", &c.process_sigma_omega},
        {"ut_alpha", &c.ut_alpha},
        {"ut_beta", &c.ut_beta},
        {"ut_kappa", &c.ut_kappa},
        {"range_min", &c.range_min},
        {"range_max", &c.range_max},
        {"downsample", &c.downsample},
        {"pf_particles", &c.pf_particles},
        {"init_sigma_position", &c.init_sigma_position},
        {"init_sigma_orientation", &c.init_sigma_orientation},
        {"init_sigma_velocity", &c.init_sigma_velocity},
        {"init_sigma_angular_velocity", &c.init_sigma_angular_velocity},
    };
}

std::vector<Field> fields_of(SceneConfig& c)
{
    return {
        {"frames", &c.frames},
        {"category", &c.category},
        {"object", &c.object},
        {"box_x", &c.box_x},
        {"box_y", &c.box_y},
        {"box_z", &c.box_z},
        {"sphere_radius", &c.sphere_radius},
        {"depth_noise_std", &c.depth_noise_std},
        {"outlier_rate", &c.outlier_rate},
        {"occlusion_fraction", &c.occlusion_fraction},
        {"occlusion_start", &c.occlusion_start},
        {"occlusion_end", &c.occlusion_end},
        {"occluder_depth", &c.occluder_depth},
        {"background_depth", &c.background_depth},
        {"width", &c.width},
        {"height", &c.height},
        {"fx", &c.fx},
        {"fy", &c.fy},
        {"cx", &c.cx},
        {"cy", &c.cy},
        {"range_min", &c.range_min},
        {"range_max", &c.range_max},
        {"render_stride", &c.render_stride},
    };
}

}  // namespace

KeyValues parse_key_values(std::istream& in)
{
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = value;
    }
    return kv;
}

KeyValues load_key_values(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file " + path);
    return parse_key_values(in);
}

ObservationParams FilterConfig::observation() const
{
    return {pixel_noise_std, tail_weight, range_min, range_max};
}

ProcessNoiseParams FilterConfig::process() const
{
    return {process_sigma_v, process_sigma_omega};
}

UTParams FilterConfig::ut() const
{
    return {ut_alpha, ut_beta, ut_kappa};
}

void FilterConfig::validate() const
{
    observation().validate();
    if (!(process_sigma_v >= 0.0) || !(process_sigma_omega >= 0.0))
        throw std::invalid_argument("config: process noise must be non-negative");
    if (!(ut_alpha > 0.0))
        throw std::invalid_argument("config: ut_alpha must be positive");
    if (downsample < 1)
        throw std::invalid_argument("config: downsample must be >= 1");
    if (pf_particles < 2)
        throw std::invalid_argument("config: pf_particles must be >= 2");
    if (!(init_sigma_position > 0.0) || !(init_sigma_orientation > 0.0) || !(init_sigma_velocity > 0.0) ||
        !(init_sigma_angular_velocity > 0.0))
        throw std::invalid_argument("config: initial sigmas must be positive");
}

std::string FilterConfig::to_string() const
{
    FilterConfig copy = *this;
    return render(fields_of(copy));
}

FilterConfig filter_config_from(const KeyValues& kv)
{
    FilterConfig c;
    assign(fields_of(c), kv);
    c.validate();
    return c;
}

FilterConfig load_filter_config(const std::string& path)
{
    return filter_config_from(load_key_values(path));
}

CameraModel SceneConfig::camera() const
{
    CameraModel cam{width, height, fx, fy, cx, cy, range_min, range_max};
    return render_stride > 1 ? downsample(cam, render_stride) : cam;
}

void SceneConfig::validate() const
{
    camera().validate();
    if (frames < 2)
        throw std::invalid_argument("scene: frames must be >= 2");
    if (category < 0 || category > 3)
        throw std::invalid_argument("scene: category must be 0..3");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0))
        throw std::invalid_argument("scene: outlier_rate must lie in [0, 1]");
    if (!(depth_noise_std >= 0.0))
        throw std::invalid_argument("scene: depth_noise_std must be non-negative");
    if (!(occlusion_fraction >= 0.0 && occlusion_fraction <= 1.0))
        throw std::invalid_argument("scene: occlusion_fraction must lie in [0, 1]");
    if (render_stride < 1)
        throw std::invalid_argument("scene: render_stride must be >= 1");
    if (!(background_depth == 0.0 || (background_depth > 0.0 && background_depth < range_max)))
        throw std::invalid_argument("scene: background_depth must be 0 (none) or inside the sensor range");
}

std::string SceneConfig::to_string() const
{
    SceneConfig copy = *this;
    return render(fields_of(copy));
}

SceneConfig scene_config_from(const KeyValues& kv)
{
    SceneConfig c;
    assign(fields_of(c), kv);
    c.validate();
    return c;
}

SceneConfig load_scene_config(const std::string& path)
{
    return scene_config_from(load_key_values(path));
}

}  // namespace rgf
