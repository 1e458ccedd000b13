#include "msflow/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>

namespace msflow {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw InvalidArgument("config: bad value '" + text + "' for " + key);
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1")
        return true;
    if (text == "false" || text == "0")
        return false;
    throw InvalidArgument("config: bad boolean '" + text + "' for " + key);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(Settings&, const std::string&, const std::string&)> set;
    std::function<std::string(const Settings&)> get;
};

template <typename T, typename Access>
Field number(Access access) {
    return {[access](Settings& s, const std::string& k, const std::string& v) { access(s) = parse_number<T>(k, v); },
            [access](const Settings& s) {
                if constexpr (std::is_floating_point_v<T>)
                    return fmt(access(s));
                else
                    return std::to_string(access(s));
            }};
}

#define MSFLOW_FIELD(T, expr) number<T>([](auto& s) -> auto& { return expr; })

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["gamma"] = MSFLOW_FIELD(double, s.solver.gamma);
        t["theta"] = MSFLOW_FIELD(double, s.solver.theta);
        t["epsilon"] = MSFLOW_FIELD(double, s.solver.epsilon);
        t["pyramid_factor"] = MSFLOW_FIELD(double, s.solver.pyramid_factor);
        t["min_size"] = MSFLOW_FIELD(Eigen::Index, s.solver.min_size);
        t["outer_iters"] = MSFLOW_FIELD(int, s.solver.outer_iters);
        t["inner_iters"] = MSFLOW_FIELD(int, s.solver.inner_iters);
        t["sor_iters"] = MSFLOW_FIELD(int, s.solver.sor_iters);
        t["sor_omega"] = MSFLOW_FIELD(double, s.solver.sor_omega);
        t["sor_tol"] = MSFLOW_FIELD(double, s.solver.sor_tol);
        t["max_step_halvings"] = MSFLOW_FIELD(int, s.solver.max_step_halvings);
        t["lambda_steepness"] = MSFLOW_FIELD(double, s.solver.lambda.steepness);
        t["lambda_midpoint"] = MSFLOW_FIELD(double, s.solver.lambda.midpoint);
        t["mode"] = {[](Settings& s, const std::string&, const std::string& v) { s.solver.mode = WeightMode::parse(v); },
                     [](const Settings& s) { return s.solver.mode.to_string(); }};
        t["sor_ordering"] = {[](Settings& s, const std::string& k, const std::string& v) {
                                 if (v == "red_black")
                                     s.solver.sor_ordering = SorOrdering::red_black;
                                 else if (v == "sequential")
                                     s.solver.sor_ordering = SorOrdering::sequential;
                                 else
                                     throw InvalidArgument("config: bad value '" + v + "' for " + k);
                             },
                             [](const Settings& s) {
                                 return std::string(s.solver.sor_ordering == SorOrdering::red_black ? "red_black"
                                                                                                   : "sequential");
                             }};
        t["recompute_lambda_per_level"] = {
            [](Settings& s, const std::string& k, const std::string& v) {
                s.solver.recompute_lambda_per_level = parse_bool(k, v);
            },
            [](const Settings& s) { return std::string(s.solver.recompute_lambda_per_level ? "true" : "false"); }};

        t["gt.m_p"] = MSFLOW_FIELD(int, s.gt.m_p);
        t["gt.fb_threshold"] = MSFLOW_FIELD(double, s.gt.fb_threshold);
        t["gt.fb_radius"] = MSFLOW_FIELD(int, s.gt.fb_radius);
        t["gt.fb_max_roundtrip"] = MSFLOW_FIELD(double, s.gt.fb_max_roundtrip);
        t["gt.subpixel_step"] = MSFLOW_FIELD(double, s.gt.subpixel_step);
        t["gt.downsample_factor"] = MSFLOW_FIELD(int, s.gt.downsample_factor);
        t["gt.lk_window"] = MSFLOW_FIELD(int, s.gt.lk_window);
        t["gt.lk_max_iters"] = MSFLOW_FIELD(int, s.gt.lk_max_iters);

        t["entropy.bins"] = MSFLOW_FIELD(int, s.entropy.bins);
        t["entropy.n_patches"] = MSFLOW_FIELD(int, s.entropy.n_patches);
        t["entropy.patch"] = MSFLOW_FIELD(int, s.entropy.patch);

        t["synth.width"] = MSFLOW_FIELD(Eigen::Index, s.synth.width);
        t["synth.height"] = MSFLOW_FIELD(Eigen::Index, s.synth.height);
        t["synth.texture_components"] = MSFLOW_FIELD(int, s.synth.texture_components);
        t["synth.min_period"] = MSFLOW_FIELD(double, s.synth.min_period);
        t["synth.max_period"] = MSFLOW_FIELD(double, s.synth.max_period);
        t["synth.visible_contrast"] = MSFLOW_FIELD(double, s.synth.visible_contrast);
        t["synth.nir_base_contrast"] = MSFLOW_FIELD(double, s.synth.nir_base_contrast);
        t["synth.speckle_contrast"] = MSFLOW_FIELD(double, s.synth.speckle_contrast);
        t["synth.speckle_spacing"] = MSFLOW_FIELD(double, s.synth.speckle_spacing);
        t["synth.speckle_radius"] = MSFLOW_FIELD(double, s.synth.speckle_radius);
        t["synth.shadow_strength"] = MSFLOW_FIELD(double, s.synth.shadow_strength);
        t["synth.visible_blur_sigma"] = MSFLOW_FIELD(double, s.synth.visible_blur_sigma);
        t["synth.tx"] = MSFLOW_FIELD(double, s.synth.warp.tx);
        t["synth.ty"] = MSFLOW_FIELD(double, s.synth.warp.ty);
        t["synth.rotation_deg"] = MSFLOW_FIELD(double, s.synth.warp.rotation_deg);
        t["synth.bump_amplitude"] = MSFLOW_FIELD(double, s.synth.warp.bump_amplitude);
        t["synth.bump_sigma"] = MSFLOW_FIELD(double, s.synth.warp.bump_sigma);
        t["synth.bump_dir_x"] = MSFLOW_FIELD(double, s.synth.warp.bump_dir_x);
        t["synth.bump_dir_y"] = MSFLOW_FIELD(double, s.synth.warp.bump_dir_y);
        t["synth.layout"] = {[](Settings& s, const std::string& k, const std::string& v) {
                                 if (v == "uniform")
                                     s.synth.layout = synth::Layout::uniform;
                                 else if (v == "split")
                                     s.synth.layout = synth::Layout::split;
                                 else
                                     throw InvalidArgument("config: bad value '" + v + "' for " + k);
                             },
                             [](const Settings& s) {
                                 return std::string(s.synth.layout == synth::Layout::split ? "split" : "uniform");
                             }};

        t["seed"] = MSFLOW_FIELD(std::uint64_t, s.seed);
        return t;
    }();
    return table;
}

#undef MSFLOW_FIELD

}  // namespace

void apply_setting(Settings& settings, const std::string& key, const std::string& value) {
    const auto it = fields().find(key);
    if (it == fields().end())
        throw InvalidArgument("config: unknown key '" + key + "'");
    it->second.set(settings, key, value);
}

void apply_config(Settings& settings, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(settings, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void load_config(Settings& settings, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open config file " + path.string());
    apply_config(settings, in);
}

std::map<std::string, std::string> describe(const Settings& settings) {
    std::map<std::string, std::string> out;
    for (const auto& [k, f] : fields())
        out[k] = f.get(settings);
    return out;
}

}  // namespace msflow
