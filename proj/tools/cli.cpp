#include "cli.hpp"

#include "msflow/config.hpp"
#include "msflow/gt.hpp"
#include "msflow/io.hpp"
#include "msflow/metrics.hpp"
#include "msflow/report.hpp"
#include "msflow/solver.hpp"
#include "msflow/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace msflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for failures after inputs have been validated.
struct ComputationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config;
    std::string mode;
    std::optional<double> gamma, theta, fb_threshold;
    std::optional<int> mp;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    bool verbose = false;
};

Settings resolve_settings(const CommonOptions& o) {
    Settings s;
    if (!o.config.empty())
        load_config(s, o.config);
    if (!o.mode.empty())
        apply_setting(s, "mode", o.mode);
    if (o.gamma)
        s.solver.gamma = *o.gamma;
    if (o.theta)
        s.solver.theta = *o.theta;
    if (o.fb_threshold)
        s.gt.fb_threshold = *o.fb_threshold;
    if (o.mp)
        s.gt.m_p = *o.mp;
    if (o.seed)
        s.seed = *o.seed;
    s.solver.validate();
    s.gt.validate();
    return s;
}

std::string indexed(const std::string& stem, std::size_t k, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%04zu", k);
    return stem + buf + ext;
}

void require_files(const std::vector<std::string>& paths) {
    for (const auto& p : paths)
        if (!fs::is_regular_file(p))
            throw InvalidArgument("input file not found: " + p);
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw InvalidArgument("cannot create output directory " + dir);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    f << j.dump(2) << "\n";
    if (!f)
        throw ComputationFailure("failed writing " + path.string());
}

json provenance(const std::string& command, const Settings& s, const json& inputs, const json& outputs) {
    return {{"command", command},   {"seed", s.seed},       {"settings", describe(s)},
            {"inputs", inputs},     {"outputs", outputs},   {"flow_sentinel", kUnknownFlow}};
}

// ---- flow ------------------------------------------------------------------

struct FlowArgs {
    std::vector<std::string> visible, nir;
};

int cmd_flow(const CommonOptions& o, const FlowArgs& a, std::ostream& out) {
    const Settings s = resolve_settings(o);
    if (a.visible.size() < 2)
        throw InvalidArgument("flow needs at least two visible frames");
    if (!a.nir.empty() && a.nir.size() != a.visible.size())
        throw InvalidArgument("visible and nir frame counts differ");
    if (s.solver.mode.needs_nir() && a.nir.empty())
        throw InvalidArgument("mode " + s.solver.mode.to_string() + " needs NIR frames");
    require_files(a.visible);
    require_files(a.nir);
    const fs::path dir = prepare_out(o.out);

    std::vector<MultispectralImage> frames;
    for (std::size_t k = 0; k < a.visible.size(); ++k) {
        auto vis = load_image(a.visible[k], ChannelRole::visible);
        std::optional<PlaneD> nir;
        if (!a.nir.empty())
            nir = load_image(a.nir[k], ChannelRole::nir).front();
        frames.push_back(make_multispectral(std::move(vis), std::move(nir)));
    }

    json outputs = json::array();
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        SolveTrace trace;
        FlowField flow;
        try {
            flow = compute_flow(frames[k], frames[k + 1], s.solver, &trace);
        } catch (const InvalidArgument&) {
            throw;
        } catch (const std::exception& e) {
            throw ComputationFailure(e.what());
        }
        const fs::path path = dir / indexed("flow", k, ".flo");
        write_flow(flow, path);
        outputs.push_back(path.string());
        if (o.verbose) {
            const fs::path log = dir / indexed("energy", k, ".csv");
            std::ofstream f(log);
            f << "level,width,height,iteration,e_visible,e_nir,e_smooth,e_visible_weighted,e_nir_weighted,e_total\n";
            f.precision(17);
            for (const auto& lv : trace.levels)
                for (std::size_t it = 0; it < lv.energies.size(); ++it) {
                    const auto& e = lv.energies[it];
                    f << lv.level << ',' << lv.width << ',' << lv.height << ',' << it << ',' << e.e_visible << ','
                      << e.e_nir << ',' << e.e_smooth << ',' << e.e_visible_weighted << ',' << e.e_nir_weighted
                      << ',' << e.e_total << '\n';
                }
            if (!f)
                throw ComputationFailure("failed writing " + log.string());
            outputs.push_back(log.string());
            out << "pair " << k << ": " << trace.levels.size() << " levels, final e_total "
                << trace.levels.back().energies.back().e_total << "\n";
        }
    }
    json inputs{{"visible", a.visible}, {"nir", a.nir}};
    write_json(dir / "provenance.json", provenance("flow", s, inputs, outputs));
    return kSuccess;
}

// ---- gt --------------------------------------------------------------------

int cmd_gt(const CommonOptions& o, const std::vector<std::string>& nir_paths, std::ostream& out) {
    const Settings s = resolve_settings(o);
    if (nir_paths.size() < 2)
        throw InvalidArgument("gt needs at least two NIR frames");
    require_files(nir_paths);
    const fs::path dir = prepare_out(o.out);

    std::vector<PlaneD> frames;
    for (const auto& p : nir_paths)
        frames.push_back(load_image(p, ChannelRole::nir).front());
    for (const auto& f : frames)
        if (!same_size(f, frames.front()))
            throw InvalidArgument("NIR frames differ in size");

    json outputs = json::array();
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        gt::GtResult r;
        try {
            r = gt::build_ground_truth(frames[k], frames[k + 1], s.gt);
        } catch (const InvalidArgument&) {
            throw;
        } catch (const std::exception& e) {
            throw ComputationFailure(e.what());
        }
        const fs::path flow = dir / indexed("gt", k, ".flo");
        const fs::path mask = dir / indexed("occlusion", k, ".pgm");
        write_flow(r.flow, flow);
        write_gray8(mask, r.occlusion);
        outputs.push_back(flow.string());
        outputs.push_back(mask.string());
        if (o.verbose) {
            const double invalid = double((r.occlusion == 255).count()) / double(r.occlusion.size());
            out << "pair " << k << ": " << r.flow.width() << "x" << r.flow.height() << ", occluded fraction "
                << invalid << "\n";
        }
    }
    write_json(dir / "provenance.json", provenance("gt", s, json{{"nir", nir_paths}}, outputs));
    return kSuccess;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> gt;
    std::vector<std::string> est;  // NAME=PATH[,PATH...]
    std::string sequence = "sequence";
    double error_scale = 2.0;
};

std::pair<std::string, std::vector<std::string>> split_method(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw InvalidArgument("--est expects NAME=PATH[,PATH...], got '" + spec + "'");
    std::vector<std::string> paths;
    std::string rest = spec.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
        const auto comma = rest.find(',', start);
        const auto end = comma == std::string::npos ? rest.size() : comma;
        if (end > start)
            paths.push_back(rest.substr(start, end - start));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return {spec.substr(0, eq), paths};
}

int cmd_eval(const CommonOptions& o, const EvalArgs& a, std::ostream& out) {
    const Settings s = resolve_settings(o);
    if (a.gt.empty() || a.est.empty())
        throw InvalidArgument("eval needs --gt and at least one --est");
    if (!(a.error_scale > 0.0))
        throw InvalidArgument("--error-scale must be positive");
    require_files(a.gt);
    std::vector<std::pair<std::string, std::vector<std::string>>> methods;
    for (const auto& spec : a.est) {
        auto m = split_method(spec);
        if (m.second.size() != a.gt.size())
            throw InvalidArgument("method " + m.first + " has " + std::to_string(m.second.size()) +
                                  " flow files but there are " + std::to_string(a.gt.size()) + " ground-truth files");
        require_files(m.second);
        methods.push_back(std::move(m));
    }
    const fs::path dir = prepare_out(o.out);

    std::vector<FlowField> gts;
    for (const auto& p : a.gt)
        gts.push_back(read_flow(p));

    Report report;
    report.parameters = describe(s);
    report.parameters["error_scale"] = std::to_string(a.error_scale);
    json outputs = json::array();
    for (const auto& [name, paths] : methods) {
        ReportEntry entry{name, a.sequence, {}, {}};
        for (std::size_t k = 0; k < paths.size(); ++k) {
            const FlowField est = read_flow(paths[k]);
            if (est.width() != gts[k].width() || est.height() != gts[k].height())
                throw InvalidArgument("dimension mismatch between " + paths[k] + " and " + a.gt[k]);
            const ErrorMap ee = endpoint_error(gts[k], est);
            const ErrorMap ae = angle_error(gts[k], est);
            if (ee.n_valid() == 0)
                throw InvalidArgument("ground truth " + a.gt[k] + " has no valid pixels");
            entry.ee.push_back(compute_stats(ee));
            entry.ae.push_back(compute_stats(ae));
            const fs::path ee_map = dir / indexed(name + "_ee", k, ".pgm");
            const fs::path flow_img = dir / indexed(name + "_flow", k, ".ppm");
            write_gray8(ee_map, render_error_map(ee, a.error_scale));
            write_rgb8(flow_img, render_flow(est));
            outputs.push_back(ee_map.string());
            outputs.push_back(flow_img.string());
        }
        report.entries.push_back(std::move(entry));
    }
    write_report(report, dir / "report");
    outputs.push_back((dir / "report.csv").string());
    outputs.push_back((dir / "report.json").string());

    if (methods.size() > 1) {
        out << "rank,method,mean_avg_ee\n";
        const auto ranks = rank_methods(report);
        for (std::size_t i = 0; i < ranks.size(); ++i)
            out << i + 1 << ',' << ranks[i].first << ',' << ranks[i].second << '\n';
    }
    json inputs{{"gt", a.gt}, {"est", a.est}, {"sequence", a.sequence}};
    write_json(dir / "provenance.json", provenance("eval", s, inputs, outputs));
    return kSuccess;
}

// ---- entropy ---------------------------------------------------------------

struct EntropyArgs {
    std::string visible, nir, name = "image";
    std::vector<std::string> pairs;  // A,B
    std::optional<int> bins, patches;
};

int cmd_entropy(const CommonOptions& o, const EntropyArgs& a, std::ostream& out) {
    Settings s = resolve_settings(o);
    if (a.bins)
        s.entropy.bins = *a.bins;
    if (a.patches)
        s.entropy.n_patches = *a.patches;
    if (s.entropy.bins < 2 || s.entropy.n_patches < 1 || s.entropy.patch < 1)
        throw InvalidArgument("entropy needs bins >= 2, patches >= 1 and patch >= 1");
    if (a.visible.empty())
        throw InvalidArgument("entropy needs --visible");
    require_files({a.visible});
    if (!a.nir.empty())
        require_files({a.nir});

    std::map<std::string, PlaneD> channels;
    const auto vis = load_image(a.visible, ChannelRole::visible);
    if (vis.size() == 3) {
        channels["R"] = vis[0];
        channels["G"] = vis[1];
        channels["B"] = vis[2];
    }
    channels["Gray"] = synth::gray(make_multispectral(vis, std::nullopt));
    if (!a.nir.empty()) {
        auto nir = load_image(a.nir, ChannelRole::nir).front();
        if (!same_size(nir, vis.front()))
            throw InvalidArgument("visible and nir dimensions differ");
        channels["NIR"] = std::move(nir);
    }

    std::vector<std::pair<std::string, std::string>> pairs;
    if (a.pairs.empty()) {
        const std::vector<std::string> order{"R", "G", "B", "Gray", "NIR"};
        for (std::size_t i = 0; i < order.size(); ++i)
            for (std::size_t j = i + 1; j < order.size(); ++j) {
                if (!channels.count(order[i]) || !channels.count(order[j]))
                    throw InvalidArgument("entropy needs RGB visible and NIR inputs for the full channel grid");
                pairs.emplace_back(order[i], order[j]);
            }
    } else {
        for (const auto& p : a.pairs) {
            const auto comma = p.find(',');
            if (comma == std::string::npos)
                throw InvalidArgument("--pair expects A,B");
            std::string x = p.substr(0, comma), y = p.substr(comma + 1);
            for (const auto& c : {x, y})
                if (!channels.count(c))
                    throw InvalidArgument("channel " + c + " not available");
            pairs.emplace_back(x, y);
        }
    }
    const fs::path dir = prepare_out(o.out);

    std::ostringstream csv;
    csv << "pair,bins,n_patches,seed,h_bits\n";
    char hbuf[32];
    for (const auto& [x, y] : pairs) {
        const double h = gt::joint_entropy(channels.at(x), channels.at(y), s.entropy.n_patches, s.entropy.patch,
                                           s.entropy.bins, s.seed);
        std::snprintf(hbuf, sizeof hbuf, "%.17g", h);
        csv << a.name << ':' << x << '-' << y << ',' << s.entropy.bins << ',' << s.entropy.n_patches << ','
            << s.seed << ',' << hbuf << '\n';
    }
    const fs::path path = dir / "entropy.csv";
    {
        std::ofstream f(path, std::ios::binary);
        f << csv.str();
        if (!f)
            throw ComputationFailure("failed writing " + path.string());
    }
    if (o.verbose)
        out << csv.str();
    json inputs{{"visible", a.visible}, {"nir", a.nir}, {"pairs", a.pairs}};
    write_json(dir / "provenance.json", provenance("entropy", s, inputs, json::array({path.string()})));
    return kSuccess;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
    std::optional<double> tx, ty, rotation, bump;
    std::optional<Eigen::Index> width, height;
    std::string layout;
};

int cmd_synth(const CommonOptions& o, const SynthArgs& a, std::ostream& out) {
    Settings s = resolve_settings(o);
    if (a.tx)
        s.synth.warp.tx = *a.tx;
    if (a.ty)
        s.synth.warp.ty = *a.ty;
    if (a.rotation)
        s.synth.warp.rotation_deg = *a.rotation;
    if (a.bump)
        s.synth.warp.bump_amplitude = *a.bump;
    if (a.width)
        s.synth.width = *a.width;
    if (a.height)
        s.synth.height = *a.height;
    if (!a.layout.empty())
        apply_setting(s, "synth.layout", a.layout);
    s.synth.seed = s.seed;
    if (s.synth.width < 16 || s.synth.height < 16)
        throw InvalidArgument("synthetic frames must be at least 16x16");
    const double max_mag = synth::Warp(s.synth.warp, s.synth.width, s.synth.height).max_magnitude();
    if (max_mag > s.gt.m_p)
        throw InvalidArgument("warp magnitude " + std::to_string(max_mag) + " px exceeds m_p = " +
                              std::to_string(s.gt.m_p));
    const fs::path dir = prepare_out(o.out);

    const synth::SyntheticPair pair = synth::make_pair(s.synth);
    json outputs = json::array();
    auto emit = [&](const fs::path& p) { outputs.push_back(p.string()); };
    write_pnm(dir / "frame1_rgb.ppm", pair.frame1.visible, 16);
    write_pnm(dir / "frame1_nir.pgm", {*pair.frame1.nir}, 16);
    write_pnm(dir / "frame2_rgb.ppm", pair.frame2.visible, 16);
    write_pnm(dir / "frame2_nir.pgm", {*pair.frame2.nir}, 16);
    write_flow(pair.ground_truth, dir / "gt.flo");
    for (const char* n : {"frame1_rgb.ppm", "frame1_nir.pgm", "frame2_rgb.ppm", "frame2_nir.pgm", "gt.flo"})
        emit(dir / n);
    if (o.verbose)
        out << "synthetic pair " << s.synth.width << "x" << s.synth.height << ", max displacement " << max_mag
            << " px\n";
    write_json(dir / "provenance.json", provenance("synth", s, json::object(), outputs));
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multispectral RGB+NIR optical flow toolkit", "msflow"};
    app.require_subcommand(1);
    CommonOptions common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config, "key = value configuration file");
        sub->add_option("--mode", common.mode, "data-term weighting: da, fixed:<lambda>, rgb, nir");
        sub->add_option("--gamma", common.gamma, "smoothness weight");
        sub->add_option("--theta", common.theta, "gradient-constancy weight");
        sub->add_option("--mp", common.mp, "search half-window for ground-truth matching (px)");
        sub->add_option("--fb-threshold", common.fb_threshold, "forward-backward intensity threshold");
        sub->add_option("--seed", common.seed, "seed for stochastic steps");
        sub->add_option("--out", common.out, "output directory");
        sub->add_flag("--verbose", common.verbose, "print progress and write energy traces");
    };

    FlowArgs flow_args;
    auto* flow = app.add_subcommand("flow", "estimate flow for consecutive frame pairs");
    add_common(flow);
    flow->add_option("--visible", flow_args.visible, "visible frames (PGM/PPM), in order")->required();
    flow->add_option("--nir", flow_args.nir, "NIR frames (PGM), in order");

    std::vector<std::string> gt_nir;
    auto* gtc = app.add_subcommand("gt", "build ground-truth flow from NIR pairs");
    add_common(gtc);
    gtc->add_option("--nir", gt_nir, "NIR frames (PGM), in order")->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "error statistics against ground truth");
    add_common(eval);
    eval->add_option("--gt", eval_args.gt, "ground-truth flow files, in frame order")->required();
    eval->add_option("--est", eval_args.est, "NAME=FLOW[,FLOW...] per method")->required();
    eval->add_option("--sequence", eval_args.sequence, "sequence name in the report");
    eval->add_option("--error-scale", eval_args.error_scale, "EE mapped to white in error maps (px)");

    EntropyArgs ent_args;
    auto* ent = app.add_subcommand("entropy", "pairwise joint entropy of R, G, B, Gray, NIR");
    add_common(ent);
    ent->add_option("--visible", ent_args.visible, "RGB or gray raster")->required();
    ent->add_option("--nir", ent_args.nir, "NIR raster");
    ent->add_option("--pair", ent_args.pairs, "explicit channel pair A,B (repeatable)");
    ent->add_option("--bins", ent_args.bins, "histogram bins per axis");
    ent->add_option("--patches", ent_args.patches, "number of sampled patches");
    ent->add_option("--name", ent_args.name, "label for the CSV rows");

    SynthArgs syn_args;
    auto* syn = app.add_subcommand("synth", "render a synthetic RGB-NIR pair with exact flow");
    add_common(syn);
    syn->add_option("--tx", syn_args.tx, "translation x (px)");
    syn->add_option("--ty", syn_args.ty, "translation y (px)");
    syn->add_option("--rotation", syn_args.rotation, "rotation about the centre (deg)");
    syn->add_option("--bump", syn_args.bump, "Gaussian bump amplitude (px)");
    syn->add_option("--width", syn_args.width, "frame width");
    syn->add_option("--height", syn_args.height, "frame height");
    syn->add_option("--layout", syn_args.layout, "uniform or split");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kValidationError;
    }

    try {
        if (flow->parsed())
            return cmd_flow(common, flow_args, out);
        if (gtc->parsed())
            return cmd_gt(common, gt_nir, out);
        if (eval->parsed())
            return cmd_eval(common, eval_args, out);
        if (ent->parsed())
            return cmd_entropy(common, ent_args, out);
        if (syn->parsed())
            return cmd_synth(common, syn_args, out);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kValidationError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kValidationError;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kComputationFailure;
    }
    return kValidationError;
}

}  // namespace msflow::cli
