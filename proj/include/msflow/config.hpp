#ifndef MSFLOW_CONFIG_HPP
#define MSFLOW_CONFIG_HPP

#include "msflow/gt.hpp"
#include "msflow/solver.hpp"
#include "msflow/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace msflow {

struct EntropySettings {
    int bins = 16;
    int n_patches = 20000;
    int patch = 3;
};

/// Everything a run can be configured with.
struct Settings {
    SolverParams solver;
    gt::GtConfig gt;
    EntropySettings entropy;
    synth::SceneParams synth;
    std::uint64_t seed = 1;
};

/// Sets one field by its config key (e.g. "gamma", "gt.m_p", "synth.tx").
/// Throws InvalidArgument on an unknown key or a malformed value.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);

/// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
void apply_config(Settings& settings, std::istream& in);
void load_config(Settings& settings, const std::filesystem::path& path);

/// Every key with its current value, formatted so that apply_setting restores it.
std::map<std::string, std::string> describe(const Settings& settings);

}  // namespace msflow

#endif  // MSFLOW_CONFIG_HPP
