#pragma once

// Experiment configuration: flat `key = value` text or one JSON object,
// resolved against the parameter table of a subcommand.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gmpl::cli {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

struct ParamSpec {
    std::string key;
    std::string fallback;
    std::string help;
};

struct ExperimentInfo {
    std::string name;
    std::string tag;
    std::string summary;
    std::vector<ParamSpec> params;
    bool seeded = false;
    bool writes_files = true;
};

/// Every subcommand, in usage order.
const std::vector<ExperimentInfo>& experiments();
/// nullptr when unknown.
const ExperimentInfo* find_experiment(std::string_view name);

/// Parses `key = value` lines (# comments, blank lines) or, when the first
/// non-blank character is '{', a flat JSON object whose values are scalars or
/// arrays of scalars (joined with commas). Duplicate keys are errors.
ConfigEntries parse_config(std::string_view text);
ConfigEntries load_config(const std::filesystem::path& path);

class ResolvedConfig {
public:
    ResolvedConfig(const ExperimentInfo& info, ConfigEntries values);

    const ExperimentInfo& info() const { return *info_; }
    /// Parameter order of the experiment.
    const ConfigEntries& entries() const { return values_; }

    const std::string& str(std::string_view key) const;
    std::uint64_t u64(std::string_view key) const;
    double real(std::string_view key) const;
    /// Comma separated; integer lists also accept a..b ranges.
    std::vector<std::uint64_t> u64_list(std::string_view key) const;

    /// `key = value` lines, loadable with parse_config.
    std::string to_text() const;

private:
    const ExperimentInfo* info_;
    ConfigEntries values_;
};

/// Defaults, then file values, then overrides. An `experiment` key in the
/// file must name the same subcommand; other unknown keys are errors.
ResolvedConfig resolve(const ExperimentInfo& info, const ConfigEntries& file, const ConfigEntries& overrides = {});

std::uint64_t parse_u64(std::string_view text, std::string_view what);
double parse_real(std::string_view text, std::string_view what);

}  // namespace gmpl::cli
