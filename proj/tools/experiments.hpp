#pragma once

// Subcommand runners. Every runner renders its outputs in memory; nothing
// touches the file system until write_outputs.

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace gmpl::cli {

struct OutputFile {
    std::string name;
    std::string content;
};

struct Outcome {
    std::vector<OutputFile> files;
    std::string text;  // printed on stdout
    nlohmann::ordered_json report;
};

struct RunContext {
    unsigned threads = 0;  // 0 = default_threads()
};

Outcome run_experiment(const ResolvedConfig& cfg, const RunContext& ctx = {});

/// Writes every file under `dir` (created if needed) via temporary names.
void write_outputs(const Outcome& outcome, const std::filesystem::path& dir);

/// Comment block heading every CSV file: version, tag, seed, resolved config.
std::string csv_preamble(const ResolvedConfig& cfg);

}  // namespace gmpl::cli
