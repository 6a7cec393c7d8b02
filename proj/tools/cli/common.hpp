#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vasr/dataset/sample.hpp"
#include "vasr/fusion/image_feature.hpp"
#include "vasr/text/vocab.hpp"

namespace vasr::cli {

namespace fs = std::filesystem;

void add_data_commands(CLI::App& app);
void add_model_commands(CLI::App& app);
void add_eval_commands(CLI::App& app);

/// Adds `--config FILE` to a subcommand; see expand_config_args.
void add_config_option(CLI::App& sub);

/// Returns argv with the contents of any `--config FILE` appended as flags.
/// The file holds flat `key = value` lines naming long options without
/// dashes; options already on the command line win. `true`/`false` toggle
/// flags. Blank lines and lines starting with '#' are skipped.
std::vector<std::string> expand_config_args(int argc, char** argv);

std::vector<std::string> read_lines(const fs::path& path);
void write_lines(const fs::path& path, const std::vector<std::string>& lines);
void write_text(const fs::path& path, const std::string& text);
/// Creates the parent directory of an output path when missing.
void ensure_parent(const fs::path& path);

std::vector<dataset::SampleRecord> read_manifests(const std::vector<std::string>& paths);

/// Logs a line to standard error.
void log(const std::string& message);

}  // namespace vasr::cli
