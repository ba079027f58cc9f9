#pragma once

// Resolved configuration shared by every subcommand. One JSON file overrides
// any subset of the defaults; unknown keys are rejected so typos surface as
// configuration errors.

#include "scgbin/events.hpp"
#include "scgbin/evaluation.hpp"
#include "scgbin/svm.hpp"
#include "scgbin/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scgbin::cli {

enum class BinMethod { EqualWidth, AdaptiveWidth };

/// "ew" / "aw"
std::string to_string(BinMethod m);
BinMethod parse_method(std::string_view text);

struct PipelineOptions {
  double lowpass_hz = 100.0;
  Index window_length = kDefaultWindowLength;
  DetectOptions detect;
  LabelOptions label;
};

struct ExperimentOptions {
  std::vector<Index> bin_counts{16, 32, 64, 128, 256, 512, 1024};
  std::vector<BinMethod> methods{BinMethod::EqualWidth, BinMethod::AdaptiveWidth};
  int k = 10;
  std::vector<double> cost_grid = default_cost_grid();
  std::vector<double> gamma_grid = default_gamma_grid();
  SolverOptions solver;
};

struct AppConfig {
  std::uint64_t seed = 1;
  /// Synthetic subjects are used when `datasets` is empty.
  int synthetic_subjects = 7;
  /// Labeled-event datasets (`.jsonl`), one per subject.
  std::vector<std::string> datasets;
  SynthConfig synth;
  PipelineOptions pipeline;
  ExperimentOptions experiment;

  /// Throws ParameterError naming the offending field.
  void validate() const;
  int subject_count() const;
};

AppConfig app_config_from_json(const nlohmann::json& j);
/// Defaults when `path` is empty.
AppConfig load_app_config(const std::filesystem::path& path);
nlohmann::json to_json(const AppConfig& c);

/// Command-line overrides. Applying them keeps the synth seed equal to the
/// master seed.
void set_seed(AppConfig& c, std::uint64_t seed);

/// Comma-separated positive integers.
std::vector<Index> parse_bin_list(std::string_view text);

/// FNV-1a of the canonical JSON dump; tags resumable outputs.
std::uint64_t config_hash(const nlohmann::json& j);

}  // namespace scgbin::cli
