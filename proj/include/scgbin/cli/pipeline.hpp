#pragma once

// Recording-to-features plumbing used by the pipeline, bin and experiment
// subcommands.

#include "scgbin/binning.hpp"
#include "scgbin/cli/config.hpp"
#include "scgbin/events.hpp"
#include "scgbin/signal.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scgbin::cli {

struct RecordingInput {
  SampledSignal scg;
  SampledSignal volume;
  std::vector<Index> truth_onsets;  ///< empty when unknown
};

struct PreprocessStats {
  Index detected = 0;
  Index dropped = 0;           ///< windows overrunning the recording end
  Index truth_total = 0;       ///< truth onsets followed by a full template span
  Index truth_matched = 0;     ///< truth onsets with a detection within the tolerance
  Index hlv = 0;
  Index llv = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Detections within this many samples of a truth onset count as matches.
constexpr Index kOnsetTolerance = 5;

Index count_matched(std::span<const Index> truth, std::span<const Index> detected, Index tolerance = kOnsetTolerance);

/// filter -> detect -> segment -> label for each recording; the labeled
/// events of all recordings are pooled (each is labeled against its own
/// volume median). Throws EmptyResultError when nothing survives.
EventTable preprocess(std::span<const RecordingInput> recordings, const Eigen::VectorXd& templ,
                      const std::string& subject, const PipelineOptions& options, PreprocessStats* stats = nullptr);

/// "s01", "s02", ...
std::string subject_name(int index);

/// Generates every trial of one synthetic subject and preprocesses it with
/// the nominal event as template.
EventTable synth_subject(const AppConfig& config, int index, PreprocessStats* stats = nullptr);

/// Directory layout written by `synth`: `<out>/<subject>/trial_<t>/` holding
/// scg.f32, flow.f32, volume.f32 (each with a JSON sidecar) and truth.json.
void write_synth_subject(const AppConfig& config, int index, const std::filesystem::path& out);

/// Loads scg.f32 / volume.f32 (or .csv) and truth.json when present.
RecordingInput read_recording_dir(const std::filesystem::path& dir);

struct BinnedFeatures {
  BinPartition partition;
  Eigen::MatrixXd features;
  std::optional<VariabilityReport> variability;  ///< adaptive partitions only
};

BinnedFeatures bin_events(const EventMatrix& windows, BinMethod method, Index bins);

/// Stem used for per-(method, bins) output files, e.g. "aw_16".
std::string cell_stem(BinMethod method, Index bins);

}  // namespace scgbin::cli
