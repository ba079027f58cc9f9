#include "scgbin/cli/pipeline.hpp"

#include "scgbin/error.hpp"
#include "scgbin/signal_io.hpp"
#include "scgbin/text_io.hpp"

#include <algorithm>
#include <cstdio>

namespace scgbin::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json PreprocessStats::to_json() const {
  json j = {{"detected", detected}, {"dropped", dropped}, {"hlv", hlv}, {"llv", llv}, {"warnings", warnings}};
  if (truth_total > 0) {
    j["truth_total"] = truth_total;
    j["truth_matched"] = truth_matched;
  }
  return j;
}

Index count_matched(std::span<const Index> truth, std::span<const Index> detected, Index tolerance) {
  // Both lists ascending.
  Index matched = 0;
  std::size_t d = 0;
  for (Index t : truth) {
    while (d < detected.size() && detected[d] < t - tolerance) ++d;
    if (d < detected.size() && detected[d] <= t + tolerance) ++matched;
  }
  return matched;
}

EventTable preprocess(std::span<const RecordingInput> recordings, const Eigen::VectorXd& templ,
                      const std::string& subject, const PipelineOptions& options, PreprocessStats* stats) {
  PreprocessStats local;
  EventTable table;
  for (const auto& rec : recordings) {
    if (rec.volume.size() != rec.scg.size() || rec.volume.rate_hz() != rec.scg.rate_hz()) {
      throw ParameterError("preprocess: SCG and volume signals must share length and rate");
    }
    const SampledSignal filtered = lowpass_filter(rec.scg, options.lowpass_hz);
    // The template passes through the same front end as the signal.
    const Eigen::VectorXd matched_templ =
        lowpass_filter(SampledSignal(templ, rec.scg.rate_hz(), rec.scg.unit()), options.lowpass_hz).samples();
    const auto detections = matched_filter_detect(filtered, matched_templ, options.detect);
    const auto onsets = onsets_of(detections);
    local.detected += static_cast<Index>(onsets.size());
    if (!rec.truth_onsets.empty()) {
      // Only onsets with a full template span after them are detectable.
      std::vector<Index> truth;
      for (Index t : rec.truth_onsets)
        if (t + matched_templ.size() <= rec.scg.size()) truth.push_back(t);
      std::sort(truth.begin(), truth.end());
      local.truth_total += static_cast<Index>(truth.size());
      local.truth_matched += count_matched(truth, onsets);
    }
    Segmentation seg = segment(filtered, onsets, options.window_length);
    local.dropped += seg.dropped;
    Labeling lab = label_by_lung_volume(std::move(seg.windows), rec.volume, subject, options.label);
    for (auto& w : lab.warnings) local.warnings.push_back(subject + ": " + w);
    append(table, to_table(lab.events));
  }
  for (VolumeClass l : table.labels) ++(l == VolumeClass::HLV ? local.hlv : local.llv);
  if (stats != nullptr) *stats = local;
  if (table.size() == 0) throw EmptyResultError("no events detected for subject '" + subject + "'");
  return table;
}

std::string subject_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", index + 1);
  return buf;
}

EventTable synth_subject(const AppConfig& config, int index, PreprocessStats* stats) {
  std::vector<RecordingInput> recs;
  for (int t = 0; t < config.synth.trials; ++t) {
    Recording r = gen_scg_recording(config.synth, trial_seed(config.seed, static_cast<std::uint64_t>(index),
                                                             static_cast<std::uint64_t>(t)));
    recs.push_back({std::move(r.scg), std::move(r.volume), std::move(r.onsets)});
  }
  return preprocess(recs, nominal_event(config.synth), subject_name(index), config.pipeline, stats);
}

void write_synth_subject(const AppConfig& config, int index, const fs::path& out) {
  const std::string name = subject_name(index);
  for (int t = 0; t < config.synth.trials; ++t) {
    const std::uint64_t seed =
        trial_seed(config.seed, static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(t));
    const Recording r = gen_scg_recording(config.synth, seed);
    const fs::path dir = out / name / ("trial_" + std::to_string(t));
    fs::create_directories(dir);
    write_signal_f32(dir / "scg.f32", r.scg);
    write_signal_f32(dir / "flow.f32", r.flow);
    write_signal_f32(dir / "volume.f32", r.volume);
    json labels = json::array();
    for (VolumeClass l : r.labels) labels.push_back(std::string(to_string(l)));
    const json truth = {{"subject", name}, {"trial", t},    {"stream_seed", seed},
                        {"onsets", r.onsets}, {"labels", labels}, {"config", to_json(config)}};
    write_file_atomic(dir / "truth.json", truth.dump(1) + "\n");
  }
}

namespace {

fs::path signal_file(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".f32", ".csv"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  throw ParameterError(dir.string() + ": missing " + stem + ".f32 or " + stem + ".csv");
}

}  // namespace

RecordingInput read_recording_dir(const fs::path& dir) {
  RecordingInput in{read_signal(signal_file(dir, "scg")), read_signal(signal_file(dir, "volume")), {}};
  const fs::path truth = dir / "truth.json";
  if (fs::exists(truth)) {
    try {
      in.truth_onsets = json::parse(read_file(truth)).at("onsets").get<std::vector<Index>>();
    } catch (const json::exception& e) {
      throw ParameterError(truth.string() + ": " + e.what());
    }
  }
  return in;
}

BinnedFeatures bin_events(const EventMatrix& windows, BinMethod method, Index bins) {
  if (windows.rows() == 0) throw EmptyResultError("bin_events: no events");
  if (method == BinMethod::EqualWidth) {
    BinPartition p = equal_partition(windows.cols(), bins);
    Eigen::MatrixXd f = extract_feature_matrix(windows, p);
    return {std::move(p), std::move(f), std::nullopt};
  }
  EnsembleFit fit = fit_partition_on_ensemble(windows, bins);
  Eigen::MatrixXd f = extract_feature_matrix(windows, fit.partition);
  return {std::move(fit.partition), std::move(f), std::move(fit.variability)};
}

std::string cell_stem(BinMethod method, Index bins) { return to_string(method) + "_" + std::to_string(bins); }

}  // namespace scgbin::cli
