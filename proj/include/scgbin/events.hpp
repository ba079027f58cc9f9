#pragma once

#include "scgbin/signal.hpp"
#include "scgbin/types.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace scgbin {

constexpr Index kDefaultWindowLength = 4096;

struct DetectOptions {
  double min_separation_s = 0.3;
  double corr_threshold = 0.6;
};

struct Detection {
  Index onset;         ///< start of the matched window
  double correlation;  ///< normalized cross-correlation at the onset
};

/// Zero-mean, unit-norm sliding correlation of `templ` against every window of
/// `x`; element k covers x[k, k + M). Windows with (numerically) zero variance
/// score 0. Output length is N - M + 1.
Eigen::VectorXd normalized_xcorr(const Eigen::VectorXd& x, const Eigen::VectorXd& templ);

/// Local maxima of the normalized correlation at or above the threshold,
/// kept greedily from the highest down while suppressing anything closer than
/// `min_separation_s`. Sorted by onset.
std::vector<Detection> matched_filter_detect(const SampledSignal& scg, const Eigen::VectorXd& templ,
                                             const DetectOptions& options = {});

std::vector<Index> onsets_of(std::span<const Detection> detections);

/// Template bootstrap: the samples [begin, end) of a recording.
Eigen::VectorXd cut_template(const SampledSignal& signal, Index begin, Index end);

struct EventWindow {
  Index onset = 0;
  Eigen::VectorXd samples;
  double source_rate_hz = 0.0;
};

struct Segmentation {
  std::vector<EventWindow> windows;
  Index dropped = 0;  ///< onsets whose window would overrun the signal
};

Segmentation segment(const SampledSignal& scg, std::span<const Index> onsets,
                     Index window_length = kDefaultWindowLength);

struct LabeledEvent {
  EventWindow window;
  VolumeClass label = VolumeClass::LLV;
  double volume_at_onset = 0.0;  ///< detrended volume
  std::string subject_id;
};

struct LabelOptions {
  double detrend_window_s = 30.0;
};

/// Subtracts a centered moving mean. Near the edges the window shrinks
/// symmetrically, so a linear trend is removed everywhere.
Eigen::VectorXd detrend_volume(const SampledSignal& volume, double window_s);

struct VolumeLabels {
  std::vector<VolumeClass> labels;
  std::vector<double> detrended_at_onset;
  double median = 0.0;
  bool degenerate = false;
};

/// HLV when the detrended volume at the onset is >= the recording median,
/// else LLV. A flat volume signal labels everything HLV and is flagged.
VolumeLabels label_onsets(const SampledSignal& volume, std::span<const Index> onsets,
                          const LabelOptions& options = {});

struct Labeling {
  std::vector<LabeledEvent> events;
  double median = 0.0;
  bool degenerate_volume = false;
  std::vector<std::string> warnings;
};

Labeling label_by_lung_volume(std::vector<EventWindow> windows, const SampledSignal& volume,
                              const std::string& subject_id = {}, const LabelOptions& options = {});

/// Labeled events in columnar form; `windows` has one event per row.
struct EventTable {
  EventMatrix windows;
  std::vector<VolumeClass> labels;
  std::vector<Index> onsets;
  std::vector<double> volumes;
  std::vector<std::string> subjects;
  double rate_hz = 0.0;

  Index size() const { return windows.rows(); }
};

EventTable to_table(std::span<const LabeledEvent> events);

/// Appends `other` (same window length) to `table`.
void append(EventTable& table, const EventTable& other);

}  // namespace scgbin
