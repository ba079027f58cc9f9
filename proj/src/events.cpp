#include "scgbin/events.hpp"

#include "scgbin/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

namespace scgbin {

namespace {

// Smallest 2^a 3^b 5^c >= n.
Index fft_size(Index n) {
  Index best = 1;
  while (best < n) best *= 2;
  for (Index p5 = 1; p5 < best; p5 *= 5) {
    for (Index p35 = p5; p35 < best; p35 *= 3) {
      Index v = p35;
      while (v < n) v *= 2;
      best = std::min(best, v);
    }
  }
  return best;
}

}  // namespace

Eigen::VectorXd normalized_xcorr(const Eigen::VectorXd& x, const Eigen::VectorXd& templ) {
  const Index n = x.size();
  const Index m = templ.size();
  if (m == 0) throw ParameterError("matched_filter_detect: empty template");
  if (m > n) throw ParameterError("matched_filter_detect: template longer than signal");

  const Eigen::VectorXd t0 = templ.array() - templ.mean();
  const double t_norm = t0.norm();
  if (!(t_norm > 0.0)) throw ParameterError("matched_filter_detect: template has zero variance");

  // Numerator: cross-correlation with the zero-mean template. The window mean
  // drops out because t0 sums to zero.
  const Index len = fft_size(n + m - 1);
  Eigen::FFT<double> fft;
  std::vector<double> xp(static_cast<std::size_t>(len), 0.0);
  std::vector<double> tp(static_cast<std::size_t>(len), 0.0);
  std::copy(x.data(), x.data() + n, xp.begin());
  std::copy(t0.data(), t0.data() + m, tp.begin());
  std::vector<std::complex<double>> xf;
  std::vector<std::complex<double>> tf;
  fft.fwd(xf, xp);
  fft.fwd(tf, tp);
  for (std::size_t i = 0; i < xf.size(); ++i) xf[i] *= std::conj(tf[i]);
  std::vector<double> corr;
  fft.inv(corr, xf);

  std::vector<long double> s1(static_cast<std::size_t>(n) + 1, 0.0L);
  std::vector<long double> s2(static_cast<std::size_t>(n) + 1, 0.0L);
  for (Index i = 0; i < n; ++i) {
    const long double v = x[i];
    s1[static_cast<std::size_t>(i) + 1] = s1[static_cast<std::size_t>(i)] + v;
    s2[static_cast<std::size_t>(i) + 1] = s2[static_cast<std::size_t>(i)] + v * v;
  }
  const Index count = n - m + 1;
  Eigen::VectorXd energy(count);
  for (Index k = 0; k < count; ++k) {
    const auto a = static_cast<std::size_t>(k);
    const auto b = static_cast<std::size_t>(k + m);
    const long double sum = s1[b] - s1[a];
    const long double sq = s2[b] - s2[a];
    energy[k] = static_cast<double>(std::max(0.0L, sq - sum * sum / static_cast<long double>(m)));
  }
  const double floor = 1e-12 * energy.maxCoeff();

  Eigen::VectorXd out(count);
  for (Index k = 0; k < count; ++k) {
    if (energy[k] <= floor || energy[k] == 0.0) {
      out[k] = 0.0;
    } else {
      out[k] = std::clamp(corr[static_cast<std::size_t>(k)] / (t_norm * std::sqrt(energy[k])), -1.0, 1.0);
    }
  }
  return out;
}

std::vector<Detection> matched_filter_detect(const SampledSignal& scg, const Eigen::VectorXd& templ,
                                             const DetectOptions& options) {
  if (!(options.min_separation_s > 0.0)) throw ParameterError("matched_filter_detect: min_separation_s must be > 0");
  if (!(options.corr_threshold > 0.0 && options.corr_threshold <= 1.0)) {
    throw ParameterError("matched_filter_detect: corr_threshold must lie in (0, 1]");
  }
  const Eigen::VectorXd c = normalized_xcorr(scg.samples(), templ);
  const Index count = c.size();

  std::vector<Detection> peaks;
  for (Index k = 0; k < count; ++k) {
    const double v = c[k];
    if (v < options.corr_threshold) continue;
    const bool left_ok = k == 0 || v >= c[k - 1];
    const bool right_ok = k + 1 == count || v > c[k + 1];
    if (left_ok && right_ok) peaks.push_back({k, v});
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Detection& a, const Detection& b) { return a.correlation > b.correlation; });

  const double separation = options.min_separation_s * scg.rate_hz();
  std::set<Index> kept_onsets;
  std::vector<Detection> kept;
  for (const auto& p : peaks) {
    auto it = kept_onsets.lower_bound(p.onset);
    bool clash = false;
    if (it != kept_onsets.end() && static_cast<double>(*it - p.onset) < separation) clash = true;
    if (it != kept_onsets.begin() && static_cast<double>(p.onset - *std::prev(it)) < separation) clash = true;
    if (clash) continue;
    kept_onsets.insert(p.onset);
    kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) { return a.onset < b.onset; });
  return kept;
}

std::vector<Index> onsets_of(std::span<const Detection> detections) {
  std::vector<Index> out;
  out.reserve(detections.size());
  for (const auto& d : detections) out.push_back(d.onset);
  return out;
}

Eigen::VectorXd cut_template(const SampledSignal& signal, Index begin, Index end) {
  if (begin < 0 || end > signal.size() || end <= begin) {
    throw ParameterError("template range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") is outside the recording");
  }
  return signal.samples().segment(begin, end - begin);
}

Segmentation segment(const SampledSignal& scg, std::span<const Index> onsets, Index window_length) {
  if (window_length < 1) throw ParameterError("segment: window_length must be positive");
  Segmentation out;
  for (Index onset : onsets) {
    if (onset < 0 || onset + window_length > scg.size()) {
      ++out.dropped;
      continue;
    }
    out.windows.push_back({onset, scg.samples().segment(onset, window_length), scg.rate_hz()});
  }
  return out;
}

Eigen::VectorXd detrend_volume(const SampledSignal& volume, double window_s) {
  if (!(window_s > 0.0)) throw ParameterError("detrend window must be > 0");
  const Index n = volume.size();
  const auto half = static_cast<Index>(std::llround(window_s * volume.rate_hz() / 2.0));
  std::vector<long double> prefix(static_cast<std::size_t>(n) + 1, 0.0L);
  for (Index i = 0; i < n; ++i) {
    prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + volume[i];
  }
  Eigen::VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    const Index h = std::min({half, i, n - 1 - i});
    const long double sum =
        prefix[static_cast<std::size_t>(i + h + 1)] - prefix[static_cast<std::size_t>(i - h)];
    out[i] = volume[i] - static_cast<double>(sum / static_cast<long double>(2 * h + 1));
  }
  return out;
}

VolumeLabels label_onsets(const SampledSignal& volume, std::span<const Index> onsets, const LabelOptions& options) {
  for (Index onset : onsets) {
    if (onset < 0 || onset >= volume.size()) {
      throw ParameterError("label_by_lung_volume: onset " + std::to_string(onset) + " outside the volume signal");
    }
  }
  VolumeLabels out;
  const Eigen::VectorXd& raw = volume.samples();
  const double scale = raw.cwiseAbs().maxCoeff();
  const double raw_range = raw.maxCoeff() - raw.minCoeff();
  Eigen::VectorXd detrended = detrend_volume(volume, options.detrend_window_s);
  const double range = detrended.maxCoeff() - detrended.minCoeff();
  out.degenerate = raw_range == 0.0 || range <= 1e-12 * scale;

  if (out.degenerate) {
    out.labels.assign(onsets.size(), VolumeClass::HLV);
    out.detrended_at_onset.assign(onsets.size(), 0.0);
    return out;
  }

  std::vector<double> sorted(detrended.data(), detrended.data() + detrended.size());
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double median = sorted[mid];
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  out.median = median;
  for (Index onset : onsets) {
    const double v = detrended[onset];
    out.labels.push_back(v >= median ? VolumeClass::HLV : VolumeClass::LLV);
    out.detrended_at_onset.push_back(v);
  }
  return out;
}

Labeling label_by_lung_volume(std::vector<EventWindow> windows, const SampledSignal& volume,
                              const std::string& subject_id, const LabelOptions& options) {
  std::vector<Index> onsets;
  onsets.reserve(windows.size());
  for (const auto& w : windows) onsets.push_back(w.onset);
  VolumeLabels labels = label_onsets(volume, onsets, options);

  Labeling out;
  out.median = labels.median;
  out.degenerate_volume = labels.degenerate;
  if (labels.degenerate) {
    out.warnings.emplace_back("degenerate volume signal: no variation after detrending; all events labeled HLV");
  }
  out.events.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.events.push_back({std::move(windows[i]), labels.labels[i], labels.detrended_at_onset[i], subject_id});
  }
  return out;
}

EventTable to_table(std::span<const LabeledEvent> events) {
  EventTable t;
  if (events.empty()) return t;
  const Index len = events.front().window.samples.size();
  t.windows.resize(static_cast<Index>(events.size()), len);
  t.rate_hz = events.front().window.source_rate_hz;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.window.samples.size() != len) throw ParameterError("event windows have different lengths");
    t.windows.row(static_cast<Index>(i)) = e.window.samples.transpose();
    t.labels.push_back(e.label);
    t.onsets.push_back(e.window.onset);
    t.volumes.push_back(e.volume_at_onset);
    t.subjects.push_back(e.subject_id);
  }
  return t;
}

void append(EventTable& table, const EventTable& other) {
  if (other.size() == 0) return;
  if (table.size() == 0) {
    table = other;
    return;
  }
  if (table.windows.cols() != other.windows.cols()) throw ParameterError("cannot merge event tables: window lengths differ");
  const Index rows = table.size();
  table.windows.conservativeResize(rows + other.size(), Eigen::NoChange);
  table.windows.bottomRows(other.size()) = other.windows;
  table.labels.insert(table.labels.end(), other.labels.begin(), other.labels.end());
  table.onsets.insert(table.onsets.end(), other.onsets.begin(), other.onsets.end());
  table.volumes.insert(table.volumes.end(), other.volumes.begin(), other.volumes.end());
  table.subjects.insert(table.subjects.end(), other.subjects.begin(), other.subjects.end());
}

}  // namespace scgbin
