#pragma once

// Adaptive-width and equal-width bin partitions of a fixed-length event, and
// the per-bin mean features computed from them.
//
// An adaptive partition is the fixpoint of recursive bisection: starting from
// the whole event as one bin, any bin whose population standard deviation
// exceeds T = alpha * (max - min) is split at its midpoint (the lower half
// takes the extra sample when the width is odd), until every bin has std <= T
// or width 1.

#include "scgbin/error.hpp"
#include "scgbin/signal.hpp"
#include "scgbin/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scgbin {

/// Half-open bins [b_i, b_{i+1}) with b_0 = 0 and b_B = length.
class BinPartition {
 public:
  /// Validates: at least two boundaries, first 0, strictly increasing.
  explicit BinPartition(std::vector<Index> boundaries, std::optional<double> alpha = std::nullopt,
                        std::optional<double> threshold = std::nullopt);

  const std::vector<Index>& boundaries() const { return boundaries_; }
  Index length() const { return boundaries_.back(); }
  Index bin_count() const { return static_cast<Index>(boundaries_.size()) - 1; }
  Index begin(Index bin) const { return boundaries_[static_cast<std::size_t>(bin)]; }
  Index width(Index bin) const { return begin(bin + 1) - begin(bin); }

  /// Set for adaptive partitions only.
  std::optional<double> alpha() const { return alpha_; }
  std::optional<double> threshold() const { return threshold_; }

  /// FNV-1a over the boundary list; identifies the feature space.
  std::uint64_t fingerprint() const;

  friend bool operator==(const BinPartition& a, const BinPartition& b) {
    return a.boundaries_ == b.boundaries_;
  }

 private:
  std::vector<Index> boundaries_;
  std::optional<double> alpha_;
  std::optional<double> threshold_;
};

/// Per-bin means of one event, tagged with the partition that produced them.
struct FeatureVector {
  Eigen::VectorXd values;
  std::uint64_t partition_id = 0;
};

template <typename Derived>
BinPartition adaptive_partition(const Eigen::DenseBase<Derived>& event, double alpha) {
  const Index n = event.size();
  if (n < 1) throw ParameterError("adaptive_partition: empty event");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("adaptive_partition: alpha must lie in [0, 1]");
  const auto& y = event.derived();
  const double threshold = alpha * (y.maxCoeff() - y.minCoeff());

  // Walk the sorted boundary list left to right; a split inserts the midpoint
  // after the cursor and re-examines the (now narrower) current bin.
  std::vector<Index> bounds{0, n};
  std::size_t a = 0;
  while (a + 1 < bounds.size()) {
    const Index lo = bounds[a];
    const Index hi = bounds[a + 1];
    const Index w = hi - lo;
    if (w > 1 && population_std(y.segment(lo, w)) > threshold) {
      bounds.insert(bounds.begin() + static_cast<std::ptrdiff_t>(a) + 1, lo + (w + 1) / 2);
    } else {
      ++a;
    }
  }
  return BinPartition(std::move(bounds), alpha, threshold);
}

/// b_i = round(i * length / n_bins), half rounding up. Widths are exact when
/// n_bins divides length and otherwise differ by at most one.
BinPartition equal_partition(Index length, Index n_bins);

struct AlphaSearch {
  double alpha;
  BinPartition partition;
};

namespace detail {
inline constexpr int kAlphaBisectionMaxIter = 64;
inline constexpr double kAlphaBisectionWidth = 1e-12;
}  // namespace detail

/// Finds the achievable bin count closest to `target_bins`: the exact target
/// when some alpha reaches it, otherwise the smallest achievable count above
/// it (or the maximum achievable count when the target exceeds it). Returns
/// the largest alpha, to bisection tolerance, that produces that count.
template <typename Derived>
AlphaSearch alpha_for_bin_count(const Eigen::DenseBase<Derived>& event, Index target_bins) {
  const Index n = event.size();
  if (target_bins < 1 || target_bins > n) {
    throw ParameterError("alpha_for_bin_count: target_bins must lie in [1, event length]");
  }
  BinPartition finest = adaptive_partition(event, 0.0);
  const Index target = std::min(target_bins, finest.bin_count());
  if (target <= 1) return {1.0, adaptive_partition(event, 1.0)};

  // Invariant: count(lo) >= target > count(hi). Bin count is non-increasing in
  // alpha, and count(1) == 1.
  double lo = 0.0;
  double hi = 1.0;
  BinPartition best = std::move(finest);
  for (int it = 0; it < detail::kAlphaBisectionMaxIter && hi - lo >= detail::kAlphaBisectionWidth; ++it) {
    const double mid = 0.5 * (lo + hi);
    BinPartition p = adaptive_partition(event, mid);
    if (p.bin_count() >= target) {
      lo = mid;
      best = std::move(p);
    } else {
      hi = mid;
    }
  }
  return {lo, std::move(best)};
}

/// Mean of `event` over each bin.
template <typename Derived>
FeatureVector extract_features(const Eigen::DenseBase<Derived>& event, const BinPartition& partition) {
  if (event.size() != partition.length()) {
    throw ParameterError("extract_features: event length " + std::to_string(event.size()) +
                         " does not match partition length " + std::to_string(partition.length()));
  }
  const auto& y = event.derived();
  FeatureVector f;
  f.values.resize(partition.bin_count());
  for (Index b = 0; b < partition.bin_count(); ++b) {
    const Index lo = partition.begin(b);
    const Index w = partition.width(b);
    double sum = 0.0;
    for (Index i = lo; i < lo + w; ++i) sum += y.coeff(i);
    f.values[b] = sum / static_cast<double>(w);
  }
  f.partition_id = partition.fingerprint();
  return f;
}

/// Feature matrix, one row per event and one column per bin.
Eigen::MatrixXd extract_feature_matrix(const EventMatrix& events, const BinPartition& partition);

struct VariabilityViolation {
  Index event;
  Index bin;
  double std;
  double ratio;  ///< std / threshold
};

struct VariabilityReport {
  double threshold = 0.0;
  double tolerance = 1.05;
  Index events_checked = 0;
  std::vector<VariabilityViolation> violations;
  double worst_ratio = 0.0;
  Index worst_event = -1;
  Index worst_bin = -1;
};

/// Reports every (event, bin) pair whose std exceeds 1.05 x the partition's
/// threshold. Never alters the partition.
VariabilityReport check_bin_variability(const EventMatrix& events, const BinPartition& partition,
                                        double tolerance = 1.05);

struct EnsembleFit {
  BinPartition partition;
  double alpha;
  Index target_bins;
  VariabilityReport variability;
};

/// One shared adaptive partition for all events, fit on their ensemble
/// average, followed by the per-event variability check.
EnsembleFit fit_partition_on_ensemble(const EventMatrix& events, Index target_bins);

}  // namespace scgbin
