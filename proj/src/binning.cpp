#include "scgbin/binning.hpp"

#include <cmath>
#include <limits>

namespace scgbin {

BinPartition::BinPartition(std::vector<Index> boundaries, std::optional<double> alpha,
                           std::optional<double> threshold)
    : boundaries_(std::move(boundaries)), alpha_(alpha), threshold_(threshold) {
  if (boundaries_.size() < 2) throw ParameterError("BinPartition: needs at least one bin");
  if (boundaries_.front() != 0) throw ParameterError("BinPartition: first boundary must be 0");
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (boundaries_[i] <= boundaries_[i - 1]) {
      throw ParameterError("BinPartition: boundaries must be strictly increasing");
    }
  }
  if (alpha_ && !(*alpha_ >= 0.0 && *alpha_ <= 1.0)) throw ParameterError("BinPartition: alpha outside [0, 1]");
  if (threshold_ && !(*threshold_ >= 0.0)) throw ParameterError("BinPartition: negative threshold");
}

std::uint64_t BinPartition::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Index b : boundaries_) {
    auto v = static_cast<std::uint64_t>(b);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

BinPartition equal_partition(Index length, Index n_bins) {
  if (length < 1) throw ParameterError("equal_partition: length must be positive");
  if (n_bins < 1 || n_bins > length) throw ParameterError("equal_partition: n_bins must lie in [1, length]");
  std::vector<Index> bounds(static_cast<std::size_t>(n_bins) + 1);
  for (Index i = 0; i <= n_bins; ++i) {
    bounds[static_cast<std::size_t>(i)] = (2 * i * length + n_bins) / (2 * n_bins);
  }
  return BinPartition(std::move(bounds));
}

Eigen::MatrixXd extract_feature_matrix(const EventMatrix& events, const BinPartition& partition) {
  if (events.cols() != partition.length()) {
    throw ParameterError("extract_features: event length does not match partition length");
  }
  Eigen::MatrixXd features(events.rows(), partition.bin_count());
  for (Index e = 0; e < events.rows(); ++e) {
    features.row(e) = extract_features(events.row(e), partition).values.transpose();
  }
  return features;
}

VariabilityReport check_bin_variability(const EventMatrix& events, const BinPartition& partition,
                                        double tolerance) {
  if (!partition.threshold()) {
    throw ParameterError("check_bin_variability: partition has no threshold (equal-width bins)");
  }
  if (events.cols() != partition.length()) {
    throw ParameterError("check_bin_variability: event length does not match partition length");
  }
  VariabilityReport report;
  report.threshold = *partition.threshold();
  report.tolerance = tolerance;
  report.events_checked = events.rows();
  const double limit = tolerance * report.threshold;
  for (Index e = 0; e < events.rows(); ++e) {
    for (Index b = 0; b < partition.bin_count(); ++b) {
      const double s = population_std(events.row(e).segment(partition.begin(b), partition.width(b)));
      double ratio = 0.0;
      if (report.threshold > 0.0) {
        ratio = s / report.threshold;
      } else if (s > 0.0) {
        ratio = std::numeric_limits<double>::infinity();
      }
      if (ratio > report.worst_ratio) {
        report.worst_ratio = ratio;
        report.worst_event = e;
        report.worst_bin = b;
      }
      if (s > limit) report.violations.push_back({e, b, s, ratio});
    }
  }
  return report;
}

EnsembleFit fit_partition_on_ensemble(const EventMatrix& events, Index target_bins) {
  const Eigen::VectorXd average = ensemble_average(events);
  auto [alpha, partition] = alpha_for_bin_count(average, target_bins);
  VariabilityReport report = check_bin_variability(events, partition);
  return {std::move(partition), alpha, target_bins, std::move(report)};
}

}  // namespace scgbin
