#pragma once

#include "scgbin/svm.hpp"
#include "scgbin/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace scgbin {

/// Confusion counts with HLV as the positive class.
struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
  void add(VolumeClass truth, VolumeClass predicted);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

/// sensitivity = tp/(tp+fn), precision = tp/(tp+fp), f1 their harmonic mean.
/// Any ratio with a zero denominator is 0.
Metrics compute_metrics(const ConfusionCounts& counts);

/// Per-feature standardization with statistics from the fitting rows only.
/// Columns with zero variance get unit scale.
struct StandardScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static StandardScaler fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  /// One sample as a column vector.
  Eigen::VectorXd transform_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Stratified k-fold test sets. Within each class (HLV first) a seeded shuffle
/// deals indices round-robin, continuing the fold cursor across classes, so
/// fold sizes differ by at most one overall and per class. Each fold is sorted.
std::vector<std::vector<Index>> kfold_split(std::span<const VolumeClass> labels, int k, std::uint64_t seed);

struct FoldOutcome {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double f1 = 0.0;
  long iterations = 0;
};

struct CvResult {
  double cost = 0.0;
  double gamma = 0.0;
  std::vector<FoldOutcome> folds;
  double mean_accuracy = 0.0;  ///< mean of the per-fold accuracies
  double accuracy_sd = 0.0;    ///< sample sd of the per-fold accuracies
  ConfusionCounts pooled;
  Metrics pooled_metrics;      ///< from the pooled confusion counts
  double mean_fold_f1 = 0.0;
  double f1_sd = 0.0;
};

/// Trains on k-1 folds and tests on the held-out fold, k times. Features are
/// standardized with training-fold statistics.
CvResult cross_validate(const Eigen::MatrixXd& features, std::span<const VolumeClass> labels, int k, double cost,
                        double gamma, std::uint64_t seed, const SolverOptions& options = {});

struct GridResult {
  CvResult best;
  std::vector<CvResult> cells;  ///< cost-major order
};

/// Exhaustive search over cost x gamma with identical folds for every cell.
/// Highest mean CV accuracy wins; ties go to the smaller cost, then the
/// smaller gamma.
GridResult grid_search(const Eigen::MatrixXd& features, std::span<const VolumeClass> labels, int k,
                       std::span<const double> cost_grid, std::span<const double> gamma_grid, std::uint64_t seed,
                       const SolverOptions& options = {});

/// 2^-5, 2^-3, ..., 2^15
std::vector<double> default_cost_grid();
/// 2^-15, 2^-13, ..., 2^3
std::vector<double> default_gamma_grid();

/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

}  // namespace scgbin
