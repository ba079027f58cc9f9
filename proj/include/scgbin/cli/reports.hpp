#pragma once

// JSON forms of trained models and evaluation reports.

#include "scgbin/binning.hpp"
#include "scgbin/evaluation.hpp"
#include "scgbin/svm.hpp"

#include <json.hpp>

#include <optional>

namespace scgbin::cli {

/// An SVM in standardized feature space plus the scaler that maps raw bin
/// means into it. `partition` is set when the model was trained from windows.
struct TrainedModel {
  RbfSvmModel svm;
  StandardScaler scaler;
  std::optional<BinPartition> partition;
  double tolerance = 0.0;
};

TrainedModel fit_model(const Eigen::MatrixXd& raw_features, std::span<const VolumeClass> labels, double cost,
                       double gamma, const SolverOptions& options);

Prediction predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& raw_feature);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

nlohmann::json counts_to_json(const ConfusionCounts& c);
nlohmann::json metrics_to_json(const Metrics& m);

/// Per-fold outcomes, pooled counts and metrics, and summary statistics.
nlohmann::json cv_to_json(const CvResult& r);

/// Mean CV accuracy for every grid cell, rows by cost and columns by gamma.
nlohmann::json grid_to_json(const GridResult& g, std::span<const double> costs, std::span<const double> gammas);

}  // namespace scgbin::cli
