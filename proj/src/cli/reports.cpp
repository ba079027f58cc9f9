#include "scgbin/cli/reports.hpp"

#include "scgbin/binning_io.hpp"
#include "scgbin/error.hpp"

namespace scgbin::cli {

using nlohmann::json;

TrainedModel fit_model(const Eigen::MatrixXd& raw_features, std::span<const VolumeClass> labels, double cost,
                       double gamma, const SolverOptions& options) {
  TrainedModel m;
  m.scaler = StandardScaler::fit(raw_features);
  m.svm = train_svm(m.scaler.transform(raw_features), labels, cost, gamma, options);
  m.tolerance = options.tolerance;
  return m;
}

Prediction predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& raw_feature) {
  return scgbin::predict(model.svm, model.scaler.transform_one(raw_feature));
}

namespace {

json row_vector(const Eigen::Ref<const Eigen::RowVectorXd>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::RowVectorXd to_row(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  const RbfSvmModel& s = model.svm;
  json support = json::array();
  for (Index i = 0; i < s.support_samples.rows(); ++i) support.push_back(row_vector(s.support_samples.row(i)));
  return {{"kind", "rbf_svm"},
          {"hyperparameters", {{"cost", s.cost}, {"gamma", s.gamma}}},
          {"class_map", {{"+1", "HLV"}, {"-1", "LLV"}}},
          {"positive_class", "HLV"},
          {"scaler", {{"mean", row_vector(model.scaler.mean)}, {"scale", row_vector(model.scaler.scale)}}},
          {"support_samples", support},
          {"dual_coefficients", row_vector(s.dual_coefficients.transpose())},
          {"bias", s.bias},
          {"solver",
           {{"iterations", s.diagnostics.iterations},
            {"kkt_violation", s.diagnostics.kkt_violation},
            {"objective", s.diagnostics.objective},
            {"tolerance", model.tolerance}}},
          {"partition", model.partition ? partition_to_json(*model.partition) : json(nullptr)}};
}

TrainedModel model_from_json(const json& j) {
  try {
    TrainedModel m;
    m.svm.cost = j.at("hyperparameters").at("cost").get<double>();
    m.svm.gamma = j.at("hyperparameters").at("gamma").get<double>();
    m.svm.bias = j.at("bias").get<double>();
    m.scaler.mean = to_row(j.at("scaler").at("mean"));
    m.scaler.scale = to_row(j.at("scaler").at("scale"));
    const Eigen::RowVectorXd coef = to_row(j.at("dual_coefficients"));
    m.svm.dual_coefficients = coef.transpose();
    const json& support = j.at("support_samples");
    const auto dim = m.scaler.mean.size();
    m.svm.support_samples.resize(static_cast<Index>(support.size()), dim);
    for (std::size_t i = 0; i < support.size(); ++i) {
      const Eigen::RowVectorXd row = to_row(support[i]);
      if (row.size() != dim) throw ParameterError("model: support sample dimension does not match the scaler");
      m.svm.support_samples.row(static_cast<Index>(i)) = row;
    }
    if (m.svm.support_samples.rows() != coef.size()) {
      throw ParameterError("model: support sample and coefficient counts differ");
    }
    const json& solver = j.at("solver");
    m.svm.diagnostics.iterations = solver.at("iterations").get<long>();
    m.svm.diagnostics.kkt_violation = solver.at("kkt_violation").get<double>();
    m.svm.diagnostics.objective = solver.at("objective").get<double>();
    m.tolerance = solver.at("tolerance").get<double>();
    if (j.contains("partition") && !j["partition"].is_null()) m.partition = partition_from_json(j["partition"]);
    return m;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("model: ") + e.what());
  }
}

json counts_to_json(const ConfusionCounts& c) { return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}}; }

json metrics_to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"sensitivity", m.sensitivity}, {"precision", m.precision}, {"f1", m.f1}};
}

json cv_to_json(const CvResult& r) {
  json folds = json::array();
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const FoldOutcome& o = r.folds[f];
    folds.push_back({{"fold", f},
                     {"counts", counts_to_json(o.counts)},
                     {"metrics", metrics_to_json(compute_metrics(o.counts))},
                     {"solver_iterations", o.iterations}});
  }
  return {{"cost", r.cost},
          {"gamma", r.gamma},
          {"positive_class", "HLV"},
          {"folds", folds},
          {"mean_fold_accuracy", r.mean_accuracy},
          {"fold_accuracy_sd", r.accuracy_sd},
          {"mean_fold_f1", r.mean_fold_f1},
          {"fold_f1_sd", r.f1_sd},
          {"pooled_counts", counts_to_json(r.pooled)},
          {"pooled_metrics", metrics_to_json(r.pooled_metrics)}};
}

json grid_to_json(const GridResult& g, std::span<const double> costs, std::span<const double> gammas) {
  if (g.cells.size() != costs.size() * gammas.size()) throw ParameterError("grid_to_json: grid shape mismatch");
  json acc = json::array();
  for (std::size_t c = 0; c < costs.size(); ++c) {
    json row = json::array();
    for (std::size_t k = 0; k < gammas.size(); ++k) row.push_back(g.cells[c * gammas.size() + k].mean_accuracy);
    acc.push_back(row);
  }
  return {{"costs", costs}, {"gammas", gammas}, {"mean_accuracy", acc}};
}

}  // namespace scgbin::cli
