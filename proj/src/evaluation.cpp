#include "scgbin/evaluation.hpp"

#include "scgbin/error.hpp"
#include "scgbin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scgbin {

void ConfusionCounts::add(VolumeClass truth, VolumeClass predicted) {
  const bool pos_truth = truth == VolumeClass::HLV;
  const bool pos_pred = predicted == VolumeClass::HLV;
  if (pos_truth && pos_pred) ++tp;
  else if (!pos_truth && pos_pred) ++fp;
  else if (pos_truth) ++fn;
  else ++tn;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Metrics compute_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0) throw ParameterError("compute_metrics: negative count");
  if (c.total() == 0) throw ParameterError("compute_metrics: all counts are zero");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.sensitivity = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  const double denom = m.sensitivity + m.precision;
  m.f1 = denom > 0.0 ? 2.0 * (m.sensitivity * m.precision) / denom : 0.0;
  return m;
}

StandardScaler StandardScaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw ParameterError("StandardScaler: no rows");
  StandardScaler s;
  s.mean = x.colwise().mean();
  const Eigen::RowVectorXd var =
      (x.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(x.rows());
  s.scale = var.array().sqrt();
  for (Index c = 0; c < s.scale.size(); ++c) {
    if (!(s.scale[c] > 0.0)) s.scale[c] = 1.0;
  }
  return s;
}

Eigen::MatrixXd StandardScaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw ParameterError("StandardScaler: dimension mismatch");
  return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Eigen::VectorXd StandardScaler::transform_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean.size()) throw ParameterError("StandardScaler: dimension mismatch");
  return ((x.transpose() - mean).array() / scale.array()).matrix().transpose();
}

std::vector<std::vector<Index>> kfold_split(std::span<const VolumeClass> labels, int k, std::uint64_t seed) {
  const auto n = static_cast<Index>(labels.size());
  if (k < 2) throw ParameterError("kfold_split: k must be >= 2");
  if (k > n) throw ParameterError("kfold_split: k = " + std::to_string(k) + " exceeds sample count " + std::to_string(n));

  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  Rng rng(seed);
  std::size_t cursor = 0;
  for (VolumeClass cls : {VolumeClass::HLV, VolumeClass::LLV}) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == cls) members.push_back(i);
    }
    rng.shuffle(members);
    for (Index idx : members) {
      folds[cursor].push_back(idx);
      cursor = (cursor + 1) % folds.size();
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

void finalize(CvResult& r) {
  std::vector<double> acc;
  std::vector<double> f1;
  r.pooled = {};
  for (const auto& f : r.folds) {
    acc.push_back(f.accuracy);
    f1.push_back(f.f1);
    r.pooled += f.counts;
  }
  r.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
  r.accuracy_sd = sample_sd(acc);
  r.mean_fold_f1 = std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
  r.f1_sd = sample_sd(f1);
  r.pooled_metrics = compute_metrics(r.pooled);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const Index> rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = x.row(rows[r]);
  return out;
}

}  // namespace

GridResult grid_search(const Eigen::MatrixXd& features, std::span<const VolumeClass> labels, int k,
                       std::span<const double> cost_grid, std::span<const double> gamma_grid, std::uint64_t seed,
                       const SolverOptions& options) {
  const Index n = features.rows();
  if (static_cast<Index>(labels.size()) != n) throw ParameterError("cross_validate: feature/label count mismatch");
  if (cost_grid.empty() || gamma_grid.empty()) throw ParameterError("grid_search: empty grid");
  for (double c : cost_grid) {
    if (!(c > 0.0)) throw ParameterError("grid_search: cost values must be > 0");
  }
  for (double g : gamma_grid) {
    if (!(g > 0.0)) throw ParameterError("grid_search: gamma values must be > 0");
  }

  const auto folds = kfold_split(labels, k, seed);
  const Eigen::VectorXd y = targets_of(labels);

  std::vector<std::vector<Index>> train_sets(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> in_test(static_cast<std::size_t>(n), 0);
    for (Index i : folds[f]) in_test[static_cast<std::size_t>(i)] = 1;
    bool has_pos = false;
    bool has_neg = false;
    for (Index i = 0; i < n; ++i) {
      if (in_test[static_cast<std::size_t>(i)]) continue;
      train_sets[f].push_back(i);
      (y[i] > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
      throw ParameterError("cross_validate: training set for fold " + std::to_string(f) + " lacks one class");
    }
  }

  const std::size_t n_cost = cost_grid.size();
  const std::size_t n_gamma = gamma_grid.size();
  GridResult result;
  result.cells.resize(n_cost * n_gamma);
  for (std::size_t c = 0; c < n_cost; ++c) {
    for (std::size_t g = 0; g < n_gamma; ++g) {
      auto& cell = result.cells[c * n_gamma + g];
      cell.cost = cost_grid[c];
      cell.gamma = gamma_grid[g];
      cell.folds.resize(folds.size());
    }
  }

  std::vector<std::size_t> cost_order(n_cost);
  std::iota(cost_order.begin(), cost_order.end(), std::size_t{0});
  std::stable_sort(cost_order.begin(), cost_order.end(),
                   [&](std::size_t a, std::size_t b) { return cost_grid[a] < cost_grid[b]; });

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& train = train_sets[f];
    const auto& test = folds[f];
    const Eigen::MatrixXd x_train = select_rows(features, train);
    const StandardScaler scaler = StandardScaler::fit(x_train);
    const Eigen::MatrixXd z_train = scaler.transform(x_train);
    const Eigen::MatrixXd z_test = scaler.transform(select_rows(features, test));
    Eigen::MatrixXd d_train = squared_distances(z_train, z_train);
    d_train.diagonal().setZero();
    const Eigen::MatrixXd d_test = squared_distances(z_test, z_train);
    Eigen::VectorXd y_train(static_cast<Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) y_train[static_cast<Index>(i)] = y[train[i]];

    for (std::size_t g = 0; g < n_gamma; ++g) {
      const Eigen::MatrixXd k_train = kernel_from_distances(d_train, gamma_grid[g]);
      const Eigen::MatrixXd k_test = kernel_from_distances(d_test, gamma_grid[g]);
      // Ascending cost, each solve warm-started from the previous solution
      // (feasible because the box only grows).
      Eigen::VectorXd warm;
      for (std::size_t c : cost_order) {
        const DualSolution sol = solve_dual(k_train, y_train, cost_grid[c], options, warm.size() ? &warm : nullptr);
        warm = sol.alpha;
        const Eigen::VectorXd coef = sol.alpha.cwiseProduct(y_train);
        const Eigen::VectorXd decision = (k_test * coef).array() + sol.bias;
        FoldOutcome& out = result.cells[c * n_gamma + g].folds[f];
        for (std::size_t t = 0; t < test.size(); ++t) {
          const VolumeClass predicted = decision[static_cast<Index>(t)] >= 0.0 ? VolumeClass::HLV : VolumeClass::LLV;
          out.counts.add(labels[static_cast<std::size_t>(test[t])], predicted);
        }
        const Metrics m = compute_metrics(out.counts);
        out.accuracy = m.accuracy;
        out.f1 = m.f1;
        out.iterations = sol.diagnostics.iterations;
      }
    }
  }

  constexpr double kTie = 1e-12;
  const CvResult* best = nullptr;
  for (auto& cell : result.cells) {
    finalize(cell);
    if (best == nullptr || cell.mean_accuracy > best->mean_accuracy + kTie) {
      best = &cell;
    } else if (std::abs(cell.mean_accuracy - best->mean_accuracy) <= kTie) {
      if (cell.cost < best->cost || (cell.cost == best->cost && cell.gamma < best->gamma)) best = &cell;
    }
  }
  result.best = *best;
  return result;
}

CvResult cross_validate(const Eigen::MatrixXd& features, std::span<const VolumeClass> labels, int k, double cost,
                        double gamma, std::uint64_t seed, const SolverOptions& options) {
  const double costs[] = {cost};
  const double gammas[] = {gamma};
  return grid_search(features, labels, k, costs, gammas, seed, options).best;
}

std::vector<double> default_cost_grid() {
  std::vector<double> g;
  for (int e = -5; e <= 15; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int e = -15; e <= 3; e += 2) g.push_back(std::ldexp(1.0, e));
  return g;
}

}  // namespace scgbin
