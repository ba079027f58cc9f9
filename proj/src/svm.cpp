#include "scgbin/svm.hpp"

#include "scgbin/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace scgbin {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

DualSolution solve_dual(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, double cost,
                        const SolverOptions& options, const Eigen::VectorXd* initial_alpha) {
  const Index n = y.size();
  if (kernel.rows() != n || kernel.cols() != n) throw ParameterError("solve_dual: kernel/target size mismatch");
  if (!(cost > 0.0)) throw ParameterError("solve_dual: cost must be > 0");

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q a - 1
  if (initial_alpha != nullptr) {
    if (initial_alpha->size() != n) throw ParameterError("solve_dual: initial alpha has the wrong size");
    if ((initial_alpha->array() < 0.0).any() || (initial_alpha->array() > cost).any()) {
      throw ParameterError("solve_dual: initial alpha outside [0, cost]");
    }
    alpha = *initial_alpha;
    grad = y.cwiseProduct(kernel * alpha.cwiseProduct(y)).array() - 1.0;
  }
  const Eigen::VectorXd diag = kernel.diagonal();
  const double* yv = y.data();
  double* a = alpha.data();
  double* g = grad.data();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  auto in_up = [&](Index t) { return yv[t] > 0 ? a[t] < cost : a[t] > 0.0; };
  auto in_low = [&](Index t) { return yv[t] > 0 ? a[t] > 0.0 : a[t] < cost; };

  // Shrinking: variables stuck at a bound are dropped from the active set and
  // their gradients go stale until the next reconstruction.
  std::vector<Index> active(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) active[static_cast<std::size_t>(t)] = t;
  auto reconstruct = [&] {
    grad = y.cwiseProduct(kernel * alpha.cwiseProduct(y)).array() - 1.0;
    active.resize(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) active[static_cast<std::size_t>(t)] = t;
  };

  double gmax = -kInf;
  Index i = -1;
  auto select_first = [&] {
    gmax = -kInf;
    i = -1;
    for (Index t : active) {
      if (in_up(t)) {
        const double v = -yv[t] * g[t];
        if (v > gmax) {
          gmax = v;
          i = t;
        }
      }
    }
  };

  auto shrink = [&](bool& unshrunk) {
    double up_max = -kInf;   // max over I_up of -y G
    double low_max = -kInf;  // max over I_low of y G
    for (Index t : active) {
      if (in_up(t)) up_max = std::max(up_max, -yv[t] * g[t]);
      if (in_low(t)) low_max = std::max(low_max, yv[t] * g[t]);
    }
    if (!unshrunk && up_max + low_max <= 10.0 * options.tolerance) {
      unshrunk = true;
      reconstruct();
      return;
    }
    std::vector<Index> kept;
    kept.reserve(active.size());
    for (Index t : active) {
      bool drop = false;
      if (a[t] >= cost) {
        drop = yv[t] > 0 ? -g[t] > up_max : -g[t] > low_max;
      } else if (a[t] <= 0.0) {
        drop = yv[t] > 0 ? g[t] > low_max : g[t] > up_max;
      }
      if (!drop) kept.push_back(t);
    }
    active.swap(kept);
  };

  const long shrink_period = std::min<long>(static_cast<long>(n), 1000);
  long countdown = shrink_period;
  bool unshrunk = false;
  long iter = 0;
  double violation = 0.0;
  select_first();
  for (;;) {
    if (options.shrinking && --countdown == 0) {
      countdown = shrink_period;
      shrink(unshrunk);
      select_first();
    }

    double gmin = kInf;
    Index j = -1;
    double best_gain = kInf;
    if (i >= 0) {
      const double* ki = kernel.col(i).data();
      for (Index t : active) {
        if (!in_low(t)) continue;
        const double v = -yv[t] * g[t];
        gmin = std::min(gmin, v);
        const double b = gmax - v;
        if (b > 0.0) {
          double quad = diag[i] + diag[t] - 2.0 * ki[t];
          if (quad <= 0.0) quad = kTau;
          const double gain = -(b * b) / quad;
          if (gain < best_gain) {
            best_gain = gain;
            j = t;
          }
        }
      }
    }
    violation = (i >= 0 && std::isfinite(gmin)) ? gmax - gmin : 0.0;
    if (i < 0 || j < 0 || violation < options.tolerance) {
      if (static_cast<Index>(active.size()) == n) break;
      // Converged on the shrunk problem: check the full one.
      reconstruct();
      select_first();
      countdown = shrink_period;
      continue;
    }
    if (iter >= options.max_iterations) {
      std::ostringstream msg;
      msg << "SVM solver did not converge after " << iter << " iterations (KKT violation " << violation << ")";
      throw ConvergenceError(msg.str(), iter, violation);
    }

    const double* ki = kernel.col(i).data();
    const double* kj = kernel.col(j).data();
    const double old_i = a[i];
    const double old_j = a[j];
    double quad = diag[i] + diag[j] - 2.0 * ki[j];
    if (quad <= 0.0) quad = kTau;
    if (yv[i] != yv[j]) {
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > cost) {
          a[i] = cost;
          a[j] = cost - diff;
        }
      } else if (a[j] > cost) {
        a[j] = cost;
        a[i] = cost + diff;
      }
    } else {
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > cost) {
        if (a[i] > cost) {
          a[i] = cost;
          a[j] = sum - cost;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > cost) {
        if (a[j] > cost) {
          a[j] = cost;
          a[i] = sum - cost;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }

    // G_t += y_t (y_i dA_i K_ti + y_j dA_j K_tj), fused with the next
    // maximal-violator search.
    const double ci = yv[i] * (a[i] - old_i);
    const double cj = yv[j] * (a[j] - old_j);
    gmax = -kInf;
    i = -1;
    for (Index t : active) {
      g[t] += yv[t] * (ci * ki[t] + cj * kj[t]);
      if (in_up(t)) {
        const double v = -yv[t] * g[t];
        if (v > gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    ++iter;
  }

  // Bias: average over free vectors, else the midpoint of the feasible range.
  double free_sum = 0.0;
  Index free_count = 0;
  double ub = kInf;
  double lb = -kInf;
  for (Index t = 0; t < n; ++t) {
    const double yg = yv[t] * g[t];
    if (a[t] >= cost) {
      if (yv[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (yv[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  double rho = 0.0;
  if (free_count > 0) {
    rho = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else if (std::isfinite(ub)) {
    rho = ub;
  } else if (std::isfinite(lb)) {
    rho = lb;
  }

  DualSolution out;
  out.bias = -rho;
  out.diagnostics.iterations = iter;
  out.diagnostics.kkt_violation = violation;
  out.diagnostics.objective = alpha.sum() - 0.5 * alpha.dot(grad + Eigen::VectorXd::Ones(n));
  out.alpha = std::move(alpha);
  return out;
}

double dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ay = alpha.cwiseProduct(y);
  return alpha.sum() - 0.5 * ay.dot(kernel * ay);
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw ParameterError("squared_distances: dimension mismatch");
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * (a * b.transpose());
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  return kernel_from_distances(squared_distances(a, b), gamma);
}

Eigen::VectorXd targets_of(std::span<const VolumeClass> labels) {
  Eigen::VectorXd y(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<Index>(i)] = sign_of(labels[i]);
  return y;
}

RbfSvmModel train_svm(const Eigen::MatrixXd& features, std::span<const VolumeClass> labels, double cost,
                      double gamma, const SolverOptions& options) {
  const Index n = features.rows();
  if (static_cast<Index>(labels.size()) != n) throw ParameterError("train_svm: feature/label count mismatch");
  if (n < 2) throw ParameterError("train_svm: needs at least 2 samples");
  if (!(cost > 0.0)) throw ParameterError("train_svm: cost must be > 0");
  if (!(gamma > 0.0)) throw ParameterError("train_svm: gamma must be > 0");
  const Eigen::VectorXd y = targets_of(labels);
  if ((y.array() > 0).all() || (y.array() < 0).all()) {
    throw ParameterError("train_svm: both HLV and LLV samples are required");
  }

  Eigen::MatrixXd kernel = rbf_kernel(features, features, gamma);
  kernel.diagonal().setOnes();
  const DualSolution sol = solve_dual(kernel, y, cost, options);

  RbfSvmModel model;
  model.gamma = gamma;
  model.cost = cost;
  model.bias = sol.bias;
  model.diagnostics = sol.diagnostics;
  std::vector<Index> support;
  for (Index t = 0; t < n; ++t) {
    if (sol.alpha[t] > 0.0) support.push_back(t);
  }
  model.support_samples.resize(static_cast<Index>(support.size()), features.cols());
  model.dual_coefficients.resize(static_cast<Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    const auto row = static_cast<Index>(s);
    model.support_samples.row(row) = features.row(support[s]);
    model.dual_coefficients[row] = sol.alpha[support[s]] * y[support[s]];
  }
  return model;
}

RbfSvmModel train_svm(std::span<const FeatureVector> features, std::span<const VolumeClass> labels, double cost,
                      double gamma, const SolverOptions& options) {
  if (features.empty()) throw ParameterError("train_svm: no samples");
  const Index dim = features.front().values.size();
  Eigen::MatrixXd x(static_cast<Index>(features.size()), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].values.size() != dim) throw ParameterError("train_svm: feature vectors differ in length");
    if (features[i].partition_id != features.front().partition_id) {
      throw ParameterError("train_svm: feature vectors come from different partitions");
    }
    x.row(static_cast<Index>(i)) = features[i].values.transpose();
  }
  return train_svm(x, labels, cost, gamma, options);
}

Prediction predict(const RbfSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature) {
  if (feature.size() != model.dimension()) {
    throw ParameterError("predict: feature length " + std::to_string(feature.size()) + " does not match model dimension " +
                         std::to_string(model.dimension()));
  }
  const Eigen::VectorXd d2 = (model.support_samples.rowwise() - feature.transpose()).rowwise().squaredNorm();
  const double decision = model.dual_coefficients.dot(kernel_from_distances(d2, model.gamma)) + model.bias;
  return {decision >= 0.0 ? VolumeClass::HLV : VolumeClass::LLV, decision};
}

Prediction predict(const RbfSvmModel& model, const FeatureVector& feature) { return predict(model, feature.values); }

}  // namespace scgbin
