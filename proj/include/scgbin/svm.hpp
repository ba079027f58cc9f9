#pragma once

// Soft-margin RBF support vector machine trained on the dual
//
//   max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//   s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
//
// with K(x, x') = exp(-gamma |x - x'|^2), by sequential pairwise updates.

#include "scgbin/binning.hpp"
#include "scgbin/types.hpp"

#include <Eigen/Core>

#include <span>

namespace scgbin {

struct SolverOptions {
  /// Stop when the maximal KKT violation m(a) - M(a) drops below this.
  double tolerance = 1e-3;
  long max_iterations = 1'000'000;
  /// Temporarily drop bounded variables that cannot move from the working set.
  bool shrinking = true;
};

struct SolverDiagnostics {
  long iterations = 0;
  double kkt_violation = 0.0;
  double objective = 0.0;  ///< dual objective (maximization form)
};

struct DualSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  SolverDiagnostics diagnostics;
};

/// Solves the dual for a precomputed symmetric kernel matrix and targets +-1.
/// The first index of each working pair is the maximal violator; the second
/// maximizes the second-order gain among violating partners. Throws
/// ConvergenceError after `max_iterations` pair updates. A feasible
/// `initial_alpha` (e.g. the solution for a smaller cost) warm-starts the
/// iteration.
DualSolution solve_dual(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, double cost,
                        const SolverOptions& options = {}, const Eigen::VectorXd* initial_alpha = nullptr);

double dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha);

/// |a_i - b_j|^2 for rows of a and b, clamped at zero.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// exp(-gamma d) elementwise; entries below exp(-700) are exactly 0 so no
/// denormals reach the solver.
template <typename Derived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime> kernel_from_distances(
    const Eigen::MatrixBase<Derived>& d2, double gamma) {
  constexpr double kUnderflow = -700.0;
  const auto arg = (-gamma * d2.derived().array()).eval();
  return (arg < kUnderflow).select(0.0, arg.exp()).matrix();
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

struct RbfSvmModel {
  Eigen::MatrixXd support_samples;    ///< one per row
  Eigen::VectorXd dual_coefficients;  ///< a_i y_i, all nonzero
  double bias = 0.0;
  double gamma = 0.0;
  double cost = 0.0;
  SolverDiagnostics diagnostics;

  Index dimension() const { return support_samples.cols(); }
};

/// Targets as +1 (HLV) / -1 (LLV).
Eigen::VectorXd targets_of(std::span<const VolumeClass> labels);

RbfSvmModel train_svm(const Eigen::MatrixXd& features, std::span<const VolumeClass> labels, double cost,
                      double gamma, const SolverOptions& options = {});

/// Stacks feature vectors (all from the same partition) and trains.
RbfSvmModel train_svm(std::span<const FeatureVector> features, std::span<const VolumeClass> labels, double cost,
                      double gamma, const SolverOptions& options = {});

struct Prediction {
  VolumeClass label;
  double decision;
};

/// decision = sum_i coef_i K(s_i, x) + bias; HLV when decision >= 0.
Prediction predict(const RbfSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature);
Prediction predict(const RbfSvmModel& model, const FeatureVector& feature);

}  // namespace scgbin
