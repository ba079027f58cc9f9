#include "support.hpp"

#include "scgbin/error.hpp"
#include "scgbin/rng.hpp"
#include "scgbin/svm.hpp"

#include <doctest.h>

#include <algorithm>
#include <vector>

using namespace scgbin;
using scgbin::testing::kkt_audit;
using scgbin::testing::qp_oracle;

namespace {

struct Dataset {
  Eigen::MatrixXd x;
  std::vector<VolumeClass> labels;
};

// 2..8 points in 1..3 dimensions, both classes present.
Dataset random_dataset(Rng& rng) {
  const Index n = 2 + static_cast<Index>(rng.below(7));
  const Index d = 1 + static_cast<Index>(rng.below(3));
  Dataset ds;
  ds.x.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) ds.x(i, j) = rng.normal();
  ds.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : ds.labels) l = rng.uniform() < 0.5 ? VolumeClass::HLV : VolumeClass::LLV;
  ds.labels[0] = VolumeClass::HLV;
  ds.labels[1] = VolumeClass::LLV;
  return ds;
}

}  // namespace

TEST_CASE("solve_dual matches the projected-gradient oracle on small problems") {
  Rng rng(20240601);
  const std::vector<double> costs{0.1, 1.0, 10.0};
  double worst_gap = 0.0;
  double worst_kkt = 0.0;
  double worst_balance = 0.0;
  SolverOptions tight_options;
  tight_options.tolerance = 1e-9;
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset ds = random_dataset(rng);
    const double gamma = std::pow(2.0, rng.uniform(-3.0, 2.0));
    const double c = costs[static_cast<std::size_t>(trial) % costs.size()];
    const Eigen::MatrixXd k = rbf_kernel(ds.x, ds.x, gamma);
    const Eigen::VectorXd y = targets_of(ds.labels);

    // The default stopping rule (max violation 1e-3) leaves up to ~1e-5 on
    // the objective, so optimality is compared on a tight solve and the
    // margin conditions on the default one.
    const DualSolution sol = solve_dual(k, y, c);
    const DualSolution tight = solve_dual(k, y, c, tight_options);
    const Eigen::VectorXd reference = qp_oracle(k, y, c, 20000);
    const double gap = dual_objective(k, y, reference) - dual_objective(k, y, tight.alpha);
    worst_gap = std::max(worst_gap, std::abs(gap));
    worst_kkt = std::max(worst_kkt, kkt_audit(k, y, sol.alpha, sol.bias, c).worst);
    worst_balance = std::max({worst_balance, std::abs(sol.alpha.dot(y)), std::abs(tight.alpha.dot(y))});
    CHECK(sol.alpha.minCoeff() >= 0.0);
    CHECK(sol.alpha.maxCoeff() <= c);
  }
  CHECK(worst_gap <= 1e-6);
  CHECK(worst_kkt <= 1e-3);
  CHECK(worst_balance <= 1e-6);
}

TEST_CASE("solve_dual: warm start reaches the same optimum") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const Dataset ds = random_dataset(rng);
    const Eigen::MatrixXd k = rbf_kernel(ds.x, ds.x, 0.5);
    const Eigen::VectorXd y = targets_of(ds.labels);
    const DualSolution small = solve_dual(k, y, 0.5);
    const DualSolution warm = solve_dual(k, y, 4.0, {}, &small.alpha);
    const DualSolution cold = solve_dual(k, y, 4.0);
    CHECK(dual_objective(k, y, warm.alpha) == doctest::Approx(dual_objective(k, y, cold.alpha)).epsilon(1e-6));
    CHECK(kkt_audit(k, y, warm.alpha, warm.bias, 4.0).ok(1e-3));
  }
}

TEST_CASE("solve_dual: shrinking does not change the answer") {
  Rng rng(5);
  Eigen::MatrixXd x(60, 2);
  std::vector<VolumeClass> labels(60);
  for (Index i = 0; i < 60; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    labels[static_cast<std::size_t>(i)] = x(i, 0) * x(i, 1) + 0.3 * rng.normal() > 0 ? VolumeClass::HLV : VolumeClass::LLV;
  }
  const Eigen::MatrixXd k = rbf_kernel(x, x, 1.0);
  const Eigen::VectorXd y = targets_of(labels);
  SolverOptions plain;
  plain.shrinking = false;
  const DualSolution a = solve_dual(k, y, 8.0);
  const DualSolution b = solve_dual(k, y, 8.0, plain);
  CHECK(dual_objective(k, y, a.alpha) == doctest::Approx(dual_objective(k, y, b.alpha)).epsilon(1e-5));
  CHECK(kkt_audit(k, y, a.alpha, a.bias, 8.0).ok(1e-3));
  CHECK(a.diagnostics.kkt_violation <= 1e-3);
}

TEST_CASE("solve_dual: iteration cap raises ConvergenceError") {
  Rng rng(9);
  Eigen::MatrixXd x(40, 2);
  std::vector<VolumeClass> labels(40);
  for (Index i = 0; i < 40; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    labels[static_cast<std::size_t>(i)] = rng.uniform() < 0.5 ? VolumeClass::HLV : VolumeClass::LLV;
  }
  SolverOptions opts;
  opts.max_iterations = 1;
  CHECK_THROWS_AS(train_svm(x, labels, 100.0, 1.0, opts), ConvergenceError);
}

TEST_CASE("train_svm: XOR is separable with an RBF kernel") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<VolumeClass> labels{VolumeClass::HLV, VolumeClass::HLV, VolumeClass::LLV, VolumeClass::LLV};
  const RbfSvmModel model = train_svm(x, labels, 10.0, 1.0);
  for (Index i = 0; i < 4; ++i) CHECK(predict(model, Eigen::VectorXd(x.row(i).transpose())).label == labels[static_cast<std::size_t>(i)]);
  CHECK(model.dual_coefficients.size() == 4);
  CHECK(model.dual_coefficients.cwiseAbs().maxCoeff() <= 10.0);
  CHECK(std::abs(model.dual_coefficients.sum()) <= 1e-6);
}

TEST_CASE("train_svm: symmetric pair has zero bias and margin-one decisions") {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 1.0;
  const std::vector<VolumeClass> labels{VolumeClass::LLV, VolumeClass::HLV};
  const RbfSvmModel model = train_svm(x, labels, 100.0, 0.5);
  CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  // Both points are free support vectors at C = 100.
  CHECK(predict(model, Eigen::VectorXd::Constant(1, 1.0)).decision == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(predict(model, Eigen::VectorXd::Constant(1, -1.0)).decision == doctest::Approx(-1.0).epsilon(1e-3));
  // Far away the kernel vanishes and only the bias is left.
  CHECK(predict(model, Eigen::VectorXd::Constant(1, 1e3)).decision == doctest::Approx(model.bias));
  CHECK(predict(model, Eigen::VectorXd::Constant(1, 0.0)).label == VolumeClass::HLV);
}

TEST_CASE("predict: sign of the decision is invariant to a positive rescale") {
  Rng rng(31);
  Eigen::MatrixXd x(30, 3);
  std::vector<VolumeClass> labels(30);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = rng.normal();
    labels[static_cast<std::size_t>(i)] = x(i, 0) > 0 ? VolumeClass::HLV : VolumeClass::LLV;
  }
  const RbfSvmModel model = train_svm(x, labels, 2.0, 0.3);
  RbfSvmModel scaled = model;
  scaled.dual_coefficients *= 3.5;
  scaled.bias *= 3.5;
  for (int q = 0; q < 100; ++q) {
    Eigen::VectorXd v(3);
    for (Index j = 0; j < 3; ++j) v[j] = rng.normal();
    const Prediction a = predict(model, v);
    const Prediction b = predict(scaled, v);
    CHECK(a.label == b.label);
    CHECK(b.decision == doctest::Approx(3.5 * a.decision));
  }
}

TEST_CASE("train_svm: argument errors") {
  Eigen::MatrixXd x(3, 2);
  x.setRandom();
  const std::vector<VolumeClass> one_class(3, VolumeClass::HLV);
  CHECK_THROWS_AS(train_svm(x, one_class, 1.0, 1.0), ParameterError);
  const std::vector<VolumeClass> short_labels{VolumeClass::HLV, VolumeClass::LLV};
  CHECK_THROWS_AS(train_svm(x, short_labels, 1.0, 1.0), ParameterError);
  const std::vector<VolumeClass> labels{VolumeClass::HLV, VolumeClass::LLV, VolumeClass::HLV};
  CHECK_THROWS_AS(train_svm(x, labels, 0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(train_svm(x, labels, 1.0, -1.0), ParameterError);
  const RbfSvmModel model = train_svm(x, labels, 1.0, 1.0);
  CHECK_THROWS_AS(predict(model, Eigen::VectorXd::Zero(3)), ParameterError);
}

TEST_CASE("kernel_from_distances: underflow is flushed to exact zero") {
  Eigen::MatrixXd d2(1, 3);
  d2 << 0.0, 1.0, 800.0;
  const Eigen::MatrixXd k = kernel_from_distances(d2, 1.0);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK(k(0, 2) == 0.0);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(5, 3);
  const Eigen::MatrixXd d = squared_distances(a, a);
  CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(d.minCoeff() >= 0.0);
}
