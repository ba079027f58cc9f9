#pragma once

// Oracles and generators shared by the unit tests and the acceptance suite.
// The oracles are deliberately naive: direct recursion, dense projected
// gradient, brute-force sweeps.

#include "scgbin/binning.hpp"
#include "scgbin/rng.hpp"
#include "scgbin/signal.hpp"
#include "scgbin/svm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace scgbin::testing {

inline double pop_std_naive(const Eigen::VectorXd& y, Index lo, Index hi) {
  const auto n = static_cast<double>(hi - lo);
  double mean = 0.0;
  for (Index i = lo; i < hi; ++i) mean += y[i];
  mean /= n;
  double ss = 0.0;
  for (Index i = lo; i < hi; ++i) ss += (y[i] - mean) * (y[i] - mean);
  return std::sqrt(ss / n);
}

namespace detail {
inline void split_recursive(const Eigen::VectorXd& y, Index lo, Index hi, double t, std::vector<Index>& out) {
  const Index w = hi - lo;
  if (w > 1 && population_std(y.segment(lo, w)) > t) {
    const Index mid = lo + (w + 1) / 2;
    split_recursive(y, lo, mid, t, out);
    split_recursive(y, mid, hi, t, out);
  } else {
    out.push_back(hi);
  }
}
}  // namespace detail

/// Textbook recursion of the bisection rule: split [lo, hi) at
/// lo + ceil(w / 2) while its population std exceeds T.
inline std::vector<Index> oracle_partition(const Eigen::VectorXd& y, double alpha) {
  const double t = alpha * (y.maxCoeff() - y.minCoeff());
  std::vector<Index> out{0};
  detail::split_recursive(y, 0, y.size(), t, out);
  return out;
}

/// Noise, steps, ramps and a decaying oscillation mixed with seeded weights.
/// Some events are quantized so exact ties between samples occur.
inline Eigen::VectorXd random_event(Rng& rng, Index length) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(length);
  const int parts = 1 + static_cast<int>(rng.below(4));
  for (int p = 0; p < parts; ++p) {
    const double w = rng.uniform(-3.0, 3.0);
    switch (rng.below(4)) {
      case 0:
        for (Index i = 0; i < length; ++i) y[i] += w * rng.normal();
        break;
      case 1: {
        const auto at = static_cast<Index>(rng.below(static_cast<std::uint64_t>(length)));
        y.tail(length - at).array() += w;
        break;
      }
      case 2: {
        const auto a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(length)));
        const auto b = a + static_cast<Index>(rng.below(static_cast<std::uint64_t>(length - a))) + 1;
        for (Index i = a; i < b; ++i) y[i] += w * static_cast<double>(i - a) / static_cast<double>(b - a);
        break;
      }
      default: {
        const double f = rng.uniform(1.0, 20.0);
        const double tau = rng.uniform(0.05, 0.5) * static_cast<double>(length);
        for (Index i = 0; i < length; ++i) {
          const double t = static_cast<double>(i);
          y[i] += w * std::exp(-t / tau) * std::sin(2.0 * std::numbers::pi * f * t / static_cast<double>(length));
        }
      }
    }
  }
  if (rng.below(4) == 0) y = (y * 4.0).array().round() / 4.0;
  return y;
}

/// Maximizes the SVM dual by accelerated projected gradient on the dense
/// matrix Q = (y y^T) .* K. The projection onto {0 <= a <= C, y^T a = 0} is
/// a clip after a shift along y, the shift found by bisection.
inline Eigen::VectorXd project_dual(const Eigen::VectorXd& v, const Eigen::VectorXd& y, double c) {
  auto clipped = [&](double lambda) { return (v - lambda * y).cwiseMax(0.0).cwiseMin(c).eval(); };
  // y^T clip(v - lambda y) is non-increasing in lambda.
  double lo = -1.0;
  double hi = 1.0;
  while (y.dot(clipped(lo)) < 0.0) lo *= 2.0;
  while (y.dot(clipped(hi)) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (y.dot(clipped(mid)) > 0.0) lo = mid;
    else hi = mid;
  }
  return clipped(0.5 * (lo + hi));
}

inline Eigen::VectorXd qp_oracle(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, double c,
                                 int iterations = 200000) {
  const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(kernel);
  const double lipschitz = std::max(1e-12, q.operatorNorm());
  const double step = 1.0 / lipschitz;
  const Index n = y.size();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = a;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(n) - q * z;
    const Eigen::VectorXd next = project_dual(z + step * grad, y, c);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - a);
    a = next;
    t = t_next;
  }
  return a;
}

struct KktAudit {
  double worst = 0.0;  ///< largest violation of the three margin conditions
  bool ok(double tau) const { return worst <= tau; }
};

/// Checks, for every training sample with f = sum_j a_j y_j K_ij + b:
/// a = 0 -> y f >= 1 - tau; 0 < a < C -> |y f - 1| <= tau; a = C -> y f <= 1 + tau.
inline KktAudit kkt_audit(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                          double bias, double c) {
  const Eigen::VectorXd f = kernel * alpha.cwiseProduct(y) + Eigen::VectorXd::Constant(y.size(), bias);
  KktAudit audit;
  for (Index i = 0; i < y.size(); ++i) {
    const double m = y[i] * f[i];
    double v = 0.0;
    if (alpha[i] <= 0.0) v = std::max(0.0, 1.0 - m);
    else if (alpha[i] >= c) v = std::max(0.0, m - 1.0);
    else v = std::abs(m - 1.0);
    audit.worst = std::max(audit.worst, v);
  }
  return audit;
}

/// Recovers per-sample alphas from a trained model whose support rows are the
/// training rows in order.
inline Eigen::VectorXd alphas_of(const RbfSvmModel& model, const Eigen::MatrixXd& x) {
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(x.rows());
  Index s = 0;
  for (Index i = 0; i < x.rows() && s < model.support_samples.rows(); ++i) {
    if (model.support_samples.row(s) == x.row(i)) alpha[i] = std::abs(model.dual_coefficients[s++]);
  }
  return alpha;
}

/// Steady-state amplitude of a sinusoid of known frequency by least squares
/// over the interior of the signal.
inline double sine_amplitude(const Eigen::VectorXd& x, double freq_hz, double rate_hz, Index skip) {
  const Index n = x.size() - 2 * skip;
  Eigen::MatrixXd basis(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + skip) / rate_hz;
    basis(i, 0) = std::sin(2.0 * std::numbers::pi * freq_hz * t);
    basis(i, 1) = std::cos(2.0 * std::numbers::pi * freq_hz * t);
  }
  const Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(x.segment(skip, n));
  return coef.norm();
}

/// Fresh empty directory under the system temp dir, unique per test name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("scgbin_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace scgbin::testing
