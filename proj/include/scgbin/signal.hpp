#pragma once

#include "scgbin/error.hpp"
#include "scgbin/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace scgbin {

/// A uniformly sampled, finite, non-empty waveform with its rate and unit.
class SampledSignal {
 public:
  SampledSignal(Eigen::VectorXd samples, double rate_hz, std::string unit = {});

  const Eigen::VectorXd& samples() const { return samples_; }
  double rate_hz() const { return rate_hz_; }
  const std::string& unit() const { return unit_; }
  Index size() const { return samples_.size(); }
  double operator[](Index i) const { return samples_[i]; }

 private:
  Eigen::VectorXd samples_;
  double rate_hz_;
  std::string unit_;
};

/// One second-order section, transposed direct form II, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;

  std::complex<double> response(double omega) const;
};

/// Cascade of biquads for an even-order Butterworth lowpass. Each section is
/// designed with the bilinear transform and a prewarped cutoff, so the
/// single-pass magnitude is exactly -3 dB at `cutoff_hz`.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz);

/// Complex frequency response of a single forward pass of the cascade.
std::complex<double> cascade_response(std::span<const Biquad> sections, double freq_hz,
                                      double rate_hz);

/// Samples until the slowest pole decays by 1e-3.
Index impulse_length_estimate(std::span<const Biquad> sections);

/// Zero-phase filtering: odd-reflection padding, forward pass, backward pass,
/// trim. Each pass starts from the steady state for its first padded sample.
Eigen::VectorXd filtfilt(std::span<const Biquad> sections, const Eigen::VectorXd& x);

constexpr int kLowpassOrder = 4;

/// 4th-order Butterworth lowpass applied forward and backward.
SampledSignal lowpass_filter(const SampledSignal& signal, double cutoff_hz);

/// Cumulative trapezoidal integral; output[0] = 0. A unit of the form "X/s"
/// becomes "X".
SampledSignal integrate_flow(const SampledSignal& flow);

/// Population standard deviation (divide by N). Deviations are taken relative
/// to the first sample before averaging, which makes the result exactly zero
/// for constant input.
template <typename Derived>
double population_std(const Eigen::DenseBase<Derived>& x) {
  const Index n = x.size();
  if (n == 0) throw ParameterError("population_std: empty input");
  const auto& v = x.derived();
  const double ref = v.coeff(0);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) sum += v.coeff(i) - ref;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = (v.coeff(i) - ref) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n));
}

/// Element-wise mean over the rows of `events`.
template <typename Derived>
Eigen::VectorXd ensemble_average(const Eigen::MatrixBase<Derived>& events) {
  if (events.rows() == 0 || events.cols() == 0) {
    throw ParameterError("ensemble_average: no events");
  }
  return events.colwise().mean().transpose();
}

/// Element-wise mean over equal-length sequences.
Eigen::VectorXd ensemble_average(std::span<const Eigen::VectorXd> events);

/// Stacks equal-length sequences into an EventMatrix, one per row.
EventMatrix stack_events(std::span<const Eigen::VectorXd> events);

}  // namespace scgbin
