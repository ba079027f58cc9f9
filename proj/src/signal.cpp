#include "scgbin/signal.hpp"

#include <algorithm>
#include <numbers>

namespace scgbin {

SampledSignal::SampledSignal(Eigen::VectorXd samples, double rate_hz, std::string unit)
    : samples_(std::move(samples)), rate_hz_(rate_hz), unit_(std::move(unit)) {
  if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
    throw ParameterError("SampledSignal: rate_hz must be finite and > 0");
  }
  if (samples_.size() < 1) throw ParameterError("SampledSignal: needs at least one sample");
  if (!samples_.allFinite()) throw ParameterError("SampledSignal: non-finite sample");
}

std::complex<double> Biquad::response(double omega) const {
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  if (order < 2 || order % 2 != 0) throw ParameterError("butterworth_lowpass: order must be even");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
    throw ParameterError("lowpass_filter: cutoff_hz must lie in (0, rate_hz/2)");
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double k2 = k * k;
  std::vector<Biquad> sections;
  for (int m = 0; m < order / 2; ++m) {
    // Pole pair of the analog prototype at angle theta from the negative real axis.
    const double theta = std::numbers::pi * (2.0 * m + 1.0) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::cos(theta));
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad s{};
    s.b0 = k2 * norm;
    s.b1 = 2.0 * s.b0;
    s.b2 = s.b0;
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - k / q + k2) * norm;
    sections.push_back(s);
  }
  return sections;
}

std::complex<double> cascade_response(std::span<const Biquad> sections, double freq_hz,
                                      double rate_hz) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / rate_hz;
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= s.response(omega);
  return h;
}

Index impulse_length_estimate(std::span<const Biquad> sections) {
  double r_max = 0.0;
  for (const auto& s : sections) {
    // Roots of z^2 + a1 z + a2.
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2));
    const double r1 = std::abs((-s.a1 + disc) / 2.0);
    const double r2 = std::abs((-s.a1 - disc) / 2.0);
    r_max = std::max({r_max, r1, r2});
  }
  if (r_max <= 0.0) return 1;
  if (r_max >= 1.0) throw ParameterError("filter is not stable");
  return static_cast<Index>(std::ceil(std::log(1e-3) / std::log(r_max)));
}

namespace {

// Steady-state DF2T state for a unit step entering `s`; returns the section's DC gain.
double steady_state(const Biquad& s, double& z1, double& z2) {
  const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  z2 = s.b2 - s.a2 * gain;
  z1 = s.b1 - s.a1 * gain + z2;
  return gain;
}

void run_cascade(std::span<const Biquad> sections, Eigen::VectorXd& x) {
  double level = x.size() > 0 ? x[0] : 0.0;
  for (const auto& s : sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    const double gain = steady_state(s, z1, z2);
    z1 *= level;
    z2 *= level;
    for (Index i = 0; i < x.size(); ++i) {
      const double in = x[i];
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      x[i] = out;
    }
    level *= gain;
  }
}

}  // namespace

Eigen::VectorXd filtfilt(std::span<const Biquad> sections, const Eigen::VectorXd& x) {
  const Index n = x.size();
  const Index order = 2 * static_cast<Index>(sections.size());
  if (n < 4 * order) throw ParameterError("lowpass_filter: signal shorter than 4x filter order");
  const Index pad = std::min<Index>(3 * impulse_length_estimate(sections), n - 1);

  Eigen::VectorXd ext(n + 2 * pad);
  for (Index i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  ext.segment(pad, n) = x;
  for (Index i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  run_cascade(sections, ext);
  ext.reverseInPlace();
  run_cascade(sections, ext);
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

SampledSignal lowpass_filter(const SampledSignal& signal, double cutoff_hz) {
  const auto sections = butterworth_lowpass(kLowpassOrder, cutoff_hz, signal.rate_hz());
  return SampledSignal(filtfilt(sections, signal.samples()), signal.rate_hz(), signal.unit());
}

SampledSignal integrate_flow(const SampledSignal& flow) {
  const Eigen::VectorXd& f = flow.samples();
  const double half_dt = 0.5 / flow.rate_hz();
  Eigen::VectorXd v(f.size());
  v[0] = 0.0;
  for (Index i = 1; i < f.size(); ++i) v[i] = v[i - 1] + half_dt * (f[i - 1] + f[i]);

  std::string unit = flow.unit();
  if (unit.size() >= 2 && unit.ends_with("/s")) {
    unit.resize(unit.size() - 2);
  } else if (!unit.empty()) {
    unit += "*s";
  }
  return SampledSignal(std::move(v), flow.rate_hz(), std::move(unit));
}

Eigen::VectorXd ensemble_average(std::span<const Eigen::VectorXd> events) {
  return ensemble_average(stack_events(events));
}

EventMatrix stack_events(std::span<const Eigen::VectorXd> events) {
  if (events.empty()) throw ParameterError("ensemble_average: no events");
  const Index len = events.front().size();
  EventMatrix m(static_cast<Index>(events.size()), len);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].size() != len) throw ParameterError("ensemble_average: ragged event lengths");
    m.row(static_cast<Index>(i)) = events[i].transpose();
  }
  return m;
}

}  // namespace scgbin
