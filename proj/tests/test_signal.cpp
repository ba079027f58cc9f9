#include "support.hpp"

#include "scgbin/signal.hpp"
#include "scgbin/signal_io.hpp"
#include "scgbin/text_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

using namespace scgbin;
using scgbin::testing::sine_amplitude;

namespace {

constexpr double kRate = 10000.0;

Eigen::VectorXd sine(double freq_hz, double rate_hz, Index n, double phase = 0.0) {
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate_hz + phase);
  return x;
}

double db(double gain) { return 20.0 * std::log10(gain); }

}  // namespace

TEST_CASE("SampledSignal rejects invalid construction") {
  CHECK_THROWS_AS(SampledSignal(Eigen::VectorXd::Zero(3), 0.0), ParameterError);
  CHECK_THROWS_AS(SampledSignal(Eigen::VectorXd::Zero(3), -1.0), ParameterError);
  CHECK_THROWS_AS(SampledSignal(Eigen::VectorXd(), 100.0), ParameterError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(SampledSignal(bad, 100.0), ParameterError);
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SampledSignal(bad, 100.0), ParameterError);
}

TEST_CASE("Butterworth prototype: analytic response") {
  const auto sections = butterworth_lowpass(kLowpassOrder, 100.0, kRate);
  REQUIRE(sections.size() == 2);
  CHECK(std::abs(cascade_response(sections, 0.0, kRate)) == doctest::Approx(1.0).epsilon(1e-12));
  // Single pass is -3 dB (|H| = 1/sqrt 2) at the cutoff.
  CHECK(std::abs(cascade_response(sections, 100.0, kRate)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  // Monotone magnitude from DC to Nyquist.
  double prev = 2.0;
  for (double f = 0.0; f < kRate / 2.0; f += 25.0) {
    const double g = std::abs(cascade_response(sections, f, kRate));
    CHECK(g <= prev + 1e-12);
    prev = g;
  }
  // Forward-backward magnitude is |H|^2: at 300 Hz that is below -40 dB.
  const double g300 = std::abs(cascade_response(sections, 300.0, kRate));
  CHECK(db(g300 * g300) <= -40.0);
}

TEST_CASE("lowpass_filter: constant input passes unchanged") {
  const SampledSignal c(Eigen::VectorXd::Constant(2000, 5.0), kRate, "g");
  const SampledSignal y = lowpass_filter(c, 100.0);
  CHECK(y.size() == c.size());
  CHECK(y.rate_hz() == kRate);
  CHECK(y.unit() == "g");
  CHECK((y.samples().array() - 5.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("lowpass_filter: 300 Hz is attenuated by the analytic two-pass gain") {
  const auto sections = butterworth_lowpass(kLowpassOrder, 100.0, kRate);
  const double g = std::abs(cascade_response(sections, 300.0, kRate));
  const double analytic = g * g;
  const SampledSignal x(sine(300.0, kRate, 40000), kRate);
  const double measured = sine_amplitude(lowpass_filter(x, 100.0).samples(), 300.0, kRate, 5000);
  CHECK(measured == doctest::Approx(analytic).epsilon(1e-3));
  CHECK(db(measured) <= -40.0);
}

TEST_CASE("lowpass_filter: 10 Hz passes with unit gain and zero phase") {
  const Eigen::VectorXd x = sine(10.0, kRate, 40000, 0.3);
  const Eigen::VectorXd y = lowpass_filter(SampledSignal(x, kRate), 100.0).samples();
  const double amp = sine_amplitude(y, 10.0, kRate, 5000);
  CHECK(std::abs(amp - 1.0) <= 0.01);
  // Phase: project onto the input's own quadrature pair.
  const Index skip = 5000;
  const Index n = x.size() - 2 * skip;
  double in_phase = 0.0, quad = 0.0;
  for (Index i = skip; i < skip + n; ++i) {
    const double t = 2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / kRate + 0.3;
    in_phase += y[i] * std::sin(t);
    quad += y[i] * std::cos(t);
  }
  const double phase_deg = std::atan2(quad, in_phase) * 180.0 / std::numbers::pi;
  CHECK(std::abs(phase_deg) <= 1.0);
}

TEST_CASE("lowpass_filter is linear") {
  Rng rng(11);
  Eigen::VectorXd a(3000), b(3000);
  for (Index i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const double p = 2.5, q = -0.75;
  const Eigen::VectorXd lhs = lowpass_filter(SampledSignal(p * a + q * b, kRate), 200.0).samples();
  const Eigen::VectorXd rhs = p * lowpass_filter(SampledSignal(a, kRate), 200.0).samples() +
                              q * lowpass_filter(SampledSignal(b, kRate), 200.0).samples();
  CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());
}

TEST_CASE("lowpass_filter rejects bad cutoffs and short signals") {
  const SampledSignal x(Eigen::VectorXd::Zero(100), kRate);
  CHECK_THROWS_AS(lowpass_filter(x, 0.0), ParameterError);
  CHECK_THROWS_AS(lowpass_filter(x, kRate / 2.0), ParameterError);
  CHECK_THROWS_AS(lowpass_filter(x, -5.0), ParameterError);
  CHECK_THROWS_AS(lowpass_filter(SampledSignal(Eigen::VectorXd::Zero(4 * kLowpassOrder - 1), kRate), 100.0),
                  ParameterError);
  CHECK_NOTHROW(lowpass_filter(SampledSignal(Eigen::VectorXd::Zero(4 * kLowpassOrder), kRate), 100.0));
}

TEST_CASE("integrate_flow: closed forms") {
  SUBCASE("zero flow") {
    const SampledSignal v = integrate_flow(SampledSignal(Eigen::VectorXd::Zero(50), 100.0, "L/s"));
    CHECK(v.samples().isZero(0.0));
    CHECK(v.unit() == "L");
  }
  SUBCASE("constant flow is a ramp") {
    const double c = 1.7, r = 250.0;
    const SampledSignal v = integrate_flow(SampledSignal(Eigen::VectorXd::Constant(1000, c), r));
    CHECK(v[0] == 0.0);
    for (Index n = 0; n < v.size(); ++n) CHECK(v[n] == doctest::Approx(c * static_cast<double>(n) / r).epsilon(1e-12));
  }
  SUBCASE("sine flow matches its antiderivative") {
    const double f = 0.2;
    const Index n = static_cast<Index>(30.0 * kRate);
    const SampledSignal v = integrate_flow(SampledSignal(sine(f, kRate, n), kRate));
    const double w = 2.0 * std::numbers::pi * f;
    double worst = 0.0;
    const double peak = 2.0 / w;
    for (Index i = 0; i < n; ++i) {
      const double exact = (1.0 - std::cos(w * static_cast<double>(i) / kRate)) / w;
      worst = std::max(worst, std::abs(v[i] - exact));
    }
    CHECK(worst / peak <= 1e-3);
  }
}

TEST_CASE("integrate_flow then first difference recovers interior flow") {
  auto flow_at = [](double t) { return 1.0 + 0.5 * std::sin(2.0 * t) + 0.25 * std::cos(0.7 * t); };
  const double rate = 1000.0;
  const Index n = 5000;
  Eigen::VectorXd flow(n);
  for (Index i = 0; i < n; ++i) flow[i] = flow_at(static_cast<double>(i) / rate);
  const SampledSignal v = integrate_flow(SampledSignal(flow, rate));
  for (Index i = 1; i + 1 < n; ++i) {
    const double d = (v[i] - v[i - 1]) * rate;
    // Central difference of the trapezoid integral is second order at the
    // half-sample point.
    CHECK(d == doctest::Approx(flow_at((static_cast<double>(i) - 0.5) / rate)).epsilon(1e-6));
  }
}

TEST_CASE("ensemble_average") {
  const std::vector<Eigen::VectorXd> one{Eigen::Vector3d(1, -2, 4)};
  CHECK(ensemble_average(std::span<const Eigen::VectorXd>(one)) == one[0]);

  const Eigen::VectorXd x = Eigen::Vector4d(1.5, -2, 0.25, 9);
  const std::vector<Eigen::VectorXd> pair{x, -x};
  CHECK(ensemble_average(std::span<const Eigen::VectorXd>(pair)).isZero(0.0));

  const std::vector<Eigen::VectorXd> three{Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4), Eigen::Vector2d(5, 6)};
  CHECK(ensemble_average(std::span<const Eigen::VectorXd>(three)) == Eigen::Vector2d(3, 4));
  CHECK(ensemble_average(stack_events(three)) == Eigen::Vector2d(3, 4));

  CHECK_THROWS_AS(ensemble_average(std::span<const Eigen::VectorXd>()), ParameterError);
  const std::vector<Eigen::VectorXd> ragged{Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)};
  CHECK_THROWS_AS(ensemble_average(std::span<const Eigen::VectorXd>(ragged)), ParameterError);
}

TEST_CASE("ensemble_average commutes with permutations") {
  Rng rng(5);
  std::vector<Eigen::VectorXd> events;
  for (int e = 0; e < 9; ++e) events.push_back(Eigen::VectorXd::NullaryExpr(16, [&] { return rng.normal(); }));
  const Eigen::VectorXd base = ensemble_average(std::span<const Eigen::VectorXd>(events));
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(events);
    CHECK((ensemble_average(std::span<const Eigen::VectorXd>(events)) - base).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("population_std") {
  CHECK(population_std(Eigen::Vector4d(3, 3, 3, 3)) == 0.0);
  CHECK(population_std(Eigen::Vector4d(0, 0, 8, 8)) == 4.0);
  CHECK(population_std(Eigen::VectorXd::Constant(1, 7.0)) == 0.0);
  CHECK(population_std(Eigen::VectorXd::Constant(1000, 0.1)) == 0.0);
  CHECK_THROWS_AS(population_std(Eigen::VectorXd()), ParameterError);
}

TEST_CASE("population_std: translation invariance and absolute homogeneity") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(200));
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(n, [&] { return rng.normal(); });
    const double a = rng.uniform(-10.0, 10.0);
    const double b = rng.uniform(-100.0, 100.0);
    const double s = population_std(x);
    CHECK(s == doctest::Approx(scgbin::testing::pop_std_naive(x, 0, n)).epsilon(1e-12));
    const Eigen::VectorXd y = (a * x.array() + b).matrix();
    CHECK(population_std(y) == doctest::Approx(std::abs(a) * s).epsilon(1e-12));
  }
}

TEST_CASE("signal files round-trip") {
  const auto dir = scgbin::testing::scratch_dir("signal_io");
  Eigen::VectorXd x(5);
  x << 0.5, -1.25, 3.0, 0.0, 2.0;
  const SampledSignal s(x, 200.0, "g");

  write_signal(dir / "a.f32", s);
  const SampledSignal f = read_signal(dir / "a.f32");
  CHECK(f.rate_hz() == 200.0);
  CHECK(f.unit() == "g");
  CHECK(f.samples() == x);  // exactly representable in float32

  write_signal(dir / "a.csv", s);
  const SampledSignal c = read_signal(dir / "a.csv");
  CHECK(c.rate_hz() == doctest::Approx(200.0).epsilon(1e-9));
  CHECK(c.samples() == x);

  write_file_atomic(dir / "bad.csv", "time_s,value\n0,1\n0.01,2\n0.05,3\n");
  CHECK_THROWS_AS(read_signal(dir / "bad.csv"), ParameterError);
  CHECK_THROWS_AS(read_signal(dir / "a.wav"), ParameterError);
}
