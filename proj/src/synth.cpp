#include "scgbin/synth.hpp"

#include "scgbin/error.hpp"
#include "scgbin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scgbin {

using nlohmann::json;

std::vector<Atom> SynthConfig::default_atoms() {
  return {
      {12.0, 40.0, 10.0, 1.0, 0.0},
      {25.0, 30.0, 25.0, 0.8, 0.0},
      {40.0, 25.0, 35.0, 0.6, 1.0},
  };
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw ParameterError(std::string("synth config: '") + field + "' " + rule);
  };
  require(rate_hz > 0.0 && std::isfinite(rate_hz), "rate_hz", "must be > 0");
  require(duration_s > 0.0 && std::isfinite(duration_s), "duration_s", "must be > 0");
  require(trials >= 1, "trials", "must be >= 1");
  require(heart_rate_bpm > 0.0, "heart_rate_bpm", "must be > 0");
  require(heart_rate_jitter >= 0.0 && heart_rate_jitter < 0.5, "heart_rate_jitter", "must lie in [0, 0.5)");
  require(resp_rate_bpm > 0.0, "resp_rate_bpm", "must be > 0");
  require(ie_inspiration > 0.0, "ie_ratio", "inspiration component must be > 0");
  require(ie_expiration > 0.0, "ie_ratio", "expiration component must be > 0");
  require(tidal_volume_l > 0.0, "tidal_volume_l", "must be > 0");
  require(!snr_db || std::isfinite(*snr_db), "snr_db", "must be finite or null");
  require(!atoms.empty(), "atoms", "must not be empty");
  for (const auto& a : atoms) {
    require(a.freq_hz > 0.0 && a.freq_hz < rate_hz / 2.0, "atoms.freq_hz", "must lie in (0, rate_hz/2)");
    require(a.decay_ms > 0.0, "atoms.decay_ms", "must be > 0");
    require(a.delay_ms >= 0.0, "atoms.delay_ms", "must be >= 0");
  }
  require(beat_amplitude_jitter >= 0.0, "beat_amplitude_jitter", "must be >= 0");
  require(amplitude_jitter >= 0.0, "amplitude_jitter", "must be >= 0");
  require(atom_delay_jitter_ms >= 0.0, "atom_delay_jitter_ms", "must be >= 0");
  require(window_length >= 1, "window_length", "must be >= 1");
  require(detrend_window_s > 0.0, "detrend_window_s", "must be > 0");
  const double beat_s = 60.0 / heart_rate_bpm;
  require(duration_s / beat_s >= 10.0, "duration_s", "must hold at least 10 beats");
  require(static_cast<double>(window_length) / rate_hz < beat_s * (1.0 - 2.0 * heart_rate_jitter),
          "window_length", "must be shorter than the minimum beat interval");
}

json to_json(const SynthConfig& c) {
  json atoms = json::array();
  for (const auto& a : c.atoms) {
    atoms.push_back({{"freq_hz", a.freq_hz},
                     {"decay_ms", a.decay_ms},
                     {"delay_ms", a.delay_ms},
                     {"amplitude", a.amplitude},
                     {"shift_gain", a.shift_gain}});
  }
  return {{"rate_hz", c.rate_hz},
          {"duration_s", c.duration_s},
          {"trials", c.trials},
          {"heart_rate_bpm", c.heart_rate_bpm},
          {"heart_rate_jitter", c.heart_rate_jitter},
          {"resp_rate_bpm", c.resp_rate_bpm},
          {"ie_ratio", {c.ie_inspiration, c.ie_expiration}},
          {"tidal_volume_l", c.tidal_volume_l},
          {"snr_db", c.snr_db ? json(*c.snr_db) : json(nullptr)},
          {"atoms", atoms},
          {"beat_amplitude_jitter", c.beat_amplitude_jitter},
          {"amplitude_jitter", c.amplitude_jitter},
          {"atom_delay_jitter_ms", c.atom_delay_jitter_ms},
          {"morphology_shift", {{"delay_ms", c.morphology_shift.delay_ms}, {"freq_hz", c.morphology_shift.freq_hz}}},
          {"window_length", c.window_length},
          {"detrend_window_s", c.detrend_window_s},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  if (!j.is_object()) throw ParameterError("synth config: expected a JSON object");
  auto field = [&](const char* name, auto& target) {
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(target);
    } catch (const json::exception&) {
      throw ParameterError(std::string("synth config: '") + name + "' has the wrong type");
    }
  };
  field("rate_hz", c.rate_hz);
  field("duration_s", c.duration_s);
  field("trials", c.trials);
  field("heart_rate_bpm", c.heart_rate_bpm);
  field("heart_rate_jitter", c.heart_rate_jitter);
  field("resp_rate_bpm", c.resp_rate_bpm);
  field("tidal_volume_l", c.tidal_volume_l);
  field("beat_amplitude_jitter", c.beat_amplitude_jitter);
  field("amplitude_jitter", c.amplitude_jitter);
  field("atom_delay_jitter_ms", c.atom_delay_jitter_ms);
  field("window_length", c.window_length);
  field("detrend_window_s", c.detrend_window_s);
  field("seed", c.seed);
  if (j.contains("ie_ratio")) {
    const auto& r = j["ie_ratio"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
      throw ParameterError("synth config: 'ie_ratio' must be [inspiration, expiration]");
    }
    c.ie_inspiration = r[0].get<double>();
    c.ie_expiration = r[1].get<double>();
  }
  if (j.contains("snr_db")) {
    if (j["snr_db"].is_null()) c.snr_db.reset();
    else if (j["snr_db"].is_number()) c.snr_db = j["snr_db"].get<double>();
    else throw ParameterError("synth config: 'snr_db' must be a number or null");
  }
  if (j.contains("morphology_shift")) {
    const auto& m = j["morphology_shift"];
    try {
      c.morphology_shift.delay_ms = m.value("delay_ms", c.morphology_shift.delay_ms);
      c.morphology_shift.freq_hz = m.value("freq_hz", c.morphology_shift.freq_hz);
    } catch (const json::exception&) {
      throw ParameterError("synth config: 'morphology_shift' must be {delay_ms, freq_hz}");
    }
  }
  if (j.contains("atoms")) {
    c.atoms.clear();
    try {
      for (const auto& a : j.at("atoms")) {
        c.atoms.push_back({a.at("freq_hz").get<double>(), a.at("decay_ms").get<double>(),
                           a.at("delay_ms").get<double>(), a.at("amplitude").get<double>(),
                           a.value("shift_gain", 0.0)});
      }
    } catch (const json::exception&) {
      throw ParameterError("synth config: 'atoms' entries need freq_hz, decay_ms, delay_ms, amplitude");
    }
  }
  c.validate();
  return c;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t subject, std::uint64_t trial) {
  return derive_seed(derive_seed(seed, subject), trial);
}

void add_atom(Eigen::Ref<Eigen::VectorXd> out, double rate_hz, double freq_hz, double decay_ms, double delay_ms,
              double amplitude) {
  const double tau = decay_ms / 1000.0;
  const double start = delay_ms / 1000.0;
  const auto first = static_cast<Index>(std::ceil(start * rate_hz));
  for (Index i = std::max<Index>(first, 0); i < out.size(); ++i) {
    const double s = static_cast<double>(i) / rate_hz - start;
    const double envelope = std::exp(-s / tau);
    if (envelope < 1e-12) break;
    out[i] += amplitude * envelope * std::sin(2.0 * std::numbers::pi * freq_hz * s);
  }
}

Eigen::VectorXd nominal_event(const SynthConfig& config) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(config.window_length);
  for (const auto& a : config.atoms) {
    const double half = 0.5 * a.shift_gain;
    add_atom(out, config.rate_hz, a.freq_hz + half * config.morphology_shift.freq_hz, a.decay_ms,
             std::max(0.0, a.delay_ms + half * config.morphology_shift.delay_ms), a.amplitude);
  }
  return out;
}

Respiration gen_respiration(const SynthConfig& config, std::uint64_t stream_seed) {
  config.validate();
  Rng rng(derive_seed(stream_seed, 0x7265737069ULL));
  const auto n = static_cast<Index>(std::llround(config.duration_s * config.rate_hz));
  const double period = 60.0 / config.resp_rate_bpm;
  const double t_in = period * config.ie_inspiration / (config.ie_inspiration + config.ie_expiration);
  const double t_ex = period - t_in;
  // Half-sine of duration T and peak A has area 2AT/pi.
  const double peak_in = config.tidal_volume_l * std::numbers::pi / (2.0 * t_in);
  const double peak_ex = config.tidal_volume_l * std::numbers::pi / (2.0 * t_ex);
  const double phase = rng.uniform(0.0, period);

  Eigen::VectorXd flow(n);
  for (Index i = 0; i < n; ++i) {
    const double t = std::fmod(static_cast<double>(i) / config.rate_hz + phase, period);
    flow[i] = t < t_in ? peak_in * std::sin(std::numbers::pi * t / t_in)
                       : -peak_ex * std::sin(std::numbers::pi * (t - t_in) / t_ex);
  }
  SampledSignal flow_signal(std::move(flow), config.rate_hz, "L/s");
  SampledSignal volume = integrate_flow(flow_signal);
  return {std::move(flow_signal), std::move(volume)};
}

Recording gen_scg_recording(const SynthConfig& config, std::uint64_t stream_seed) {
  config.validate();
  Respiration resp = gen_respiration(config, stream_seed);
  Rng rng(derive_seed(stream_seed, 0x7363670ULL));
  const Index n = resp.flow.size();
  const Index window = config.window_length;
  const double beat = 60.0 / config.heart_rate_bpm;

  // Beat k sits at (k + 1/2) beat intervals plus a uniform jitter, so the
  // count does not drift with accumulated jitter. A beat near the end keeps
  // its onset and loses the tail of its event.
  std::vector<Index> onsets;
  for (Index k = 0;; ++k) {
    const double jitter = rng.uniform(-config.heart_rate_jitter, config.heart_rate_jitter);
    const double t = (static_cast<double>(k) + 0.5 + jitter) * beat;
    const auto onset = static_cast<Index>(std::llround(t * config.rate_hz));
    if (onset >= n) break;
    onsets.push_back(onset);
  }

  const SampledSignal& volume = resp.volume;
  VolumeLabels labels = label_onsets(volume, onsets, LabelOptions{config.detrend_window_s});

  Eigen::VectorXd nominal = nominal_event(config);

  Eigen::VectorXd scg = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd event(window);
  for (std::size_t b = 0; b < onsets.size(); ++b) {
    const bool high = labels.labels[b] == VolumeClass::HLV;
    event.setZero();
    const double beat_scale = std::max(0.0, 1.0 + config.beat_amplitude_jitter * rng.normal());
    for (const auto& a : config.atoms) {
      const double gain = high ? a.shift_gain : 0.0;
      const double amplitude = beat_scale * a.amplitude * (1.0 + config.amplitude_jitter * rng.normal());
      const double delay = a.delay_ms + gain * config.morphology_shift.delay_ms +
                           config.atom_delay_jitter_ms * rng.normal();
      const double freq = a.freq_hz + gain * config.morphology_shift.freq_hz;
      add_atom(event, config.rate_hz, freq, a.decay_ms, std::max(0.0, delay), amplitude);
    }
    const Index kept = std::min(window, n - onsets[b]);
    scg.segment(onsets[b], kept) += event.head(kept);
  }

  if (config.snr_db) {
    // Mean power of the nominal event over its window versus noise variance.
    const double power = nominal.squaredNorm() / static_cast<double>(window);
    const double sigma = std::sqrt(power / std::pow(10.0, *config.snr_db / 10.0));
    Rng noise(derive_seed(stream_seed, 0x6e6f697365ULL));
    for (Index i = 0; i < n; ++i) scg[i] += sigma * noise.normal();
  }

  Recording rec{SampledSignal(std::move(scg), config.rate_hz, "g"), std::move(resp.flow), std::move(resp.volume),
                std::move(onsets), std::move(labels.labels), std::move(nominal)};
  return rec;
}

}  // namespace scgbin
