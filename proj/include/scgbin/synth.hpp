#pragma once

// Seeded synthetic cardiorespiratory recordings. Each heartbeat adds a sum of
// damped-sinusoid atoms; beats that fall at high lung volume get a class
// shift (delay and frequency offset) on the atoms that carry a nonzero
// shift_gain.

#include "scgbin/events.hpp"
#include "scgbin/signal.hpp"
#include "scgbin/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace scgbin {

struct Atom {
  double freq_hz;
  double decay_ms;    ///< envelope time constant
  double delay_ms;    ///< start relative to the event onset
  double amplitude;
  double shift_gain;  ///< fraction of the class shift this atom receives
};

struct MorphologyShift {
  double delay_ms = 0.3;
  double freq_hz = -0.5;
};

struct SynthConfig {
  double rate_hz = 10000.0;
  double duration_s = 300.0;  ///< per trial
  int trials = 2;
  double heart_rate_bpm = 57.0;
  double heart_rate_jitter = 0.05;  ///< uniform +- fraction of the beat interval
  double resp_rate_bpm = 12.0;
  double ie_inspiration = 1.0;
  double ie_expiration = 3.0;
  double tidal_volume_l = 1.0;
  std::optional<double> snr_db = 20.0;  ///< nullopt: no noise
  std::vector<Atom> atoms = default_atoms();
  double beat_amplitude_jitter = 0.25;  ///< sd of a per-beat scale shared by all atoms
  double amplitude_jitter = 0.1;        ///< sd of the per-beat relative amplitude of each atom
  double atom_delay_jitter_ms = 0.15;
  MorphologyShift morphology_shift;
  Index window_length = kDefaultWindowLength;
  double detrend_window_s = 30.0;
  std::uint64_t seed = 0;

  static std::vector<Atom> default_atoms();

  /// Throws ParameterError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& c);
/// Starts from defaults and overrides every field present in `j`.
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct Respiration {
  SampledSignal flow;
  SampledSignal volume;
};

struct Recording {
  SampledSignal scg;
  SampledSignal flow;
  SampledSignal volume;
  std::vector<Index> onsets;
  std::vector<VolumeClass> labels;
  Eigen::VectorXd nominal_event;  ///< jitter-free event halfway between the two class morphologies
};

/// Jitter-free event halfway between the two class morphologies, one window
/// long. Serves as the detection template for synthetic recordings.
Eigen::VectorXd nominal_event(const SynthConfig& config);

/// Breath period 60 / resp_rate; inspiration takes ie_i / (ie_i + ie_e) of it.
/// Flow is a positive half-sine during inspiration and a negative half-sine
/// during expiration with equal areas (tidal_volume_l).
Respiration gen_respiration(const SynthConfig& config, std::uint64_t stream_seed);

/// One trial. `stream_seed` selects the random stream; use trial_seed(). Every
/// beat with an onset inside the recording is listed; the last event may be
/// cut short by the end of the signal.
Recording gen_scg_recording(const SynthConfig& config, std::uint64_t stream_seed);

/// Seed for (subject, trial): derive_seed(derive_seed(seed, subject), trial).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t subject, std::uint64_t trial);

/// One atom waveform starting at `delay_ms`, sampled over `length` samples.
void add_atom(Eigen::Ref<Eigen::VectorXd> out, double rate_hz, double freq_hz, double decay_ms, double delay_ms,
              double amplitude);

}  // namespace scgbin
