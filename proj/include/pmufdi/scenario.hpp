#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pmufdi {

struct PmuChannels {
  int voltage = 1;
  int current = 0;

  friend bool operator==(const PmuChannels&, const PmuChannels&) = default;
};

/// One scheduled attack class over samples [start, end).
struct ClassInterval {
  int class_id = 1;
  std::int64_t start = 0;
  std::int64_t end = 0;

  friend bool operator==(const ClassInterval&, const ClassInterval&) = default;
};

struct DetectorParams {
  int window = 15;          // omega, samples per circle fit
  int queue = 10;           // tau, deviation queue length
  double margin = 2.0;      // delta = margin * max clean deviation
  double delta_floor = 1e-6;

  void validate() const;
  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

enum class SimilarityMode { centered, paper };

std::string_view to_string(SimilarityMode mode);
SimilarityMode similarity_mode_from_string(std::string_view text);

/// 20 log-spaced values in [1e-3, 10].
std::vector<double> default_gamma_grid();

struct ClassifierParams {
  int memory = 10;                   // lambda, patterns per class
  std::optional<double> gamma;       // unset: calibrated from training events
  SimilarityMode mode = SimilarityMode::centered;
  std::vector<double> gamma_grid = default_gamma_grid();

  void validate() const;
  friend bool operator==(const ClassifierParams&,
                         const ClassifierParams&) = default;
};

/// Everything needed to regenerate one synthetic experiment bit-for-bit.
struct ScenarioConfig {
  std::string name = "custom";
  std::vector<PmuChannels> pmus{{1, 0}};
  int attack_strategy = 1;
  // Unset: derived from attack_strategy and the episode layout below.
  std::optional<std::vector<ClassInterval>> attack_classes;
  int cycles = 30;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;

  // Stream layout.
  double rate_hz = 30.0;
  int base_samples = 600;
  int training_cycles = 2;      // clean prefix used to calibrate detectors
  int first_attack_cycle = 2;
  int attack_every = 2;         // one attacked cycle every N cycles
  int interval_samples = 150;   // samples per attack class

  // Waveform synthesis.
  double base_frequency_hz = 2.0;
  double detune = 0.05;          // per-channel relative frequency spread
  double slip_fraction = 0.002;  // generator slip: step in |s_t|
  int slip_sample = 60;
  double measurement_noise = 0.0;

  DetectorParams detector;
  ClassifierParams classifier;

  int n_pmus() const { return static_cast<int>(pmus.size()); }
  int voltage_channels() const;
  int current_channels() const;
  int total_channels() const { return voltage_channels() + current_channels(); }
  std::int64_t stream_length() const {
    return static_cast<std::int64_t>(cycles) * base_samples;
  }
  std::int64_t training_samples() const {
    return static_cast<std::int64_t>(training_cycles) * base_samples;
  }

  /// attack_classes if set, otherwise one strategy episode per attacked cycle.
  std::vector<ClassInterval> resolved_schedule() const;

  void validate() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// The four attack classes of a strategy, in injection order.
std::vector<int> strategy_classes(int strategy);

/// Contiguous episode of the strategy's classes starting at `start`.
std::vector<ClassInterval> strategy_episode(int strategy, std::int64_t start,
                                            std::int64_t interval_samples);

/// Named presets: scenario1..scenario4 (attacked PMU/channel counts) and
/// full (6 PMUs, 37 channels).
ScenarioConfig preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace pmufdi
