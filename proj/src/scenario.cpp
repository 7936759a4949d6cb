#include "pmufdi/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "pmufdi/errors.hpp"

namespace pmufdi {

void DetectorParams::validate() const {
  if (window < 4) throw ConfigError("window must be >= 4 samples");
  if (queue < 1) throw ConfigError("queue length must be >= 1");
  if (!(margin >= 1.0) || !std::isfinite(margin)) {
    throw ConfigError("detection margin must be >= 1");
  }
  if (!(delta_floor > 0.0) || !std::isfinite(delta_floor)) {
    throw ConfigError("delta floor must be positive");
  }
}

std::string_view to_string(SimilarityMode mode) {
  return mode == SimilarityMode::centered ? "centered" : "paper";
}

SimilarityMode similarity_mode_from_string(std::string_view text) {
  if (text == "centered") return SimilarityMode::centered;
  if (text == "paper") return SimilarityMode::paper;
  throw ConfigError("unknown similarity mode '" + std::string(text) + "'");
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid(20);
  const double lo = std::log10(1e-3);
  const double hi = std::log10(10.0);
  for (int i = 0; i < 20; ++i) {
    grid[i] = std::pow(10.0, lo + (hi - lo) * i / 19.0);
  }
  grid.front() = 1e-3;
  grid.back() = 10.0;
  return grid;
}

void ClassifierParams::validate() const {
  if (memory < 1) throw ConfigError("class memory must be >= 1");
  if (gamma && (!(*gamma > 0.0) || !std::isfinite(*gamma))) {
    throw ConfigError("gamma must be finite and > 0");
  }
  if (!gamma && gamma_grid.empty()) {
    throw ConfigError("gamma grid is empty and no gamma is set");
  }
  for (double g : gamma_grid) {
    if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("gamma grid values must be > 0");
  }
}

int ScenarioConfig::voltage_channels() const {
  int n = 0;
  for (const auto& p : pmus) n += p.voltage;
  return n;
}

int ScenarioConfig::current_channels() const {
  int n = 0;
  for (const auto& p : pmus) n += p.current;
  return n;
}

std::vector<int> strategy_classes(int strategy) {
  switch (strategy) {
    case 1: return {1, 2, 3, 4};
    case 2: return {5, 6, 7, 8};
    case 3: return {5, 1, 6, 2};
    case 4: return {1, 6, 3, 8};
    default:
      throw ConfigError("attack strategy must be 1..4, got " + std::to_string(strategy));
  }
}

std::vector<ClassInterval> strategy_episode(int strategy, std::int64_t start,
                                            std::int64_t interval_samples) {
  std::vector<ClassInterval> out;
  std::int64_t t = start;
  for (int c : strategy_classes(strategy)) {
    out.push_back({c, t, t + interval_samples});
    t += interval_samples;
  }
  return out;
}

std::vector<ClassInterval> ScenarioConfig::resolved_schedule() const {
  if (attack_classes) return *attack_classes;
  std::vector<ClassInterval> out;
  for (int c = first_attack_cycle; c < cycles; c += attack_every) {
    auto ep = strategy_episode(attack_strategy,
                               static_cast<std::int64_t>(c) * base_samples,
                               interval_samples);
    out.insert(out.end(), ep.begin(), ep.end());
  }
  return out;
}

void ScenarioConfig::validate() const {
  if (pmus.empty()) throw ConfigError("scenario needs at least one PMU");
  for (const auto& p : pmus) {
    if (p.voltage < 0 || p.current < 0 || p.voltage + p.current == 0) {
      throw ConfigError("each PMU needs a non-negative channel split with at least one channel");
    }
    if (p.voltage == 0) throw ConfigError("each PMU needs at least one voltage channel");
  }
  strategy_classes(attack_strategy);
  if (cycles < 1) throw ConfigError("cycles must be >= 1");
  if (!(noise_sigma >= 0.0 && noise_sigma <= 0.25)) {
    throw ConfigError("noise_sigma must lie in [0, 0.25]");
  }
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ConfigError("rate_hz must be positive");
  if (base_samples < 1) throw ConfigError("base_samples must be >= 1");
  if (training_cycles < 1 || training_cycles > cycles) {
    throw ConfigError("training_cycles must lie in [1, cycles]");
  }
  if (attack_every < 1) throw ConfigError("attack_every must be >= 1");
  if (first_attack_cycle < training_cycles && !attack_classes) {
    throw ConfigError("attacks must start after the training cycles");
  }
  if (interval_samples < 1) throw ConfigError("interval_samples must be >= 1");
  if (!std::isfinite(base_frequency_hz) || detune < 0.0 || detune >= 1.0) {
    throw ConfigError("invalid waveform frequency settings");
  }
  if (!std::isfinite(slip_fraction) || slip_sample < -1 || slip_sample >= base_samples) {
    throw ConfigError("invalid generator slip settings");
  }
  if (!(measurement_noise >= 0.0) || !std::isfinite(measurement_noise)) {
    throw ConfigError("measurement_noise must be >= 0");
  }
  detector.validate();
  classifier.validate();
  if (training_samples() < detector.window + detector.queue) {
    throw ConfigError("training prefix shorter than window + queue");
  }

  const auto schedule = resolved_schedule();
  std::int64_t prev_end = -1;
  const auto n = stream_length();
  for (const auto& iv : schedule) {
    if (iv.class_id < 1 || iv.class_id > 8) {
      throw ConfigError("attack class must be 1..8, got " + std::to_string(iv.class_id));
    }
    if (iv.start < 0 || iv.end <= iv.start) throw ConfigError("empty or negative attack interval");
    if (iv.end > n) {
      throw ConfigError("attack schedule exceeds stream length (" + std::to_string(iv.end) +
                        " > " + std::to_string(n) + ")");
    }
    if (iv.start < prev_end) throw ConfigError("attack intervals must be sorted and disjoint");
    if (iv.start < training_samples()) {
      throw ConfigError("attack interval overlaps the clean training prefix");
    }
    prev_end = iv.end;
  }
}

namespace {

ScenarioConfig with_pmus(std::string name, std::vector<PmuChannels> pmus,
                         int strategy) {
  ScenarioConfig cfg;
  cfg.name = std::move(name);
  cfg.pmus = std::move(pmus);
  cfg.attack_strategy = strategy;
  return cfg;
}

}  // namespace

ScenarioConfig preset(std::string_view name) {
  if (name == "scenario1") {
    return with_pmus("scenario1", {{2, 3}, {2, 3}, {2, 4}}, 1);
  }
  if (name == "scenario2") {
    return with_pmus("scenario2", {{2, 5}, {2, 5}, {1, 6}}, 2);
  }
  if (name == "scenario3") {
    return with_pmus("scenario3", {{2, 4}, {2, 4}, {2, 4}, {1, 4}}, 3);
  }
  if (name == "scenario4") {
    return with_pmus("scenario4", {{2, 5}, {2, 5}, {2, 5}, {1, 5}}, 4);
  }
  if (name == "full") {
    return with_pmus("full", {{2, 5}, {2, 5}, {2, 5}, {1, 5}, {1, 4}, {1, 4}}, 1);
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"scenario1", "scenario2", "scenario3", "scenario4", "full"};
}

}  // namespace pmufdi
