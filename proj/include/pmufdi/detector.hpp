#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pmufdi/circle_fit.hpp"
#include "pmufdi/scenario.hpp"
#include "pmufdi/stream_buffers.hpp"

namespace pmufdi {

struct Detection {
  AttackPattern pattern;
  double deviation = 0.0;  // d_t at emission
  double delta = 0.0;
};

/// Per-channel center-deviation detector.
///
/// The baseline center c0 and threshold delta come from an attack-free
/// training stream. Each sample advances a stride-1 window; once warm, the
/// window's fitted center gives d_t = |c0 - c_t|, which enters the deviation
/// queue. The flag is raised while d_t > delta with a full queue. A raised
/// flag emits the queue as an attack pattern unless a previous emission is
/// still cooling down (tau samples).
class OriginDetector {
 public:
  OriginDetector(Phasor baseline, double delta, DetectorParams params,
                 int channel = 0);

  /// c0 = fit over the whole training stream; delta = max(margin * max
  /// training-window deviation, delta_floor). Requires at least window +
  /// queue samples.
  static OriginDetector calibrate(std::span<const Phasor> training,
                                  const DetectorParams& params,
                                  int channel = 0);

  /// Advances one sample; returns the emitted detection, if any.
  std::optional<Detection> step(Phasor z);

  /// Restarts the stream state (window, queue, flag, cooldown) keeping the
  /// calibration.
  void reset();

  Phasor baseline() const noexcept { return baseline_; }
  double delta() const noexcept { return delta_; }
  const DetectorParams& params() const noexcept { return params_; }
  int channel() const noexcept { return channel_; }

  bool flag() const noexcept { return flag_; }
  /// d_t of the latest step, unset before the window is warm.
  std::optional<double> deviation() const noexcept { return deviation_; }
  /// Fitted center of the latest successful fit.
  std::optional<Phasor> center() const noexcept { return center_; }
  const DeviationQueue& queue() const noexcept { return queue_; }
  const SlidingWindow& window() const noexcept { return window_; }
  int cooldown() const noexcept { return cooldown_; }
  std::int64_t samples_seen() const noexcept { return t_; }
  std::int64_t degenerate_fits() const noexcept { return degenerate_fits_; }

 private:
  Phasor baseline_;
  double delta_;
  DetectorParams params_;
  int channel_;

  SlidingWindow window_;
  DeviationQueue queue_;
  std::vector<Phasor> scratch_;
  bool flag_ = false;
  int cooldown_ = 0;
  std::int64_t t_ = 0;
  std::int64_t degenerate_fits_ = 0;
  std::optional<double> deviation_;
  std::optional<Phasor> center_;
};

/// Largest |c0 - c_t| over every full window of `stream`.
double max_window_deviation(std::span<const Phasor> stream, Phasor baseline,
                            int window);

}  // namespace pmufdi
