#include "pmufdi/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pmufdi {

OriginDetector::OriginDetector(Phasor baseline, double delta,
                               DetectorParams params, int channel)
    : baseline_(baseline),
      delta_(delta),
      params_(params),
      channel_(channel),
      window_((params.validate(), static_cast<std::size_t>(params.window))),
      queue_(static_cast<std::size_t>(params.queue)),
      scratch_(static_cast<std::size_t>(params.window)) {
  require_finite(baseline, "detector baseline");
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("detection threshold must be positive");
  }
}

double max_window_deviation(std::span<const Phasor> stream, Phasor baseline,
                            int window) {
  if (window < 3) throw std::invalid_argument("window must hold at least 3 samples");
  const auto w = static_cast<std::size_t>(window);
  if (stream.size() < w) throw std::invalid_argument("stream shorter than the window");
  double worst = 0.0;
  for (std::size_t i = 0; i + w <= stream.size(); ++i) {
    try {
      const auto fit = fit_circle(stream.subspan(i, w));
      worst = std::max(worst, std::abs(baseline - fit.center));
    } catch (const DegenerateFitError&) {
    }
  }
  return worst;
}

OriginDetector OriginDetector::calibrate(std::span<const Phasor> training,
                                         const DetectorParams& params,
                                         int channel) {
  params.validate();
  if (training.size() < static_cast<std::size_t>(params.window + params.queue)) {
    throw std::invalid_argument("training stream shorter than window + queue");
  }
  const Phasor c0 = fit_circle(training).center;
  const double worst = max_window_deviation(training, c0, params.window);
  const double delta = std::max(params.margin * worst, params.delta_floor);
  return OriginDetector(c0, delta, params, channel);
}

std::optional<Detection> OriginDetector::step(Phasor z) {
  window_.push(z);
  ++t_;
  if (cooldown_ > 0) --cooldown_;
  if (!window_.full()) {
    flag_ = false;
    return std::nullopt;
  }
  window_.copy_to(scratch_);
  try {
    const auto fit = fit_circle(scratch_);
    center_ = fit.center;
    deviation_ = std::abs(baseline_ - fit.center);
  } catch (const DegenerateFitError&) {
    ++degenerate_fits_;
  }
  if (!deviation_) {
    flag_ = false;
    return std::nullopt;
  }
  queue_.push(*deviation_);
  flag_ = *deviation_ > delta_ && queue_.full();
  if (!flag_ || cooldown_ > 0) return std::nullopt;
  cooldown_ = params_.queue;
  return Detection{queue_.export_pattern(channel_, t_ - 1), *deviation_, delta_};
}

void OriginDetector::reset() {
  window_.clear();
  queue_.clear();
  flag_ = false;
  cooldown_ = 0;
  t_ = 0;
  degenerate_fits_ = 0;
  deviation_.reset();
  center_.reset();
}

}  // namespace pmufdi
