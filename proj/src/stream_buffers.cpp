#include "pmufdi/stream_buffers.hpp"

#include <cmath>
#include <stdexcept>

namespace pmufdi {

SlidingWindow::SlidingWindow(std::size_t capacity) : ring_(capacity) {
  if (capacity == 0) throw std::invalid_argument("window capacity must be >= 1");
}

void SlidingWindow::push(Phasor z) {
  require_finite(z, "window");
  const std::size_t cap = ring_.size();
  if (size_ < cap) {
    ring_[(head_ + size_) % cap] = z;
    ++size_;
  } else {
    ring_[head_] = z;
    head_ = (head_ + 1) % cap;
  }
}

void SlidingWindow::clear() noexcept {
  head_ = 0;
  size_ = 0;
}

void SlidingWindow::copy_to(std::span<Phasor> out) const noexcept {
  for (std::size_t i = 0; i < size_ && i < out.size(); ++i) out[i] = (*this)[i];
}

std::vector<Phasor> SlidingWindow::to_vector() const {
  std::vector<Phasor> v(size_);
  copy_to(v);
  return v;
}

DeviationQueue::DeviationQueue(std::size_t capacity) : ring_(capacity, 0.0) {
  if (capacity == 0) throw std::invalid_argument("queue capacity must be >= 1");
}

void DeviationQueue::push(double deviation) {
  if (!std::isfinite(deviation) || deviation < 0.0) {
    throw std::invalid_argument("deviation must be finite and non-negative");
  }
  const std::size_t cap = ring_.size();
  if (size_ < cap) {
    ring_[(head_ + size_) % cap] = deviation;
    ++size_;
  } else {
    ring_[head_] = deviation;
    head_ = (head_ + 1) % cap;
  }
}

void DeviationQueue::clear() noexcept {
  head_ = 0;
  size_ = 0;
}

double DeviationQueue::mean() const noexcept {
  if (size_ == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < size_; ++i) s += (*this)[i];
  return s / static_cast<double>(size_);
}

std::vector<double> DeviationQueue::values() const {
  std::vector<double> v(size_);
  for (std::size_t i = 0; i < size_; ++i) v[i] = (*this)[i];
  return v;
}

AttackPattern DeviationQueue::export_pattern(int channel,
                                             std::int64_t t_detect) const {
  if (!full()) throw std::logic_error("cannot export a pattern from a partial queue");
  return AttackPattern{values(), channel, t_detect};
}

}  // namespace pmufdi
