#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmufdi/phasor.hpp"

namespace pmufdi {

/// Stride-1 sliding window over one channel; newest sample last.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  void push(Phasor z);
  void clear() noexcept;

  std::size_t capacity() const noexcept { return ring_.size(); }
  std::size_t size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == ring_.size(); }

  /// i = 0 is the oldest buffered sample.
  Phasor operator[](std::size_t i) const noexcept {
    return ring_[(head_ + i) % ring_.size()];
  }
  /// Copies the buffer oldest-first into `out` (size() elements).
  void copy_to(std::span<Phasor> out) const noexcept;
  std::vector<Phasor> to_vector() const;

 private:
  std::vector<Phasor> ring_;
  std::size_t head_ = 0;  // index of the oldest sample
  std::size_t size_ = 0;
};

/// Length-tau sequence of center deviations exported from a full queue.
struct AttackPattern {
  std::vector<double> sequence;
  int channel = 0;
  std::int64_t t_detect = 0;
};

/// FIFO of non-negative center deviations with a fixed capacity.
class DeviationQueue {
 public:
  explicit DeviationQueue(std::size_t capacity);

  void push(double deviation);
  void clear() noexcept;

  std::size_t capacity() const noexcept { return ring_.size(); }
  std::size_t size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == ring_.size(); }

  double operator[](std::size_t i) const noexcept {
    return ring_[(head_ + i) % ring_.size()];
  }
  double mean() const noexcept;
  std::vector<double> values() const;

  /// Requires full(); values in arrival order.
  AttackPattern export_pattern(int channel, std::int64_t t_detect) const;

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace pmufdi
