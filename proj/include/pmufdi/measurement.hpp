#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmufdi/phasor.hpp"

namespace pmufdi {

enum class ChannelKind { voltage, current };

std::string_view to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(std::string_view text);

struct ChannelMeta {
  int pmu_id = 0;
  ChannelKind kind = ChannelKind::voltage;

  friend bool operator==(const ChannelMeta&, const ChannelMeta&) = default;
};

/// Dense n x channels grid of phasors; rows are sample indices, columns are
/// independent PMU channels aligned by index. Every cell is finite.
class MeasurementMatrix {
 public:
  MeasurementMatrix(std::size_t rows, std::vector<ChannelMeta> meta,
                    double rate_hz = 30.0);
  MeasurementMatrix(std::size_t rows, std::size_t channels,
                    double rate_hz = 30.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t channels() const noexcept { return meta_.size(); }
  double rate_hz() const noexcept { return rate_hz_; }
  const std::vector<ChannelMeta>& meta() const noexcept { return meta_; }

  Phasor operator()(std::size_t t, std::size_t channel) const noexcept {
    return data_[t * meta_.size() + channel];
  }
  Phasor at(std::size_t t, std::size_t channel) const;
  void set(std::size_t t, std::size_t channel, Phasor z);

  std::span<const Phasor> row(std::size_t t) const;
  std::vector<Phasor> column(std::size_t channel) const;
  std::span<const Phasor> data() const noexcept { return data_; }

  /// Bit-exact comparison of samples, metadata and rate.
  friend bool operator==(const MeasurementMatrix&,
                         const MeasurementMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::vector<ChannelMeta> meta_;
  double rate_hz_ = 30.0;
  std::vector<Phasor> data_;
};

enum class StreamFormat { csv, jsonl };

/// `.jsonl` selects JSONL, anything else CSV.
StreamFormat format_from_path(const std::filesystem::path& path);

// CSV: optional `#` metadata lines, then header `t,channel,re,im`, one row per
// (t, channel). JSONL: optional {"rate_hz":..,"channels":[..]} header object,
// then one {"t","channel","re","im"} object per line. Every (t, channel) pair
// in 0..n-1 x 0..channels-1 must appear exactly once.
MeasurementMatrix read_stream(std::istream& in, StreamFormat format);
void write_stream(std::ostream& out, const MeasurementMatrix& m,
                  StreamFormat format);

MeasurementMatrix load_stream(const std::filesystem::path& path,
                              StreamFormat format);
MeasurementMatrix load_stream(const std::filesystem::path& path);
void save_stream(const MeasurementMatrix& m, const std::filesystem::path& path,
                 StreamFormat format);
void save_stream(const MeasurementMatrix& m, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace pmufdi
