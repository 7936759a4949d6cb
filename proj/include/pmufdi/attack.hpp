#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "pmufdi/grid_model.hpp"
#include "pmufdi/measurement.hpp"
#include "pmufdi/scenario.hpp"

namespace pmufdi {

/// Per-sample error increment for an attack class (1..8), signed:
/// classes 1-4 add, 5-8 deduct.
double class_increment(int class_id);

/// Unobservable attack schedule. The corruption C_t is non-zero only on the
/// targeted buses, where it carries the cumulative signed magnitude times a
/// fixed per-target unit phase. Magnitude accumulates across back-to-back
/// class intervals (one episode) and resets to zero between episodes.
struct AttackPlan {
  int strategy = 1;
  std::vector<ClassInterval> classes;  // sorted, non-overlapping
  std::vector<int> targets;            // bus indices
  std::vector<Phasor> target_phase;    // unit phasors, one per target
  int n_states = 0;
  std::uint64_t seed = 0;

  /// Signed cumulative magnitude at sample t (0 outside every interval).
  double magnitude_at(std::int64_t t) const;
  /// Active class id at t, 0 if none.
  int class_at(std::int64_t t) const;
  /// Row t of C (length n_states).
  Eigen::VectorXcd corruption_at(std::int64_t t) const;

  /// Cumulative magnitude carried into each interval; filled by build_plan.
  std::vector<double> carried;
};

AttackPlan build_plan(const GridModel& model, int strategy,
                      std::vector<ClassInterval> classes,
                      std::vector<int> targets, std::uint64_t seed);

/// Per-sample, per-channel ground truth: 0 clean, otherwise the class id.
class LabelTrack {
 public:
  LabelTrack(std::size_t rows, std::size_t channels);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t channels() const noexcept { return channels_; }
  int operator()(std::size_t t, std::size_t channel) const noexcept {
    return labels_[t * channels_ + channel];
  }
  void set(std::size_t t, std::size_t channel, int label) {
    labels_[t * channels_ + channel] = label;
  }
  /// True if any channel is attacked at t.
  bool attacked(std::size_t t) const noexcept;

  friend bool operator==(const LabelTrack&, const LabelTrack&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t channels_ = 0;
  std::vector<int> labels_;
};

struct InjectionResult {
  MeasurementMatrix attacked;
  LabelTrack labels;
};

/// M_bar = M + C H^T row by row; purely additive.
InjectionResult inject(const MeasurementMatrix& m, const AttackPlan& plan,
                       const GridModel& model);

/// CSV `t,channel,class`, one row per (t, channel).
void write_labels(std::ostream& out, const LabelTrack& labels);
LabelTrack read_labels(std::istream& in);
void save_labels(const LabelTrack& labels, const std::filesystem::path& path);
LabelTrack load_labels(const std::filesystem::path& path);

}  // namespace pmufdi
