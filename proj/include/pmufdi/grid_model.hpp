#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pmufdi/measurement.hpp"
#include "pmufdi/scenario.hpp"

namespace pmufdi {

/// Rotation and disturbance applied on top of the static linear model.
struct Waveform {
  double rate_hz = 30.0;
  std::vector<double> frequency_hz;  // one per measurement channel
  double slip_fraction = 0.0;        // |s_t| steps by this fraction ...
  std::int64_t slip_sample = -1;     // ... from this sample (if >= 0)
};

/// Linear measurement model m_t = H s_t + e_t over complex bus voltages.
/// H is real with full column rank; it acts on real and imaginary parts
/// independently.
class GridModel {
 public:
  GridModel(Eigen::MatrixXd h, Eigen::VectorXcd base_state, Waveform waveform,
            std::vector<ChannelMeta> meta, double noise_std,
            std::uint64_t seed);

  const Eigen::MatrixXd& h() const noexcept { return h_; }
  /// Moore-Penrose pseudo-inverse of H (p x n_meas).
  const Eigen::MatrixXd& pinv() const noexcept { return pinv_; }
  const Eigen::VectorXcd& base_state() const noexcept { return base_state_; }
  const Waveform& waveform() const noexcept { return waveform_; }
  const std::vector<ChannelMeta>& meta() const noexcept { return meta_; }
  double noise_std() const noexcept { return noise_std_; }
  std::uint64_t seed() const noexcept { return seed_; }

  int n_meas() const noexcept { return static_cast<int>(h_.rows()); }
  int n_states() const noexcept { return static_cast<int>(h_.cols()); }

  /// Bus voltages at sample t before channel rotation (slip applied).
  Eigen::VectorXcd state_at(std::int64_t t) const;

  /// Bus indices the scenario's PMUs sit on (structured models only).
  std::vector<int> pmu_buses;

 private:
  Eigen::MatrixXd h_;
  Eigen::MatrixXd pinv_;
  Eigen::VectorXcd base_state_;
  Waveform waveform_;
  std::vector<ChannelMeta> meta_;
  double noise_std_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Bus-incidence model for a scenario: each PMU sits on its own bus; voltage
/// channels observe that bus and each current channel observes a branch to a
/// dedicated neighbour bus.
GridModel make_grid_model(const ScenarioConfig& cfg);

/// Dense H with seeded standard-normal entries (resampled until full rank).
GridModel make_random_model(int n_meas, int n_states, std::uint64_t seed,
                            double noise_std = 0.0);

/// Each channel traces a circle about the origin: magnitude |(H s_t)_j|,
/// phase advancing at the channel's frequency, plus N(0, noise_std) on re
/// and im. Deterministic in `seed`.
MeasurementMatrix generate_clean(const GridModel& model, std::size_t n_samples,
                                 std::uint64_t seed);

/// Plain row-wise tiling; no phase continuity across copies.
MeasurementMatrix repeat_cycles(const MeasurementMatrix& m, int cycles);

/// Least-squares state estimate H^+ m_t.
Eigen::VectorXcd estimate_state(const GridModel& model,
                                std::span<const Phasor> m_t);

struct ResidualReport {
  Eigen::VectorXcd residual;
  double norm = 0.0;
  bool flagged = false;
};

/// Residual-based bad-data test: r = (I - H H^+) m_t, flagged iff |r| > threshold.
ResidualReport residual_bdd(const GridModel& model, std::span<const Phasor> m_t,
                            double threshold);

/// Adds complex Gaussian noise with RMS sigma * (column RMS magnitude) to a
/// seeded choice of ceil(channels / 2) columns. Returns the chosen columns.
std::vector<int> add_column_noise(MeasurementMatrix& m, double sigma,
                                  std::uint64_t seed);

}  // namespace pmufdi
