#include "pmufdi/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "internal.hpp"

namespace pmufdi {

namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& h) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= 1e-12 * s(0)) {
    throw DimensionError("measurement Jacobian is rank deficient");
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXcd to_vector(std::span<const Phasor> m_t) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(m_t.size()));
  for (std::size_t i = 0; i < m_t.size(); ++i) v(static_cast<Eigen::Index>(i)) = m_t[i];
  return v;
}

// Real operator applied to re and im independently.
Eigen::VectorXcd apply_real(const Eigen::MatrixXd& a, const Eigen::VectorXcd& x) {
  Eigen::VectorXd re = a * x.real();
  Eigen::VectorXd im = a * x.imag();
  Eigen::VectorXcd out(re.size());
  for (Eigen::Index i = 0; i < re.size(); ++i) out(i) = Phasor(re(i), im(i));
  return out;
}

}  // namespace

GridModel::GridModel(Eigen::MatrixXd h, Eigen::VectorXcd base_state,
                     Waveform waveform, std::vector<ChannelMeta> meta,
                     double noise_std, std::uint64_t seed)
    : h_(std::move(h)),
      base_state_(std::move(base_state)),
      waveform_(std::move(waveform)),
      meta_(std::move(meta)),
      noise_std_(noise_std),
      seed_(seed) {
  if (h_.rows() < 1 || h_.cols() < 1) throw DimensionError("empty measurement Jacobian");
  if (h_.rows() < h_.cols()) throw DimensionError("need n_meas >= number of states");
  if (!h_.allFinite()) throw NonFiniteError("measurement Jacobian has non-finite entries");
  if (base_state_.size() != h_.cols()) throw DimensionError("state length must equal H columns");
  if (static_cast<Eigen::Index>(waveform_.frequency_hz.size()) != h_.rows()) {
    throw DimensionError("one rotation frequency per measurement channel required");
  }
  if (static_cast<Eigen::Index>(meta_.size()) != h_.rows()) {
    throw DimensionError("channel metadata length must equal n_meas");
  }
  if (!(waveform_.rate_hz > 0.0)) throw std::invalid_argument("rate_hz must be positive");
  if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
    throw std::invalid_argument("noise_std must be finite and >= 0");
  }
  pinv_ = pseudo_inverse(h_);
}

Eigen::VectorXcd GridModel::state_at(std::int64_t t) const {
  if (waveform_.slip_sample >= 0 && t >= waveform_.slip_sample) {
    return base_state_ * (1.0 + waveform_.slip_fraction);
  }
  return base_state_;
}

GridModel make_grid_model(const ScenarioConfig& cfg) {
  cfg.validate();
  auto rng = detail::make_rng(cfg.seed, detail::kStreamModel);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);

  const int n_pmu = cfg.n_pmus();
  const int n_meas = cfg.total_channels();
  const int p = n_pmu + cfg.current_channels();

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_meas, p);
  Eigen::VectorXcd state(p);
  std::vector<ChannelMeta> meta;
  std::vector<int> pmu_buses;
  meta.reserve(static_cast<std::size_t>(n_meas));

  for (int k = 0; k < n_pmu; ++k) {
    const double mag = uniform(0.97, 1.03);
    const double ang = uniform(-0.2, 0.2);
    state(k) = std::polar(mag, ang);
    pmu_buses.push_back(k);
  }
  int row = 0;
  int neighbour = n_pmu;
  for (int k = 0; k < n_pmu; ++k) {
    const auto& ch = cfg.pmus[static_cast<std::size_t>(k)];
    for (int v = 0; v < ch.voltage; ++v) {
      h(row, k) = 1.0 + 0.01 * normal(rng);
      meta.push_back({k + 1, ChannelKind::voltage});
      ++row;
    }
    for (int c = 0; c < ch.current; ++c) {
      const double y = uniform(2.0, 5.0);
      h(row, k) = y;
      h(row, neighbour) = -y;
      state(neighbour) = std::polar(uniform(0.97, 1.03), std::arg(state(k)) - uniform(0.05, 0.25));
      meta.push_back({k + 1, ChannelKind::current});
      ++row;
      ++neighbour;
    }
  }

  Waveform wf;
  wf.rate_hz = cfg.rate_hz;
  wf.slip_fraction = cfg.slip_fraction;
  wf.slip_sample = cfg.slip_sample;
  wf.frequency_hz.resize(static_cast<std::size_t>(n_meas));
  for (auto& f : wf.frequency_hz) {
    f = cfg.base_frequency_hz * (1.0 + cfg.detune * uniform(-1.0, 1.0));
  }
  GridModel model(std::move(h), std::move(state), std::move(wf), std::move(meta),
                  cfg.measurement_noise, cfg.seed);
  model.pmu_buses = std::move(pmu_buses);
  return model;
}

GridModel make_random_model(int n_meas, int n_states, std::uint64_t seed,
                            double noise_std) {
  if (n_states < 1 || n_meas < n_states) {
    throw DimensionError("random model needs 1 <= n_states <= n_meas");
  }
  auto rng = detail::make_rng(seed, detail::kStreamModel);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd h(n_meas, n_states);
  for (int attempt = 0;; ++attempt) {
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) > 1e-8 * s(0)) break;
    if (attempt > 100) throw DimensionError("could not draw a full-rank Jacobian");
  }
  Eigen::VectorXcd state(n_states);
  for (int i = 0; i < n_states; ++i) state(i) = Phasor(normal(rng), normal(rng));
  Waveform wf;
  wf.frequency_hz.resize(static_cast<std::size_t>(n_meas));
  for (auto& f : wf.frequency_hz) f = 2.0 * (1.0 + 0.05 * (2.0 * unit(rng) - 1.0));
  return GridModel(std::move(h), std::move(state), std::move(wf),
                   std::vector<ChannelMeta>(static_cast<std::size_t>(n_meas)),
                   noise_std, seed);
}

MeasurementMatrix generate_clean(const GridModel& model, std::size_t n_samples,
                                 std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  MeasurementMatrix m(n_samples, model.meta(), model.waveform().rate_hz);
  auto rng = detail::make_rng(seed, detail::kStreamNoise);
  std::normal_distribution<double> noise(0.0, model.noise_std() > 0 ? model.noise_std() : 1.0);
  const auto& wf = model.waveform();
  const int k = model.n_meas();

  Eigen::VectorXcd mags = apply_real(model.h(), model.state_at(0));
  std::int64_t mags_from = 0;
  for (std::size_t t = 0; t < n_samples; ++t) {
    const auto ti = static_cast<std::int64_t>(t);
    if (wf.slip_sample >= 0 && ti == wf.slip_sample && mags_from != ti) {
      mags = apply_real(model.h(), model.state_at(ti));
      mags_from = ti;
    }
    for (int j = 0; j < k; ++j) {
      const double phase = 2.0 * std::numbers::pi * wf.frequency_hz[j] *
                           static_cast<double>(t) / wf.rate_hz;
      Phasor z = mags(j) * std::polar(1.0, phase);
      if (model.noise_std() > 0) {
        z += Phasor(noise(rng), noise(rng));
      }
      m.set(t, static_cast<std::size_t>(j), z);
    }
  }
  return m;
}

MeasurementMatrix repeat_cycles(const MeasurementMatrix& m, int cycles) {
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  MeasurementMatrix out(m.rows() * static_cast<std::size_t>(cycles), m.meta(), m.rate_hz());
  for (int c = 0; c < cycles; ++c) {
    for (std::size_t t = 0; t < m.rows(); ++t) {
      for (std::size_t j = 0; j < m.channels(); ++j) {
        out.set(static_cast<std::size_t>(c) * m.rows() + t, j, m(t, j));
      }
    }
  }
  return out;
}

Eigen::VectorXcd estimate_state(const GridModel& model,
                                std::span<const Phasor> m_t) {
  if (static_cast<int>(m_t.size()) != model.n_meas()) {
    throw DimensionError("measurement row has " + std::to_string(m_t.size()) +
                         " entries, model expects " + std::to_string(model.n_meas()));
  }
  return apply_real(model.pinv(), to_vector(m_t));
}

ResidualReport residual_bdd(const GridModel& model, std::span<const Phasor> m_t,
                            double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  const Eigen::VectorXcd s = estimate_state(model, m_t);
  ResidualReport rep;
  rep.residual = to_vector(m_t) - apply_real(model.h(), s);
  rep.norm = rep.residual.norm();
  rep.flagged = rep.norm > threshold;
  return rep;
}

std::vector<int> add_column_noise(MeasurementMatrix& m, double sigma,
                                  std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("noise sigma must be finite and >= 0");
  }
  const int k = static_cast<int>(m.channels());
  std::vector<int> cols(static_cast<std::size_t>(k));
  std::iota(cols.begin(), cols.end(), 0);
  auto pick = detail::make_rng(seed, detail::kStreamColumnChoice);
  std::shuffle(cols.begin(), cols.end(), pick);
  cols.resize(static_cast<std::size_t>((k + 1) / 2));
  std::sort(cols.begin(), cols.end());
  if (sigma == 0.0) return cols;

  auto rng = detail::make_rng(seed, detail::kStreamColumnNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int j : cols) {
    const auto col = static_cast<std::size_t>(j);
    double ss = 0.0;
    for (std::size_t t = 0; t < m.rows(); ++t) ss += std::norm(m(t, col));
    const double rms = std::sqrt(ss / static_cast<double>(m.rows()));
    const double sd = sigma * rms / std::numbers::sqrt2;
    for (std::size_t t = 0; t < m.rows(); ++t) {
      const double re = normal(rng);
      const double im = normal(rng);
      m.set(t, col, m(t, col) + Phasor(sd * re, sd * im));
    }
  }
  return cols;
}

}  // namespace pmufdi
