#include "pmufdi/attack.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "internal.hpp"

namespace pmufdi {

double class_increment(int class_id) {
  static constexpr double kMagnitude[4] = {1e-4, 5e-4, 1e-3, 5e-3};
  if (class_id < 1 || class_id > 8) {
    throw ConfigError("attack class must be 1..8, got " + std::to_string(class_id));
  }
  const double mag = kMagnitude[(class_id - 1) % 4];
  return class_id <= 4 ? mag : -mag;
}

namespace {

// Index of the interval containing t, or -1.
std::ptrdiff_t find_interval(const std::vector<ClassInterval>& classes, std::int64_t t) {
  auto it = std::upper_bound(classes.begin(), classes.end(), t,
                             [](std::int64_t v, const ClassInterval& iv) { return v < iv.start; });
  if (it == classes.begin()) return -1;
  --it;
  if (t >= it->end) return -1;
  return it - classes.begin();
}

}  // namespace

double AttackPlan::magnitude_at(std::int64_t t) const {
  const auto i = find_interval(classes, t);
  if (i < 0) return 0.0;
  const auto& iv = classes[static_cast<std::size_t>(i)];
  const double base = carried.empty() ? 0.0 : carried[static_cast<std::size_t>(i)];
  return base + class_increment(iv.class_id) * static_cast<double>(t - iv.start + 1);
}

int AttackPlan::class_at(std::int64_t t) const {
  const auto i = find_interval(classes, t);
  return i < 0 ? 0 : classes[static_cast<std::size_t>(i)].class_id;
}

Eigen::VectorXcd AttackPlan::corruption_at(std::int64_t t) const {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n_states);
  const double mag = magnitude_at(t);
  if (mag == 0.0) return c;
  for (std::size_t k = 0; k < targets.size(); ++k) c(targets[k]) = mag * target_phase[k];
  return c;
}

AttackPlan build_plan(const GridModel& model, int strategy,
                      std::vector<ClassInterval> classes,
                      std::vector<int> targets, std::uint64_t seed) {
  strategy_classes(strategy);
  if (targets.empty()) throw ConfigError("attack target set is empty");
  std::set<int> unique(targets.begin(), targets.end());
  if (unique.size() != targets.size()) throw ConfigError("duplicate attack targets");
  for (int b : targets) {
    if (b < 0 || b >= model.n_states()) {
      throw ConfigError("attack target bus " + std::to_string(b) + " out of range");
    }
  }
  std::sort(classes.begin(), classes.end(),
            [](const ClassInterval& a, const ClassInterval& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < classes.size(); ++i) {
    class_increment(classes[i].class_id);
    if (classes[i].end <= classes[i].start || classes[i].start < 0) {
      throw ConfigError("empty or negative attack interval");
    }
    if (i > 0 && classes[i].start < classes[i - 1].end) {
      throw ConfigError("overlapping attack class intervals");
    }
  }

  AttackPlan plan;
  plan.strategy = strategy;
  plan.targets = std::move(targets);
  plan.n_states = model.n_states();
  plan.seed = seed;
  auto rng = detail::make_rng(seed, detail::kStreamAttack);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (std::size_t k = 0; k < plan.targets.size(); ++k) {
    plan.target_phase.push_back(std::polar(1.0, angle(rng)));
  }
  plan.carried.resize(classes.size(), 0.0);
  for (std::size_t i = 1; i < classes.size(); ++i) {
    const auto& prev = classes[i - 1];
    if (prev.end == classes[i].start) {
      plan.carried[i] = plan.carried[i - 1] +
                        class_increment(prev.class_id) * static_cast<double>(prev.end - prev.start);
    }
  }
  plan.classes = std::move(classes);
  return plan;
}

LabelTrack::LabelTrack(std::size_t rows, std::size_t channels)
    : rows_(rows), channels_(channels), labels_(rows * channels, 0) {}

bool LabelTrack::attacked(std::size_t t) const noexcept {
  for (std::size_t j = 0; j < channels_; ++j) {
    if (labels_[t * channels_ + j] != 0) return true;
  }
  return false;
}

InjectionResult inject(const MeasurementMatrix& m, const AttackPlan& plan,
                       const GridModel& model) {
  if (static_cast<int>(m.channels()) != model.n_meas()) {
    throw DimensionError("stream has " + std::to_string(m.channels()) +
                         " channels, model expects " + std::to_string(model.n_meas()));
  }
  if (plan.n_states != model.n_states()) {
    throw DimensionError("attack plan and model disagree on the state dimension");
  }
  InjectionResult out{m, LabelTrack(m.rows(), m.channels())};
  if (plan.classes.empty()) return out;

  // D_t = H C_t = magnitude(t) * H c_unit, with c_unit fixed per plan.
  Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(plan.n_states);
  for (std::size_t k = 0; k < plan.targets.size(); ++k) unit(plan.targets[k]) = plan.target_phase[k];
  const Eigen::MatrixXd& h = model.h();
  Eigen::VectorXcd dir(h.rows());
  {
    Eigen::VectorXd re = h * unit.real();
    Eigen::VectorXd im = h * unit.imag();
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = Phasor(re(i), im(i));
  }
  for (const auto& iv : plan.classes) {
    const auto lo = std::max<std::int64_t>(iv.start, 0);
    const auto hi = std::min<std::int64_t>(iv.end, static_cast<std::int64_t>(m.rows()));
    for (std::int64_t t = lo; t < hi; ++t) {
      const double mag = plan.magnitude_at(t);
      const auto ts = static_cast<std::size_t>(t);
      for (std::size_t j = 0; j < m.channels(); ++j) {
        const Phasor d = mag * dir(static_cast<Eigen::Index>(j));
        if (d == Phasor{}) continue;
        out.attacked.set(ts, j, m(ts, j) + d);
        out.labels.set(ts, j, iv.class_id);
      }
    }
  }
  return out;
}

void write_labels(std::ostream& out, const LabelTrack& labels) {
  out << "t,channel,class\n";
  for (std::size_t t = 0; t < labels.rows(); ++t) {
    for (std::size_t j = 0; j < labels.channels(); ++j) {
      out << t << ',' << j << ',' << labels(t, j) << '\n';
    }
  }
}

LabelTrack read_labels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,channel,class", 0) != 0) {
    throw ParseError("expected label header 't,channel,class'");
  }
  std::vector<std::array<long long, 3>> rows;
  long long max_t = -1, max_c = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    std::array<long long, 3> r{};
    char c1 = 0, c2 = 0;
    if (!(ss >> r[0] >> c1 >> r[1] >> c2 >> r[2]) || c1 != ',' || c2 != ',' || r[0] < 0 ||
        r[1] < 0) {
      throw ParseError("label line " + std::to_string(line_no) + " is malformed");
    }
    max_t = std::max(max_t, r[0]);
    max_c = std::max(max_c, r[1]);
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError("label file has no rows");
  LabelTrack track(static_cast<std::size_t>(max_t + 1), static_cast<std::size_t>(max_c + 1));
  if (rows.size() != track.rows() * track.channels()) {
    throw ParseError("label file is missing (t, channel) rows");
  }
  for (const auto& r : rows) {
    track.set(static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1]), static_cast<int>(r[2]));
  }
  return track;
}

void save_labels(const LabelTrack& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_labels(out, labels);
}

LabelTrack load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_labels(in);
}

}  // namespace pmufdi
