#include "pmufdi/icon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "pmufdi/errors.hpp"

namespace pmufdi {

namespace {

// Normalised copy; `constant` is set when the pattern carries no shape.
std::vector<double> normalize(std::span<const double> x, bool& constant) {
  std::vector<double> out(x.begin(), x.end());
  if (out.empty()) {
    constant = true;
    return out;
  }
  double mean = 0.0;
  double peak = 0.0;
  for (double v : out) {
    if (!std::isfinite(v)) throw NonFiniteError("pattern contains a non-finite value");
    mean += v;
    peak = std::max(peak, std::abs(v));
  }
  mean /= static_cast<double>(out.size());
  double ss = 0.0;
  for (double& v : out) {
    v -= mean;
    ss += v * v;
  }
  const double norm = std::sqrt(ss);
  constant = !(norm > 1e-12 * peak) || norm == 0.0;
  if (constant) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) v /= norm;
  return out;
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("pattern lengths differ (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

}  // namespace

std::vector<double> normalize_pattern(std::span<const double> pattern) {
  bool constant = false;
  return normalize(pattern, constant);
}

std::vector<double> cross_correlation(std::span<const double> alpha,
                                      std::span<const double> eps,
                                      bool normalize_first) {
  require_same_length(alpha.size(), eps.size());
  if (alpha.empty()) throw DimensionError("patterns must not be empty");
  std::vector<double> a(alpha.begin(), alpha.end());
  std::vector<double> e(eps.begin(), eps.end());
  if (normalize_first) {
    a = normalize_pattern(alpha);
    e = normalize_pattern(eps);
  }
  const std::size_t n = a.size();
  std::vector<double> rho(2 * n - 1, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    double pos = 0.0;
    double neg = 0.0;
    for (std::size_t i = 0; i + m < n; ++i) {
      pos += a[i + m] * e[i];
      neg += e[i + m] * a[i];
    }
    rho[n - 1 + m] = pos;
    if (m > 0) rho[n - 1 - m] = neg;
  }
  return rho;
}

double similarity(std::span<const double> rho, SimilarityMode mode) {
  if (rho.size() < 3 || rho.size() % 2 == 0) {
    throw std::invalid_argument("correlation sequence must have odd length >= 3");
  }
  const std::size_t mid = rho.size() / 2;
  double diff = mode == SimilarityMode::paper ? rho[mid] : 0.0;
  for (std::size_t k = 1; k <= mid; ++k) diff += rho[mid - k] - rho[mid + k];
  return std::abs(diff);
}

double pattern_similarity(std::span<const double> alpha,
                          std::span<const double> eps, SimilarityMode mode) {
  require_same_length(alpha.size(), eps.size());
  bool ca = false;
  bool ce = false;
  const auto a = normalize(alpha, ca);
  const auto e = normalize(eps, ce);
  if (ca && ce) return 0.0;
  if (ca || ce) return std::numeric_limits<double>::infinity();
  // Positive lags sum a_j e_i over j > i, negative lags e_j a_i over j > i.
  double pos = 0.0;
  double neg = 0.0;
  double prefix_a = 0.0;
  double prefix_e = 0.0;
  double zero = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    pos += a[j] * prefix_e;
    neg += e[j] * prefix_a;
    prefix_a += a[j];
    prefix_e += e[j];
    zero += a[j] * e[j];
  }
  if (mode == SimilarityMode::paper) neg += zero;
  return std::abs(neg - pos);
}

Ensemble::Ensemble(double gamma, SimilarityMode mode, std::size_t memory)
    : gamma_(gamma), mode_(mode), memory_(memory) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("gamma must be finite and >= 0");
  }
  if (memory == 0) throw std::invalid_argument("class memory must be >= 1");
}

namespace {

// w = K e where upsilon(a, e) = |<a, w>| for normalised a, e.
std::vector<double> similarity_kernel(std::span<const double> e, SimilarityMode mode) {
  const std::size_t n = e.size();
  std::vector<double> w(n);
  double before = 0.0;
  double after = 0.0;
  for (double v : e) after += v;
  for (std::size_t i = 0; i < n; ++i) {
    after -= e[i];
    w[i] = after - before + (mode == SimilarityMode::paper ? e[i] : 0.0);
    before += e[i];
  }
  return w;
}

}  // namespace

void Ensemble::remember(std::size_t index, const AttackPattern& alpha) {
  auto& mem = classes_[index];
  auto& ker = kernels_[index];
  if (mem.patterns.size() >= memory_) {
    mem.patterns.pop_front();
    ker.pop_front();
  }
  mem.patterns.push_back(alpha);
  bool constant = false;
  const auto e = normalize(alpha.sequence, constant);
  ker.push_back(constant ? std::vector<double>{} : similarity_kernel(e, mode_));
}

double Ensemble::kernel_similarity(std::size_t index, std::span<const double> a,
                                   bool constant, const AttackPattern& alpha) const {
  const auto& mem = classes_[index];
  const auto& ker = kernels_[index];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < ker.size(); ++p) {
    const auto& w = ker[p];
    double v = 0.0;
    if (w.empty() || constant) {
      v = (w.empty() && constant) ? 0.0 : std::numeric_limits<double>::infinity();
    } else if (mode_ == SimilarityMode::centered && mem.patterns[p].sequence == alpha.sequence) {
      v = 0.0;
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) v += a[i] * w[i];
      v = std::abs(v);
    }
    best = std::min(best, v);
  }
  return best;
}

double Ensemble::class_similarity(std::size_t index, const AttackPattern& alpha) const {
  if (index >= classes_.size()) throw std::out_of_range("class index out of range");
  bool constant = false;
  const auto a = normalize(alpha.sequence, constant);
  if (!classes_[index].patterns.empty() &&
      a.size() != classes_[index].patterns.front().sequence.size()) {
    throw DimensionError("attack pattern length differs from stored patterns");
  }
  return kernel_similarity(index, a, constant, alpha);
}

Classification Ensemble::classify(const AttackPattern& alpha) {
  if (alpha.sequence.empty()) throw DimensionError("attack pattern is empty");
  auto found = [&](double upsilon) {
    classes_.push_back(ClassMemory{next_label_++, {}, alpha.t_detect});
    kernels_.emplace_back();
    remember(classes_.size() - 1, alpha);
    return Classification{classes_.back().label, upsilon, true};
  };
  if (classes_.empty()) return found(std::numeric_limits<double>::quiet_NaN());
  if (alpha.sequence.size() != classes_.front().patterns.front().sequence.size()) {
    throw DimensionError("attack pattern length differs from stored patterns");
  }
  bool constant = false;
  const auto a = normalize(alpha.sequence, constant);
  std::size_t best = 0;
  double upsilon = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const double v = kernel_similarity(i, a, constant, alpha);
    if (v < upsilon) {
      upsilon = v;
      best = i;
    }
  }
  if (!(upsilon <= gamma_)) return found(upsilon);
  remember(best, alpha);
  return {classes_[best].label, upsilon, false};
}

void Ensemble::train(std::span<const AttackPattern> patterns) {
  for (const auto& p : patterns) classify(p);
}

std::size_t Ensemble::stored_patterns() const noexcept {
  std::size_t n = 0;
  for (const auto& c : classes_) n += c.patterns.size();
  return n;
}

Ensemble Ensemble::restore(double gamma, SimilarityMode mode, std::size_t memory,
                           std::vector<ClassMemory> classes, int classes_created) {
  Ensemble e(gamma, mode, memory);
  int max_label = 0;
  std::vector<int> seen;
  for (const auto& c : classes) {
    if (c.patterns.empty() || c.patterns.size() > memory) {
      throw std::invalid_argument("class memory size outside [1, lambda]");
    }
    if (c.label < 1 || std::find(seen.begin(), seen.end(), c.label) != seen.end()) {
      throw std::invalid_argument("class labels must be unique positive integers");
    }
    seen.push_back(c.label);
    max_label = std::max(max_label, c.label);
  }
  if (classes_created < max_label) {
    throw std::invalid_argument("classes_created is smaller than the largest label");
  }
  for (auto& c : classes) {
    e.classes_.push_back(ClassMemory{c.label, {}, c.created_at});
    e.kernels_.emplace_back();
    for (const auto& p : c.patterns) e.remember(e.classes_.size() - 1, p);
  }
  e.next_label_ = classes_created + 1;
  return e;
}

double pairwise_agreement(std::span<const int> truth, std::span<const int> predicted) {
  require_same_length(truth.size(), predicted.size());
  const auto n = static_cast<double>(truth.size());
  if (truth.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    joint[{truth[i], predicted[i]}] += 1.0;
    rows[truth[i]] += 1.0;
    cols[predicted[i]] += 1.0;
  }
  auto pairs = [](double k) { return k * (k - 1.0) / 2.0; };
  double both = 0.0, same_truth = 0.0, same_pred = 0.0;
  for (const auto& [k, v] : joint) both += pairs(v);
  for (const auto& [k, v] : rows) same_truth += pairs(v);
  for (const auto& [k, v] : cols) same_pred += pairs(v);
  const double total = pairs(n);
  return (total + 2.0 * both - same_truth - same_pred) / total;
}

double adjusted_rand_index(std::span<const int> truth, std::span<const int> predicted) {
  require_same_length(truth.size(), predicted.size());
  if (truth.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    joint[{truth[i], predicted[i]}] += 1.0;
    rows[truth[i]] += 1.0;
    cols[predicted[i]] += 1.0;
  }
  auto pairs = [](double k) { return k * (k - 1.0) / 2.0; };
  double index = 0.0, a = 0.0, b = 0.0;
  for (const auto& [k, v] : joint) index += pairs(v);
  for (const auto& [k, v] : rows) a += pairs(v);
  for (const auto& [k, v] : cols) b += pairs(v);
  const double total = pairs(static_cast<double>(truth.size()));
  const double expected = a * b / total;
  const double max_index = 0.5 * (a + b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

namespace {

double held_out_agreement(std::span<const AttackPattern> patterns,
                          std::span<const int> truth, double gamma,
                          SimilarityMode mode, std::size_t memory) {
  // Training-fold labels plus held-out labels, scored together.
  double score = 0.0;
  for (std::size_t fold = 0; fold < 2; ++fold) {
    Ensemble e(gamma, mode, memory);
    std::vector<int> all_truth;
    std::vector<int> all_pred;
    for (std::size_t i = fold; i < patterns.size(); i += 2) {
      all_truth.push_back(truth[i]);
      all_pred.push_back(e.classify(patterns[i]).label);
    }
    for (std::size_t i = 1 - fold; i < patterns.size(); i += 2) {
      all_truth.push_back(truth[i]);
      all_pred.push_back(e.classify(patterns[i]).label);
    }
    score += adjusted_rand_index(all_truth, all_pred);
  }
  return score / 2.0;
}

double silhouette(std::span<const AttackPattern> patterns, double gamma,
                  SimilarityMode mode, std::size_t memory) {
  Ensemble e(gamma, mode, memory);
  std::vector<int> label(patterns.size());
  for (std::size_t i = 0; i < patterns.size(); ++i) label[i] = e.classify(patterns[i]).label;
  const int k = e.classes_created();
  const auto n = patterns.size();
  if (k < 2 || static_cast<std::size_t>(k) >= n) return 0.0;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.5 * (pattern_similarity(patterns[i].sequence, patterns[j].sequence, mode) +
                        pattern_similarity(patterns[j].sequence, patterns[i].sequence, mode));
      if (!std::isfinite(d)) d = 1e3;
      dist[i * n + j] = dist[j * n + i] = d;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& slot = acc[label[j]];
      slot.first += dist[i * n + j];
      slot.second += 1;
    }
    const auto own = acc.find(label[i]);
    if (own == acc.end()) continue;  // singleton cluster scores 0
    const double a = own->second.first / own->second.second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [lab, s] : acc) {
      if (lab != label[i]) b = std::min(b, s.first / s.second);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

}  // namespace

double calibrate_gamma(std::span<const AttackPattern> patterns,
                       std::optional<std::span<const int>> truth,
                       std::span<const double> grid, SimilarityMode mode,
                       std::size_t memory) {
  if (grid.empty()) throw ConfigError("gamma grid is empty");
  if (grid.size() == 1) return grid.front();
  if (patterns.size() < 2) return 1.0;
  if (truth) {
    require_same_length(truth->size(), patterns.size());
    if (std::all_of(truth->begin(), truth->end(),
                    [&](int v) { return v == truth->front(); })) {
      return *std::max_element(grid.begin(), grid.end());
    }
  }
  std::vector<double> scores(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    scores[g] = truth ? held_out_agreement(patterns, *truth, grid[g], mode, memory)
                      : silhouette(patterns, grid[g], mode, memory);
  }
  const double best = *std::max_element(scores.begin(), scores.end());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (scores[g] >= best - 1e-12) {
      lo = std::min(lo, grid[g]);
      hi = std::max(hi, grid[g]);
    }
  }
  const double mid = 0.5 * (lo + hi);
  double pick = grid.front();
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (scores[g] < best - 1e-12) continue;
    if (std::abs(grid[g] - mid) < gap) {
      gap = std::abs(grid[g] - mid);
      pick = grid[g];
    }
  }
  return pick;
}

}  // namespace pmufdi
