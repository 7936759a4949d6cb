#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "pmufdi/scenario.hpp"
#include "pmufdi/stream_buffers.hpp"

namespace pmufdi {

/// Subtracts the mean and scales to unit Euclidean norm. A constant sequence
/// maps to all zeros.
std::vector<double> normalize_pattern(std::span<const double> pattern);

/// Cross-correlation sequence of two equal-length real patterns over lags
/// -(N-1)..(N-1): rho[k] = Xi(k - (N-1)), with
/// Xi(m) = sum_i a(i+m) e(i) for m >= 0 and Xi(-m) = Xi_ea(m).
std::vector<double> cross_correlation(std::span<const double> alpha,
                                      std::span<const double> eps,
                                      bool normalize = true);

/// Symmetry of a cross-correlation sequence (odd length >= 3).
/// centered: |sum(negative lags) - sum(positive lags)|.
/// paper:    |sum(lags <= 0) - sum(lags > 0)| (zero lag in the first half).
double similarity(std::span<const double> rho, SimilarityMode mode);

/// similarity(cross_correlation(normalized a, normalized e)) in O(N), with
/// the zero-norm guard: two constant patterns are identical (0), a constant
/// and a non-constant one are infinitely far apart.
double pattern_similarity(std::span<const double> alpha,
                          std::span<const double> eps, SimilarityMode mode);

struct ClassMemory {
  int label = 0;
  std::deque<AttackPattern> patterns;  // oldest first, at most lambda
  std::int64_t created_at = 0;
};

struct Classification {
  int label = 0;
  double upsilon = 0.0;  // best class similarity; NaN when seeding
  bool new_class = false;
};

/// Online ensemble of bounded class memories. A pattern joins the class with
/// the smallest nearest-exemplar similarity if that is within gamma, else it
/// founds a new class. Memories are never dropped, so a class that returns
/// after any absence keeps its original label.
class Ensemble {
 public:
  explicit Ensemble(double gamma,
                    SimilarityMode mode = SimilarityMode::centered,
                    std::size_t memory = 10);

  Classification classify(const AttackPattern& alpha);
  /// classify() folded over `patterns` in order.
  void train(std::span<const AttackPattern> patterns);

  /// Nearest-exemplar similarity of `alpha` to class `index`.
  double class_similarity(std::size_t index, const AttackPattern& alpha) const;

  const std::vector<ClassMemory>& classes() const noexcept { return classes_; }
  double gamma() const noexcept { return gamma_; }
  SimilarityMode mode() const noexcept { return mode_; }
  std::size_t memory() const noexcept { return memory_; }
  /// Number of classes ever created (labels run 1..classes_created()).
  int classes_created() const noexcept { return next_label_ - 1; }
  std::size_t stored_patterns() const noexcept;

  /// Rebuilds an ensemble from serialized state.
  static Ensemble restore(double gamma, SimilarityMode mode,
                          std::size_t memory, std::vector<ClassMemory> classes,
                          int classes_created);

 private:
  void remember(std::size_t index, const AttackPattern& alpha);
  double kernel_similarity(std::size_t index, std::span<const double> normalized,
                           bool constant, const AttackPattern& alpha) const;

  double gamma_;
  SimilarityMode mode_;
  std::size_t memory_;
  int next_label_ = 1;
  std::vector<ClassMemory> classes_;
  // Per stored pattern e: K e with K the lag-sum operator of the similarity
  // (empty for constant patterns), so upsilon = |<normalized alpha, K e>|.
  std::vector<std::deque<std::vector<double>>> kernels_;
};

/// Rand-style pairwise agreement between two labelings: fraction of pairs
/// on which "same label" agrees. 1 when there are fewer than two items.
double pairwise_agreement(std::span<const int> truth,
                          std::span<const int> predicted);

/// Chance-corrected (adjusted) Rand index; 1 for identical partitions, about
/// 0 for unrelated ones. Defined as 1 when both labelings are trivial.
double adjusted_rand_index(std::span<const int> truth,
                           std::span<const int> predicted);

/// Picks gamma from `grid`. With ground truth: maximise held-out adjusted
/// Rand agreement (two interleaved folds, each trained on one and scored on the
/// other); ties resolve to the candidate nearest the midpoint of the tied
/// range; single-class truth returns the largest candidate. Without truth:
/// maximise the silhouette of the partition induced on all patterns.
double calibrate_gamma(std::span<const AttackPattern> patterns,
                       std::optional<std::span<const int>> truth,
                       std::span<const double> grid,
                       SimilarityMode mode = SimilarityMode::centered,
                       std::size_t memory = 10);

}  // namespace pmufdi
