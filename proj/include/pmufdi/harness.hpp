#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmufdi/attack.hpp"
#include "pmufdi/detector.hpp"
#include "pmufdi/grid_model.hpp"
#include "pmufdi/icon.hpp"
#include "pmufdi/measurement.hpp"
#include "pmufdi/retrieval.hpp"
#include "pmufdi/scenario.hpp"

namespace pmufdi {

/// Binary per-sample confusion counts; rates are unset when their
/// denominator is zero.
struct DetectionMetrics {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::optional<double> accuracy;
  std::optional<double> precision_safe, recall_safe;
  std::optional<double> precision_intrusion, recall_intrusion;
};

/// Per-sample scoring of predicted vs true intrusion tracks. Within
/// `tolerance` samples of a true transition, a prediction that matches the
/// truth anywhere in [t - tolerance, t + tolerance] counts as correct.
DetectionMetrics score_detection(std::span<const std::uint8_t> predicted,
                                 std::span<const std::uint8_t> truth,
                                 int tolerance);

/// Complex RMSE per channel over consecutive `interval` sample blocks, plus
/// the channel average of each block. The last block may be short.
struct RmseTable {
  int interval = 150;
  std::vector<std::vector<double>> per_channel;  // [block][channel]
  std::vector<double> mean;                      // [block]
};

RmseTable score_rmse(const MeasurementMatrix& original,
                     const MeasurementMatrix& retrieved, int interval = 150);

struct ClassMetrics {
  int class_id = 0;
  std::int64_t support = 0;
  std::optional<double> accuracy, precision, recall;
};

struct RetrievalMetrics {
  RmseTable intervals;
  // Per channel, over that channel's attacked samples.
  std::vector<double> rmse_attacked;
  std::vector<double> rmse_retrieved;
  std::vector<std::optional<double>> channel_ratio;
  std::optional<double> max_channel_ratio;
  // RMSE ratio by position of the class interval inside its episode (1..4),
  // channel-averaged over all episodes.
  std::vector<std::optional<double>> episode_interval_ratio;
  double formula_max_divergence = 0.0;
  std::int64_t undefined_direction = 0;
};

struct MetricsReport {
  ScenarioConfig config;
  DetectionMetrics detection;
  std::int64_t prefix_false_alarms = 0;  // flagged samples before first onset
  std::int64_t first_attack_sample = -1;
  std::int64_t detection_events = 0;
  std::int64_t degenerate_fits = 0;

  double gamma = 0.0;
  int ensemble_classes = 0;
  std::int64_t classified_events = 0;
  std::optional<double> classification_accuracy;
  std::vector<ClassMetrics> per_class;

  RetrievalMetrics retrieval;
  double runtime_seconds = 0.0;
};

struct RunOptions {
  int jobs = 1;
  // When set, intermediate artifacts of the run are written here.
  std::optional<std::string> workdir;
};

// Pipeline stages. run_scenario chains them; the CLI runs them one by one on
// intermediate files and gets the same artifacts.

struct ScenarioData {
  GridModel model;
  MeasurementMatrix clean;         // reference stream (noise included)
  std::vector<int> noisy_columns;  // columns that received sweep noise
};

/// Model, clean stream tiled over cfg.cycles and sweep noise on half the
/// columns.
ScenarioData generate_scenario(const ScenarioConfig& cfg);

/// Attack plan for the scenario's schedule, targeting every PMU bus.
AttackPlan scenario_plan(const ScenarioConfig& cfg, const GridModel& model);

/// One detector per channel, calibrated on the first `training_samples` rows.
std::vector<OriginDetector> calibrate_detectors(const MeasurementMatrix& m,
                                                std::int64_t training_samples,
                                                const DetectorParams& params,
                                                int jobs = 1);

/// First sample of the second attack episode (end of the classifier's
/// calibration span); the stream length if there is no second episode.
std::int64_t calibration_end(const ScenarioConfig& cfg);

struct ClassificationEntry {
  std::int64_t t = 0;
  int channel = 0;
  int label = 0;
  double upsilon = 0.0;
  bool new_class = false;
};

struct ClassificationRun {
  double gamma = 0.0;
  Ensemble ensemble{1.0};
  std::vector<ClassificationEntry> log;  // one per event, in event order
  std::size_t calibration_events = 0;
};

/// Calibrates gamma on the events detected before `calibration_end` (against
/// `truth` when given, unless params.gamma is set), then classifies every
/// event online in order.
ClassificationRun classify_events(std::span<const Detection> events,
                                  const ClassifierParams& params,
                                  std::int64_t calibration_end,
                                  const LabelTrack* truth = nullptr);

/// CSV `t,channel,label,upsilon,new_class`.
void write_classification_log(std::ostream& out,
                              std::span<const ClassificationEntry> log);
std::vector<ClassificationEntry> read_classification_log(std::istream& in);

/// Scores a finished run against the ground truth.
MetricsReport score_run(const ScenarioConfig& cfg,
                        const MeasurementMatrix& clean,
                        const MeasurementMatrix& attacked,
                        const LabelTrack& labels,
                        const StreamRetrieval& retrieval,
                        const ClassificationRun& classification);

/// generate -> attack -> detect -> classify -> retrieve -> score.
MetricsReport run_scenario(const ScenarioConfig& cfg,
                           const RunOptions& options = {});

/// One run_scenario per sigma (each in [0, 0.25]).
std::vector<MetricsReport> noise_sweep(const ScenarioConfig& cfg,
                                       std::span<const double> sigmas,
                                       const RunOptions& options = {});

/// Plot-ready rows `scenario,strategy,sigma,seed,metric,value`.
std::string metrics_csv(std::span<const MetricsReport> reports,
                        bool header = true);

/// Floors checked by `--check`: intrusion recall and safe precision >= 0.9,
/// no prefix false alarms, runtime <= 5 s. Returns the violated checks.
std::vector<std::string> check_floors(const MetricsReport& report);

}  // namespace pmufdi
