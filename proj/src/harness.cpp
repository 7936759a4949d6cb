#include "pmufdi/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "internal.hpp"
#include "pmufdi/json_io.hpp"

namespace pmufdi {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

DetectionMetrics score_detection(std::span<const std::uint8_t> predicted,
                                 std::span<const std::uint8_t> truth,
                                 int tolerance) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("prediction and truth tracks differ in length");
  }
  if (tolerance < 0) throw std::invalid_argument("tolerance must be >= 0");
  const auto n = static_cast<std::int64_t>(truth.size());
  // Distance to the nearest truth transition (a sample whose label differs
  // from its predecessor).
  std::vector<std::int64_t> edge_dist(truth.size(), n + tolerance + 1);
  std::int64_t last = -(n + tolerance + 1);
  for (std::int64_t t = 0; t < n; ++t) {
    if (t > 0 && (truth[t] != 0) != (truth[t - 1] != 0)) last = t;
    edge_dist[t] = t - last;
  }
  last = 2 * n + tolerance + 1;
  for (std::int64_t t = n - 1; t >= 0; --t) {
    if (t > 0 && (truth[t] != 0) != (truth[t - 1] != 0)) last = t;
    edge_dist[t] = std::min(edge_dist[t], last - t);
  }
  std::vector<std::int64_t> ones(truth.size() + 1, 0);
  for (std::int64_t t = 0; t < n; ++t) ones[t + 1] = ones[t] + (predicted[t] != 0 ? 1 : 0);

  DetectionMetrics m;
  for (std::int64_t t = 0; t < n; ++t) {
    const bool y = truth[t] != 0;
    bool p = predicted[t] != 0;
    if (p != y && edge_dist[t] <= tolerance) {
      const std::int64_t lo = std::max<std::int64_t>(0, t - tolerance);
      const std::int64_t hi = std::min<std::int64_t>(n, t + tolerance + 1);
      const std::int64_t k = ones[hi] - ones[lo];
      if (y ? k > 0 : k < hi - lo) p = y;
    }
    if (p && y) ++m.tp;
    else if (!p && !y) ++m.tn;
    else if (p) ++m.fp;
    else ++m.fn;
  }
  const auto d = [](std::int64_t v) { return static_cast<double>(v); };
  m.accuracy = ratio(d(m.tp + m.tn), d(m.tp + m.tn + m.fp + m.fn));
  m.precision_intrusion = ratio(d(m.tp), d(m.tp + m.fp));
  m.recall_intrusion = ratio(d(m.tp), d(m.tp + m.fn));
  m.precision_safe = ratio(d(m.tn), d(m.tn + m.fn));
  m.recall_safe = ratio(d(m.tn), d(m.tn + m.fp));
  return m;
}

RmseTable score_rmse(const MeasurementMatrix& original,
                     const MeasurementMatrix& retrieved, int interval) {
  if (original.rows() != retrieved.rows() || original.channels() != retrieved.channels()) {
    throw DimensionError("RMSE needs equally shaped matrices");
  }
  if (interval < 1) throw std::invalid_argument("RMSE interval must be >= 1");
  RmseTable table;
  table.interval = interval;
  const std::size_t n = original.rows();
  const std::size_t k = original.channels();
  const auto w = static_cast<std::size_t>(interval);
  for (std::size_t start = 0; start < n; start += w) {
    const std::size_t end = std::min(n, start + w);
    std::vector<double> row(k, 0.0);
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double ss = 0.0;
      for (std::size_t t = start; t < end; ++t) ss += std::norm(original(t, j) - retrieved(t, j));
      row[j] = std::sqrt(ss / static_cast<double>(end - start));
      mean += row[j];
    }
    table.per_channel.push_back(std::move(row));
    table.mean.push_back(mean / static_cast<double>(k));
  }
  return table;
}

ScenarioData generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  GridModel model = make_grid_model(cfg);
  MeasurementMatrix base =
      generate_clean(model, static_cast<std::size_t>(cfg.base_samples), cfg.seed);
  MeasurementMatrix clean = repeat_cycles(base, cfg.cycles);
  std::vector<int> cols;
  if (cfg.noise_sigma > 0.0) cols = add_column_noise(clean, cfg.noise_sigma, cfg.seed);
  return ScenarioData{std::move(model), std::move(clean), std::move(cols)};
}

AttackPlan scenario_plan(const ScenarioConfig& cfg, const GridModel& model) {
  std::vector<int> targets = model.pmu_buses;
  if (targets.empty()) {
    for (int b = 0; b < model.n_states(); ++b) targets.push_back(b);
  }
  return build_plan(model, cfg.attack_strategy, cfg.resolved_schedule(), targets, cfg.seed);
}

std::vector<OriginDetector> calibrate_detectors(const MeasurementMatrix& m,
                                                std::int64_t training_samples,
                                                const DetectorParams& params,
                                                int jobs) {
  if (training_samples < 1 || static_cast<std::size_t>(training_samples) > m.rows()) {
    throw ConfigError("training span exceeds the stream");
  }
  const std::size_t k = m.channels();
  std::vector<std::optional<OriginDetector>> slots(k);
  detail::parallel_for(k, jobs, [&](std::size_t j) {
    std::vector<Phasor> col(static_cast<std::size_t>(training_samples));
    for (std::size_t t = 0; t < col.size(); ++t) col[t] = m(t, j);
    slots[j] = OriginDetector::calibrate(col, params, static_cast<int>(j));
  });
  std::vector<OriginDetector> out;
  out.reserve(k);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::int64_t calibration_end(const ScenarioConfig& cfg) {
  const auto schedule = cfg.resolved_schedule();
  int episodes = 0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i == 0 || schedule[i].start != schedule[i - 1].end) {
      if (++episodes == 2) return schedule[i].start;
    }
  }
  return cfg.stream_length();
}

ClassificationRun classify_events(std::span<const Detection> events,
                                  const ClassifierParams& params,
                                  std::int64_t calibration_end,
                                  const LabelTrack* truth) {
  params.validate();
  ClassificationRun run;
  std::vector<AttackPattern> calib;
  std::vector<int> calib_truth;
  for (const auto& ev : events) {
    if (ev.pattern.t_detect >= calibration_end) break;
    calib.push_back(ev.pattern);
    if (truth) {
      const auto t = static_cast<std::size_t>(ev.pattern.t_detect);
      const auto c = static_cast<std::size_t>(ev.pattern.channel);
      calib_truth.push_back(t < truth->rows() && c < truth->channels() ? (*truth)(t, c) : 0);
    }
  }
  run.calibration_events = calib.size();
  if (params.gamma) {
    run.gamma = *params.gamma;
  } else {
    std::optional<std::span<const int>> labels;
    if (truth) labels = std::span<const int>(calib_truth);
    run.gamma = calibrate_gamma(calib, labels, params.gamma_grid, params.mode,
                                static_cast<std::size_t>(params.memory));
  }
  run.ensemble = Ensemble(run.gamma, params.mode, static_cast<std::size_t>(params.memory));
  run.log.reserve(events.size());
  for (const auto& ev : events) {
    const auto c = run.ensemble.classify(ev.pattern);
    run.log.push_back({ev.pattern.t_detect, ev.pattern.channel, c.label, c.upsilon, c.new_class});
  }
  return run;
}

void write_classification_log(std::ostream& out,
                              std::span<const ClassificationEntry> log) {
  out << "t,channel,label,upsilon,new_class\n";
  for (const auto& e : log) {
    out << e.t << ',' << e.channel << ',' << e.label << ','
        << (std::isnan(e.upsilon) ? std::string("nan") : format_double(e.upsilon)) << ','
        << (e.new_class ? 1 : 0) << '\n';
  }
}

std::vector<ClassificationEntry> read_classification_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,channel,label,upsilon,new_class", 0) != 0) {
    throw ParseError("expected header 't,channel,label,upsilon,new_class'");
  }
  std::vector<ClassificationEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(ss, f[i], ',')) throw ParseError("malformed classification row: " + line);
    }
    try {
      ClassificationEntry e;
      e.t = std::stoll(f[0]);
      e.channel = std::stoi(f[1]);
      e.label = std::stoi(f[2]);
      e.upsilon = f[3] == "nan" ? std::nan("") : std::stod(f[3]);
      e.new_class = f[4] == "1";
      out.push_back(e);
    } catch (const std::logic_error&) {
      throw ParseError("malformed classification row: " + line);
    }
  }
  return out;
}

namespace {

void score_classification(MetricsReport& rep, const LabelTrack& labels,
                          const StreamRetrieval& retrieval,
                          const ClassificationRun& cls) {
  const std::size_t n = labels.rows();
  const std::size_t k = labels.channels();
  rep.gamma = cls.gamma;
  rep.ensemble_classes = cls.ensemble.classes_created();
  rep.classified_events = static_cast<std::int64_t>(cls.log.size());

  // Ensemble label -> truth class by majority over that label's events.
  std::map<int, std::map<int, std::int64_t>> votes;
  for (const auto& e : cls.log) {
    const int truth = labels(static_cast<std::size_t>(e.t), static_cast<std::size_t>(e.channel));
    ++votes[e.label][truth];
  }
  std::map<int, int> mapped;
  for (const auto& [label, counts] : votes) {
    int best = 0;
    std::int64_t best_n = -1;
    for (const auto& [truth, c] : counts) {
      if (c > best_n) {
        best_n = c;
        best = truth;
      }
    }
    mapped[label] = best;
  }

  // Per channel-sample prediction: the mapped label of the channel's latest
  // event while its detector is flagged, clean otherwise.
  std::int64_t attacked = 0;
  std::int64_t correct = 0;
  std::map<int, std::array<std::int64_t, 3>> per;  // class -> tp, fp, fn
  std::map<int, std::int64_t> support;
  std::vector<int> current(k, 0);
  std::size_t next = 0;
  for (std::size_t t = 0; t < n; ++t) {
    while (next < cls.log.size() && static_cast<std::size_t>(cls.log[next].t) <= t) {
      const auto& e = cls.log[next++];
      current[static_cast<std::size_t>(e.channel)] = mapped[e.label];
    }
    for (std::size_t j = 0; j < k; ++j) {
      const int truth = labels(t, j);
      const int pred = retrieval.flags[t * k + j] ? current[j] : 0;
      if (truth != 0) {
        ++attacked;
        ++support[truth];
        if (pred == truth) ++correct;
      }
      if (truth == pred) {
        if (truth != 0) ++per[truth][0];
      } else {
        if (pred != 0) ++per[pred][1];
        if (truth != 0) ++per[truth][2];
      }
    }
  }
  rep.classification_accuracy = ratio(static_cast<double>(correct), static_cast<double>(attacked));
  const auto total = static_cast<double>(n * k);
  for (const auto& [cid, s] : support) {
    const auto& c = per[cid];
    ClassMetrics cm;
    cm.class_id = cid;
    cm.support = s;
    const double tp = static_cast<double>(c[0]);
    const double fp = static_cast<double>(c[1]);
    const double fn = static_cast<double>(c[2]);
    cm.accuracy = ratio(total - fp - fn, total);
    cm.precision = ratio(tp, tp + fp);
    cm.recall = ratio(tp, tp + fn);
    rep.per_class.push_back(cm);
  }
}

void score_retrieval(MetricsReport& rep, const ScenarioConfig& cfg,
                     const MeasurementMatrix& clean, const MeasurementMatrix& attacked,
                     const LabelTrack& labels, const StreamRetrieval& retrieval) {
  auto& r = rep.retrieval;
  const std::size_t n = clean.rows();
  const std::size_t k = clean.channels();
  r.intervals = score_rmse(clean, retrieval.retrieved, cfg.interval_samples);
  r.formula_max_divergence = retrieval.max_formula_divergence;
  r.undefined_direction = retrieval.undefined_direction;
  r.rmse_attacked.assign(k, 0.0);
  r.rmse_retrieved.assign(k, 0.0);
  r.channel_ratio.assign(k, std::nullopt);
  std::vector<std::int64_t> count(k, 0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      if (labels(t, j) == 0) continue;
      ++count[j];
      r.rmse_attacked[j] += std::norm(attacked(t, j) - clean(t, j));
      r.rmse_retrieved[j] += std::norm(retrieval.retrieved(t, j) - clean(t, j));
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j] == 0) continue;
    r.rmse_attacked[j] = std::sqrt(r.rmse_attacked[j] / static_cast<double>(count[j]));
    r.rmse_retrieved[j] = std::sqrt(r.rmse_retrieved[j] / static_cast<double>(count[j]));
    r.channel_ratio[j] = ratio(r.rmse_retrieved[j], r.rmse_attacked[j]);
    if (r.channel_ratio[j]) {
      r.max_channel_ratio = std::max(r.max_channel_ratio.value_or(0.0), *r.channel_ratio[j]);
    }
  }

  // Position of each class interval inside its episode.
  const auto schedule = cfg.resolved_schedule();
  std::vector<std::size_t> position(schedule.size(), 0);
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].start == schedule[i - 1].end) position[i] = position[i - 1] + 1;
  }
  const std::size_t slots =
      schedule.empty() ? 0 : *std::max_element(position.begin(), position.end()) + 1;
  // [slot][channel] -> sums of squared errors and sample counts
  std::vector<std::vector<double>> ss_att(slots, std::vector<double>(k, 0.0));
  std::vector<std::vector<double>> ss_ret(slots, std::vector<double>(k, 0.0));
  std::vector<std::vector<std::int64_t>> cnt(slots, std::vector<std::int64_t>(k, 0));
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto p = position[i];
    const auto hi = std::min<std::int64_t>(schedule[i].end, static_cast<std::int64_t>(n));
    for (std::int64_t t = schedule[i].start; t < hi; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      for (std::size_t j = 0; j < k; ++j) {
        if (labels(ts, j) == 0) continue;
        ++cnt[p][j];
        ss_att[p][j] += std::norm(attacked(ts, j) - clean(ts, j));
        ss_ret[p][j] += std::norm(retrieval.retrieved(ts, j) - clean(ts, j));
      }
    }
  }
  r.episode_interval_ratio.assign(slots, std::nullopt);
  for (std::size_t p = 0; p < slots; ++p) {
    double att = 0.0, ret = 0.0;
    int used = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (cnt[p][j] == 0) continue;
      att += std::sqrt(ss_att[p][j] / static_cast<double>(cnt[p][j]));
      ret += std::sqrt(ss_ret[p][j] / static_cast<double>(cnt[p][j]));
      ++used;
    }
    if (used > 0) r.episode_interval_ratio[p] = ratio(ret, att);
  }
}

}  // namespace

MetricsReport score_run(const ScenarioConfig& cfg, const MeasurementMatrix& clean,
                        const MeasurementMatrix& attacked, const LabelTrack& labels,
                        const StreamRetrieval& retrieval,
                        const ClassificationRun& classification) {
  if (clean.rows() != attacked.rows() || clean.channels() != attacked.channels() ||
      labels.rows() != clean.rows() || labels.channels() != clean.channels() ||
      retrieval.retrieved.rows() != clean.rows() ||
      retrieval.retrieved.channels() != clean.channels()) {
    throw DimensionError("run artifacts disagree in shape");
  }
  MetricsReport rep;
  rep.config = cfg;
  const std::size_t n = clean.rows();
  const std::size_t k = clean.channels();
  std::vector<std::uint8_t> pred(n, 0);
  std::vector<std::uint8_t> truth(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    truth[t] = labels.attacked(t) ? 1 : 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (retrieval.flags[t * k + j]) {
        pred[t] = 1;
        break;
      }
    }
  }
  rep.detection = score_detection(pred, truth, cfg.detector.queue);
  for (std::size_t t = 0; t < n; ++t) {
    if (truth[t]) {
      rep.first_attack_sample = static_cast<std::int64_t>(t);
      break;
    }
    if (pred[t]) ++rep.prefix_false_alarms;
  }
  rep.detection_events = static_cast<std::int64_t>(retrieval.events.size());
  for (const auto& d : retrieval.detectors) rep.degenerate_fits += d.degenerate_fits();
  score_classification(rep, labels, retrieval, classification);
  score_retrieval(rep, cfg, clean, attacked, labels, retrieval);
  return rep;
}

MetricsReport run_scenario(const ScenarioConfig& cfg, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  auto data = generate_scenario(cfg);
  const AttackPlan plan = scenario_plan(cfg, data.model);
  auto injected = inject(data.clean, plan, data.model);
  auto detectors = calibrate_detectors(injected.attacked, cfg.training_samples(),
                                       cfg.detector, options.jobs);
  auto retrieval = retrieve_stream(injected.attacked, std::move(detectors),
                                   RetrievalFormula::arctan, options.jobs);
  auto classification =
      classify_events(retrieval.events, cfg.classifier, calibration_end(cfg), &injected.labels);
  MetricsReport rep = score_run(cfg, data.clean, injected.attacked, injected.labels,
                                retrieval, classification);
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (options.workdir) {
    const std::filesystem::path dir(*options.workdir);
    std::filesystem::create_directories(dir);
    write_json_file((dir / "model.json").string(), json(data.model));
    save_stream(data.clean, dir / "clean.csv");
    write_json_file((dir / "plan.json").string(), json(plan));
    save_stream(injected.attacked, dir / "attacked.csv");
    save_labels(injected.labels, dir / "labels.csv");
    {
      std::ofstream out(dir / "events.jsonl");
      if (!out) throw IoError("cannot write events.jsonl");
      write_events(out, retrieval.events);
    }
    {
      std::ofstream out(dir / "classification.csv");
      if (!out) throw IoError("cannot write classification.csv");
      write_classification_log(out, classification.log);
    }
    write_json_file((dir / "ensemble.json").string(), json(classification.ensemble));
    save_stream(retrieval.retrieved, dir / "attacked.retrieved.csv");
    write_json_file((dir / "report.json").string(), report_json(rep, false));
  }
  return rep;
}

std::vector<MetricsReport> noise_sweep(const ScenarioConfig& cfg,
                                       std::span<const double> sigmas,
                                       const RunOptions& options) {
  for (double s : sigmas) {
    if (!(s >= 0.0 && s <= 0.25)) {
      throw ConfigError("sweep sigma " + format_double(s) + " outside [0, 0.25]");
    }
  }
  std::vector<MetricsReport> out;
  out.reserve(sigmas.size());
  for (double s : sigmas) {
    ScenarioConfig c = cfg;
    c.noise_sigma = s;
    RunOptions o = options;
    if (o.workdir) {
      o.workdir = (std::filesystem::path(*o.workdir) / ("sigma_" + format_double(s))).string();
    }
    out.push_back(run_scenario(c, o));
  }
  return out;
}

std::string metrics_csv(std::span<const MetricsReport> reports, bool header) {
  std::ostringstream out;
  if (header) out << "scenario,strategy,sigma,seed,metric,value\n";
  for (const auto& r : reports) {
    const std::string prefix = r.config.name + ',' + std::to_string(r.config.attack_strategy) +
                               ',' + format_double(r.config.noise_sigma) + ',' +
                               std::to_string(r.config.seed) + ',';
    auto row = [&](const std::string& metric, std::optional<double> v) {
      out << prefix << metric << ',' << (v ? format_double(*v) : std::string("nan")) << '\n';
    };
    const auto& d = r.detection;
    row("accuracy", d.accuracy);
    row("precision_safe", d.precision_safe);
    row("recall_safe", d.recall_safe);
    row("precision_intrusion", d.precision_intrusion);
    row("recall_intrusion", d.recall_intrusion);
    row("prefix_false_alarms", static_cast<double>(r.prefix_false_alarms));
    row("detection_events", static_cast<double>(r.detection_events));
    row("gamma", r.gamma);
    row("ensemble_classes", static_cast<double>(r.ensemble_classes));
    row("classification_accuracy", r.classification_accuracy);
    for (const auto& c : r.per_class) {
      const std::string tag = "class" + std::to_string(c.class_id) + "_";
      row(tag + "accuracy", c.accuracy);
      row(tag + "precision", c.precision);
      row(tag + "recall", c.recall);
    }
    row("max_channel_rmse_ratio", r.retrieval.max_channel_ratio);
    for (std::size_t i = 0; i < r.retrieval.episode_interval_ratio.size(); ++i) {
      row("interval" + std::to_string(i + 1) + "_rmse_ratio", r.retrieval.episode_interval_ratio[i]);
    }
    row("formula_max_divergence", r.retrieval.formula_max_divergence);
    row("runtime_seconds", r.runtime_seconds);
  }
  return out.str();
}

std::vector<std::string> check_floors(const MetricsReport& report) {
  std::vector<std::string> failed;
  const auto& d = report.detection;
  if (d.recall_intrusion && *d.recall_intrusion < 0.9) {
    failed.push_back("intrusion recall " + format_double(*d.recall_intrusion) + " < 0.9");
  }
  if (d.precision_safe && *d.precision_safe < 0.9) {
    failed.push_back("safe precision " + format_double(*d.precision_safe) + " < 0.9");
  }
  if (report.prefix_false_alarms != 0) {
    failed.push_back(std::to_string(report.prefix_false_alarms) +
                     " false alarms before the first attack");
  }
  if (report.runtime_seconds > 5.0) {
    failed.push_back("runtime " + format_double(report.runtime_seconds) + " s > 5 s");
  }
  return failed;
}

}  // namespace pmufdi
