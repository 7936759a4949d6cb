#include "pmufdi/json_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace pmufdi {

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

json phasor_json(Phasor z) { return json::array({z.real(), z.imag()}); }

Phasor phasor_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("phasor must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

void apply_detector(const json& j, DetectorParams& v) {
  reject_unknown(j, {"window", "queue", "margin", "delta_floor"}, "detector");
  read_if(j, "window", v.window);
  read_if(j, "queue", v.queue);
  read_if(j, "margin", v.margin);
  read_if(j, "delta_floor", v.delta_floor);
}

void apply_classifier(const json& j, ClassifierParams& v) {
  reject_unknown(j, {"memory", "gamma", "mode", "gamma_grid"}, "classifier");
  read_if(j, "memory", v.memory);
  if (auto it = j.find("gamma"); it != j.end()) {
    if (it->is_null()) v.gamma.reset();
    else v.gamma = it->get<double>();
  }
  if (auto it = j.find("mode"); it != j.end()) {
    v.mode = similarity_mode_from_string(it->get<std::string>());
  }
  read_if(j, "gamma_grid", v.gamma_grid);
}

void apply_scenario(const json& j, ScenarioConfig& v) {
  reject_unknown(j,
                 {"name", "n_pmus", "pmus", "attack_strategy", "attack_classes", "cycles",
                  "noise_sigma", "seed", "rate_hz", "base_samples", "training_cycles",
                  "first_attack_cycle", "attack_every", "interval_samples",
                  "base_frequency_hz", "detune", "slip_fraction", "slip_sample",
                  "measurement_noise", "detector", "classifier"},
                 "scenario config");
  read_if(j, "name", v.name);
  read_if(j, "pmus", v.pmus);
  if (auto it = j.find("n_pmus"); it != j.end()) {
    if (it->get<int>() != v.n_pmus()) {
      throw ConfigError("n_pmus does not match the length of pmus");
    }
  }
  read_if(j, "attack_strategy", v.attack_strategy);
  if (auto it = j.find("attack_classes"); it != j.end()) {
    if (it->is_null()) v.attack_classes.reset();
    else v.attack_classes = it->get<std::vector<ClassInterval>>();
  }
  read_if(j, "cycles", v.cycles);
  read_if(j, "noise_sigma", v.noise_sigma);
  read_if(j, "seed", v.seed);
  read_if(j, "rate_hz", v.rate_hz);
  read_if(j, "base_samples", v.base_samples);
  read_if(j, "training_cycles", v.training_cycles);
  read_if(j, "first_attack_cycle", v.first_attack_cycle);
  read_if(j, "attack_every", v.attack_every);
  read_if(j, "interval_samples", v.interval_samples);
  read_if(j, "base_frequency_hz", v.base_frequency_hz);
  read_if(j, "detune", v.detune);
  read_if(j, "slip_fraction", v.slip_fraction);
  read_if(j, "slip_sample", v.slip_sample);
  read_if(j, "measurement_noise", v.measurement_noise);
  if (auto it = j.find("detector"); it != j.end()) apply_detector(*it, v.detector);
  if (auto it = j.find("classifier"); it != j.end()) apply_classifier(*it, v.classifier);
}

// Wraps nlohmann type errors into the library's config error.
template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON value: ") + e.what());
  }
}

}  // namespace

void to_json(json& j, const PmuChannels& v) {
  j = json{{"voltage", v.voltage}, {"current", v.current}};
}
void from_json(const json& j, PmuChannels& v) {
  reject_unknown(j, {"voltage", "current"}, "pmu");
  read_if(j, "voltage", v.voltage);
  read_if(j, "current", v.current);
}

void to_json(json& j, const ClassInterval& v) {
  j = json{{"class_id", v.class_id}, {"start", v.start}, {"end", v.end}};
}
void from_json(const json& j, ClassInterval& v) {
  reject_unknown(j, {"class_id", "start", "end"}, "attack class interval");
  v.class_id = j.at("class_id").get<int>();
  v.start = j.at("start").get<std::int64_t>();
  v.end = j.at("end").get<std::int64_t>();
}

void to_json(json& j, const DetectorParams& v) {
  j = json{{"window", v.window}, {"queue", v.queue}, {"margin", v.margin},
           {"delta_floor", v.delta_floor}};
}
void from_json(const json& j, DetectorParams& v) { apply_detector(j, v); }

void to_json(json& j, const ClassifierParams& v) {
  j = json{{"memory", v.memory},
           {"gamma", v.gamma ? json(*v.gamma) : json(nullptr)},
           {"mode", std::string(to_string(v.mode))},
           {"gamma_grid", v.gamma_grid}};
}
void from_json(const json& j, ClassifierParams& v) { apply_classifier(j, v); }

void to_json(json& j, const ScenarioConfig& v) {
  j = json{{"name", v.name},
           {"n_pmus", v.n_pmus()},
           {"pmus", v.pmus},
           {"attack_strategy", v.attack_strategy},
           {"attack_classes", v.attack_classes ? json(*v.attack_classes) : json(nullptr)},
           {"cycles", v.cycles},
           {"noise_sigma", v.noise_sigma},
           {"seed", v.seed},
           {"rate_hz", v.rate_hz},
           {"base_samples", v.base_samples},
           {"training_cycles", v.training_cycles},
           {"first_attack_cycle", v.first_attack_cycle},
           {"attack_every", v.attack_every},
           {"interval_samples", v.interval_samples},
           {"base_frequency_hz", v.base_frequency_hz},
           {"detune", v.detune},
           {"slip_fraction", v.slip_fraction},
           {"slip_sample", v.slip_sample},
           {"measurement_noise", v.measurement_noise},
           {"detector", v.detector},
           {"classifier", v.classifier}};
}
void from_json(const json& j, ScenarioConfig& v) { apply_scenario(j, v); }

ScenarioConfig merge_config(const ScenarioConfig& base, const json& overlay) {
  ScenarioConfig out = base;
  guarded([&] {
    apply_scenario(overlay, out);
    return 0;
  });
  return out;
}

void to_json(json& j, const GridModel& v) {
  std::vector<double> h;
  h.reserve(static_cast<std::size_t>(v.h().size()));
  for (int r = 0; r < v.n_meas(); ++r) {
    for (int c = 0; c < v.n_states(); ++c) h.push_back(v.h()(r, c));
  }
  json state = json::array();
  for (Eigen::Index i = 0; i < v.base_state().size(); ++i) state.push_back(phasor_json(v.base_state()(i)));
  json channels = json::array();
  for (const auto& m : v.meta()) {
    channels.push_back({{"pmu", m.pmu_id}, {"kind", std::string(to_string(m.kind))}});
  }
  const auto& wf = v.waveform();
  j = json{{"n_meas", v.n_meas()},
           {"n_states", v.n_states()},
           {"h", h},
           {"base_state", state},
           {"waveform",
            {{"rate_hz", wf.rate_hz},
             {"frequency_hz", wf.frequency_hz},
             {"slip_fraction", wf.slip_fraction},
             {"slip_sample", wf.slip_sample}}},
           {"channels", channels},
           {"noise_std", v.noise_std()},
           {"seed", v.seed()},
           {"pmu_buses", v.pmu_buses}};
}

GridModel grid_model_from_json(const json& j) {
  return guarded([&] {
    const int rows = j.at("n_meas").get<int>();
    const int cols = j.at("n_states").get<int>();
    const auto flat = j.at("h").get<std::vector<double>>();
    if (rows < 1 || cols < 1 || flat.size() != static_cast<std::size_t>(rows) * cols) {
      throw ParseError("grid model: h does not match n_meas x n_states");
    }
    Eigen::MatrixXd h(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) h(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
    }
    const auto& st = j.at("base_state");
    Eigen::VectorXcd state(static_cast<Eigen::Index>(st.size()));
    for (std::size_t i = 0; i < st.size(); ++i) state(static_cast<Eigen::Index>(i)) = phasor_from(st[i]);
    Waveform wf;
    const auto& w = j.at("waveform");
    wf.rate_hz = w.at("rate_hz").get<double>();
    wf.frequency_hz = w.at("frequency_hz").get<std::vector<double>>();
    wf.slip_fraction = w.at("slip_fraction").get<double>();
    wf.slip_sample = w.at("slip_sample").get<std::int64_t>();
    std::vector<ChannelMeta> meta;
    for (const auto& c : j.at("channels")) {
      meta.push_back({c.at("pmu").get<int>(),
                      channel_kind_from_string(c.at("kind").get<std::string>())});
    }
    GridModel model(std::move(h), std::move(state), std::move(wf), std::move(meta),
                    j.at("noise_std").get<double>(), j.at("seed").get<std::uint64_t>());
    read_if(j, "pmu_buses", model.pmu_buses);
    return model;
  });
}

void to_json(json& j, const AttackPlan& v) {
  json phases = json::array();
  for (const auto& p : v.target_phase) phases.push_back(phasor_json(p));
  j = json{{"strategy", v.strategy}, {"classes", v.classes},   {"targets", v.targets},
           {"target_phase", phases}, {"n_states", v.n_states}, {"seed", v.seed},
           {"carried", v.carried}};
}

AttackPlan attack_plan_from_json(const json& j) {
  return guarded([&] {
    AttackPlan p;
    p.strategy = j.at("strategy").get<int>();
    p.classes = j.at("classes").get<std::vector<ClassInterval>>();
    p.targets = j.at("targets").get<std::vector<int>>();
    for (const auto& z : j.at("target_phase")) p.target_phase.push_back(phasor_from(z));
    p.n_states = j.at("n_states").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.carried = j.at("carried").get<std::vector<double>>();
    if (p.targets.size() != p.target_phase.size() || p.carried.size() != p.classes.size()) {
      throw ParseError("attack plan arrays disagree in length");
    }
    for (int t : p.targets) {
      if (t < 0 || t >= p.n_states) throw ParseError("attack plan target out of range");
    }
    return p;
  });
}

void to_json(json& j, const Detection& v) {
  j = json{{"t", v.pattern.t_detect},
           {"channel", v.pattern.channel},
           {"d_t", v.deviation},
           {"delta", v.delta},
           {"pattern", v.pattern.sequence}};
}

void from_json(const json& j, Detection& v) {
  v.pattern.t_detect = j.at("t").get<std::int64_t>();
  v.pattern.channel = j.at("channel").get<int>();
  v.deviation = j.at("d_t").get<double>();
  v.delta = j.at("delta").get<double>();
  v.pattern.sequence = j.at("pattern").get<std::vector<double>>();
}

void write_events(std::ostream& out, std::span<const Detection> events) {
  for (const auto& e : events) out << json(e).dump() << '\n';
}

std::vector<Detection> read_events(std::istream& in) {
  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<Detection>());
    } catch (const json::exception& e) {
      throw ParseError("event line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void to_json(json& j, const Ensemble& v) {
  json classes = json::array();
  for (const auto& c : v.classes()) {
    json patterns = json::array();
    for (const auto& p : c.patterns) {
      patterns.push_back({{"t", p.t_detect}, {"channel", p.channel}, {"sequence", p.sequence}});
    }
    classes.push_back({{"label", c.label}, {"created_at", c.created_at}, {"patterns", patterns}});
  }
  j = json{{"gamma", v.gamma()},
           {"mode", std::string(to_string(v.mode()))},
           {"memory", v.memory()},
           {"classes_created", v.classes_created()},
           {"classes", classes}};
}

Ensemble ensemble_from_json(const json& j) {
  return guarded([&] {
    std::vector<ClassMemory> classes;
    for (const auto& c : j.at("classes")) {
      ClassMemory m;
      m.label = c.at("label").get<int>();
      m.created_at = c.at("created_at").get<std::int64_t>();
      for (const auto& p : c.at("patterns")) {
        m.patterns.push_back(AttackPattern{p.at("sequence").get<std::vector<double>>(),
                                           p.at("channel").get<int>(),
                                           p.at("t").get<std::int64_t>()});
      }
      classes.push_back(std::move(m));
    }
    return Ensemble::restore(j.at("gamma").get<double>(),
                             similarity_mode_from_string(j.at("mode").get<std::string>()),
                             j.at("memory").get<std::size_t>(), std::move(classes),
                             j.at("classes_created").get<int>());
  });
}

void to_json(json& j, const DetectionMetrics& v) {
  j = json{{"tp", v.tp},
           {"tn", v.tn},
           {"fp", v.fp},
           {"fn", v.fn},
           {"accuracy", optional_json(v.accuracy)},
           {"precision_safe", optional_json(v.precision_safe)},
           {"recall_safe", optional_json(v.recall_safe)},
           {"precision_intrusion", optional_json(v.precision_intrusion)},
           {"recall_intrusion", optional_json(v.recall_intrusion)}};
}

void to_json(json& j, const RmseTable& v) {
  j = json{{"interval", v.interval}, {"mean", v.mean}, {"per_channel", v.per_channel}};
}

void to_json(json& j, const MetricsReport& v) { j = report_json(v, true); }

json report_json(const MetricsReport& r, bool include_runtime) {
  json per_class = json::array();
  for (const auto& c : r.per_class) {
    per_class.push_back({{"class_id", c.class_id},
                         {"support", c.support},
                         {"accuracy", optional_json(c.accuracy)},
                         {"precision", optional_json(c.precision)},
                         {"recall", optional_json(c.recall)}});
  }
  json ratios = json::array();
  for (const auto& x : r.retrieval.channel_ratio) ratios.push_back(optional_json(x));
  json episode = json::array();
  for (const auto& x : r.retrieval.episode_interval_ratio) episode.push_back(optional_json(x));
  json j{{"config", r.config},
         {"detection", r.detection},
         {"prefix_false_alarms", r.prefix_false_alarms},
         {"first_attack_sample", r.first_attack_sample},
         {"detection_events", r.detection_events},
         {"degenerate_fits", r.degenerate_fits},
         {"classification",
          {{"gamma", r.gamma},
           {"ensemble_classes", r.ensemble_classes},
           {"classified_events", r.classified_events},
           {"accuracy", optional_json(r.classification_accuracy)},
           {"per_class", per_class}}},
         {"retrieval",
          {{"intervals", r.retrieval.intervals},
           {"rmse_attacked", r.retrieval.rmse_attacked},
           {"rmse_retrieved", r.retrieval.rmse_retrieved},
           {"channel_ratio", ratios},
           {"max_channel_ratio", optional_json(r.retrieval.max_channel_ratio)},
           {"episode_interval_ratio", episode},
           {"formula_max_divergence", r.retrieval.formula_max_divergence},
           {"undefined_direction", r.retrieval.undefined_direction}}}};
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << value.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace pmufdi
