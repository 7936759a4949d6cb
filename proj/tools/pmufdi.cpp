// pmufdi: command-line front end for the detection/classification/retrieval
// pipeline. Data goes to files or stdout, logs to stderr.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pmufdi/harness.hpp"
#include "pmufdi/json_io.hpp"

namespace fs = std::filesystem;
using namespace pmufdi;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct ConfigFileError : ConfigError {
  using ConfigError::ConfigError;
};

struct Overrides {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> strategy;
  std::optional<double> sigma;
  std::optional<int> window;
  std::optional<int> queue;
  std::optional<double> margin;
  std::optional<double> gamma;
  std::optional<int> lambda;
  std::optional<std::string> mode;
  int jobs = 0;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--preset", o.preset, "Scenario preset (scenario1..scenario4, full)");
  cmd->add_option("--config", o.config, "Scenario config JSON (default: $PMUFDI_CONFIG)");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--strategy", o.strategy, "Attack strategy 1..4")->check(CLI::Range(1, 4));
  cmd->add_option("--sigma", o.sigma, "Sweep noise level in [0, 0.25]")->check(CLI::Range(0.0, 0.25));
  cmd->add_option("--window", o.window, "Sliding window length (omega >= 4)")->check(CLI::Range(4, 100000));
  cmd->add_option("--queue", o.queue, "Deviation queue length (tau >= 1)")->check(CLI::Range(1, 100000));
  cmd->add_option("--margin", o.margin, "Threshold margin over the clean maximum (>= 1)")
      ->check(CLI::Range(1.0, 1e9));
  cmd->add_option("--gamma", o.gamma, "Classifier sensitivity (skips calibration)")
      ->check(CLI::Range(0.0, 1e9));
  cmd->add_option("--lambda", o.lambda, "Patterns kept per class")->check(CLI::Range(1, 100000));
  cmd->add_option("--mode", o.mode, "Similarity mode")->check(CLI::IsMember({"centered", "paper"}));
  cmd->add_option("--jobs", o.jobs, "Worker threads (default: all cores)")->check(CLI::Range(0, 4096));
}

// defaults < preset < config file < flags
ScenarioConfig resolve_config(const Overrides& o) {
  ScenarioConfig cfg;
  try {
    if (!o.preset.empty()) cfg = preset(o.preset);
    std::string path = o.config;
    if (path.empty()) {
      if (const char* env = std::getenv("PMUFDI_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = merge_config(cfg, read_json_file(path));
  } catch (const IoError& e) {
    throw ConfigFileError(e.what());
  } catch (const ParseError& e) {
    throw ConfigFileError(e.what());
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.strategy) cfg.attack_strategy = *o.strategy;
  if (o.sigma) cfg.noise_sigma = *o.sigma;
  if (o.window) cfg.detector.window = *o.window;
  if (o.queue) cfg.detector.queue = *o.queue;
  if (o.margin) cfg.detector.margin = *o.margin;
  if (o.gamma) cfg.classifier.gamma = *o.gamma;
  if (o.lambda) cfg.classifier.memory = *o.lambda;
  if (o.mode) cfg.classifier.mode = similarity_mode_from_string(*o.mode);
  cfg.validate();
  return cfg;
}

int jobs_of(const Overrides& o) {
  if (o.jobs > 0) return o.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

void emit_json(const std::string& path, const json& value) {
  if (path.empty() || path == "-") {
    std::cout << value.dump(2) << '\n';
  } else {
    write_json_file(path, value);
  }
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s.precision(4);
  s << *v;
  return s.str();
}

std::string retrieved_path(const std::string& input) {
  fs::path p(input);
  std::string stem = p.stem().string();
  return (p.parent_path() / (stem + ".retrieved.csv")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PMU false-data-injection detection, classification and retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pmufdi 0.1.0");

  Overrides ov;

  auto* gen = app.add_subcommand("generate", "Synthesize a clean scenario stream");
  std::string gen_out = "clean.csv", gen_model = "model.json";
  add_config_options(gen, ov);
  gen->add_option("-o,--out", gen_out, "Clean stream (.csv or .jsonl)");
  gen->add_option("--model", gen_model, "Grid model JSON");

  auto* att = app.add_subcommand("attack", "Inject the scenario's unobservable attacks");
  std::string att_in = "clean.csv", att_model = "model.json", att_out = "attacked.csv",
              att_labels = "labels.csv", att_plan = "plan.json";
  add_config_options(att, ov);
  att->add_option("-i,--input", att_in, "Clean stream");
  att->add_option("--model", att_model, "Grid model JSON");
  att->add_option("-o,--out", att_out, "Attacked stream");
  att->add_option("--labels", att_labels, "Ground-truth labels CSV");
  att->add_option("--plan", att_plan, "Attack plan JSON");

  auto* det = app.add_subcommand("detect", "Run the center-deviation detector");
  std::string det_in = "attacked.csv", det_out = "events.jsonl";
  std::optional<std::int64_t> det_training;
  add_config_options(det, ov);
  det->add_option("-i,--input", det_in, "Measurement stream");
  det->add_option("-o,--out", det_out, "Detection events JSONL ('-' for stdout)");
  det->add_option("--training", det_training, "Attack-free prefix used for calibration (samples)");

  auto* cls = app.add_subcommand("classify", "Classify detection events online");
  std::string cls_events = "events.jsonl", cls_labels, cls_out = "classification.csv",
              cls_ensemble = "ensemble.json";
  add_config_options(cls, ov);
  cls->add_option("-e,--events", cls_events, "Detection events JSONL");
  cls->add_option("--labels", cls_labels, "Ground-truth labels for gamma calibration");
  cls->add_option("-o,--out", cls_out, "Classification log CSV ('-' for stdout)");
  cls->add_option("--ensemble", cls_ensemble, "Final ensemble snapshot JSON");

  auto* ret = app.add_subcommand("retrieve", "Retrieve the clean signal from an attacked stream");
  std::string ret_in = "attacked.csv", ret_out, ret_formula = "arctan";
  std::optional<std::int64_t> ret_training;
  add_config_options(ret, ov);
  ret->add_option("-i,--input", ret_in, "Attacked stream");
  ret->add_option("-o,--out", ret_out, "Retrieved stream (default <input>.retrieved.csv)");
  ret->add_option("--formula", ret_formula, "Offset formula")
      ->check(CLI::IsMember({"arctan", "closed_form"}));
  ret->add_option("--training", ret_training, "Attack-free prefix used for calibration (samples)");

  auto* run = app.add_subcommand("run", "End-to-end scenario run and scoring");
  std::string run_out = "-", run_csv, run_workdir;
  bool run_check = false;
  add_config_options(run, ov);
  run->add_option("-o,--out", run_out, "MetricsReport JSON ('-' for stdout)");
  run->add_option("--csv", run_csv, "Plot-ready metrics CSV");
  run->add_option("--workdir", run_workdir, "Also write every intermediate artifact here");
  run->add_flag("--check", run_check, "Exit 1 if an acceptance floor is violated");

  auto* sweep = app.add_subcommand("sweep", "Noise sweep over sigmas and seeds");
  std::string sweep_out = "-", sweep_csv;
  std::vector<double> sweep_sigmas{0.0, 0.05, 0.10, 0.15, 0.20, 0.25};
  int sweep_seeds = 10;
  bool sweep_check = false;
  add_config_options(sweep, ov);
  sweep->add_option("--sigmas", sweep_sigmas, "Comma-separated noise levels")->delimiter(',');
  sweep->add_option("--seeds", sweep_seeds, "Seeds per sigma (seed, seed+1, ...)")
      ->check(CLI::Range(1, 100000));
  sweep->add_option("-o,--out", sweep_out, "JSON array of reports ('-' for stdout)");
  sweep->add_option("--csv", sweep_csv, "Plot-ready metrics CSV");
  sweep->add_flag("--check", sweep_check, "Exit 1 if a sigma = 0 run violates a floor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const ScenarioConfig cfg = resolve_config(ov);
    const int jobs = jobs_of(ov);

    if (gen->parsed()) {
      auto data = generate_scenario(cfg);
      save_stream(data.clean, gen_out);
      write_json_file(gen_model, json(data.model));
      std::cerr << "generate: " << data.clean.rows() << " samples x " << data.clean.channels()
                << " channels -> " << gen_out << '\n';
      return 0;
    }

    if (att->parsed()) {
      const auto clean = load_stream(att_in);
      const auto model = grid_model_from_json(read_json_file(att_model));
      const auto plan = scenario_plan(cfg, model);
      auto result = inject(clean, plan, model);
      save_stream(result.attacked, att_out);
      save_labels(result.labels, att_labels);
      write_json_file(att_plan, json(plan));
      std::int64_t hit = 0;
      for (std::size_t t = 0; t < result.labels.rows(); ++t) hit += result.labels.attacked(t) ? 1 : 0;
      std::cerr << "attack: strategy " << plan.strategy << ", " << plan.classes.size()
                << " class intervals, " << hit << " attacked samples -> " << att_out << '\n';
      return 0;
    }

    if (det->parsed() || ret->parsed()) {
      const bool is_detect = det->parsed();
      const auto stream = load_stream(is_detect ? det_in : ret_in);
      const auto training = (is_detect ? det_training : ret_training).value_or(cfg.training_samples());
      auto detectors = calibrate_detectors(stream, training, cfg.detector, jobs);
      const auto formula = retrieval_formula_from_string(ret_formula);
      auto result = retrieve_stream(stream, std::move(detectors), formula, jobs);
      if (is_detect) {
        if (det_out == "-") {
          write_events(std::cout, result.events);
        } else {
          auto out = open_out(det_out);
          write_events(out, result.events);
        }
        std::cerr << "detect: " << result.events.size() << " detection events over "
                  << stream.channels() << " channels -> " << det_out << '\n';
      } else {
        const std::string path = ret_out.empty() ? retrieved_path(ret_in) : ret_out;
        save_stream(result.retrieved, path);
        std::cerr << "retrieve: " << stream.rows() << " samples, max arctan/closed-form divergence "
                  << result.max_formula_divergence << " -> " << path << '\n';
      }
      return 0;
    }

    if (cls->parsed()) {
      auto in = open_in(cls_events);
      const auto events = read_events(in);
      std::optional<LabelTrack> labels;
      if (!cls_labels.empty()) labels = load_labels(cls_labels);
      const auto result = classify_events(events, cfg.classifier, calibration_end(cfg),
                                          labels ? &*labels : nullptr);
      if (cls_out == "-") {
        write_classification_log(std::cout, result.log);
      } else {
        auto out = open_out(cls_out);
        write_classification_log(out, result.log);
      }
      if (!cls_ensemble.empty()) write_json_file(cls_ensemble, json(result.ensemble));
      std::cerr << "classify: " << result.log.size() << " events, gamma " << result.gamma << ", "
                << result.ensemble.classes_created() << " classes -> " << cls_out << '\n';
      return 0;
    }

    if (run->parsed()) {
      RunOptions opts;
      opts.jobs = jobs;
      if (!run_workdir.empty()) opts.workdir = run_workdir;
      const auto report = run_scenario(cfg, opts);
      emit_json(run_out, json(report));
      if (!run_csv.empty()) {
        auto out = open_out(run_csv);
        out << metrics_csv(std::span<const MetricsReport>(&report, 1));
      }
      std::cerr << "run: " << cfg.name << " seed " << cfg.seed << " sigma " << cfg.noise_sigma
                << ": intrusion recall " << fmt_opt(report.detection.recall_intrusion)
                << ", safe precision " << fmt_opt(report.detection.precision_safe)
                << ", classification " << fmt_opt(report.classification_accuracy)
                << ", max RMSE ratio " << fmt_opt(report.retrieval.max_channel_ratio) << ", "
                << report.runtime_seconds << " s\n";
      if (run_check) {
        const auto failed = check_floors(report);
        for (const auto& f : failed) std::cerr << "check failed: " << f << '\n';
        if (!failed.empty()) return kExitCheckFailed;
      }
      return 0;
    }

    if (sweep->parsed()) {
      for (double s : sweep_sigmas) {
        if (!(s >= 0.0 && s <= 0.25)) {
          throw ConfigError("sweep sigma " + format_double(s) + " outside [0, 0.25]");
        }
      }
      struct Job {
        double sigma;
        std::uint64_t seed;
      };
      std::vector<Job> queue;
      for (double s : sweep_sigmas) {
        for (int k = 0; k < sweep_seeds; ++k) queue.push_back({s, cfg.seed + static_cast<std::uint64_t>(k)});
      }
      std::vector<std::optional<MetricsReport>> reports(queue.size());
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mu;
      auto worker = [&] {
        for (std::size_t i = next++; i < queue.size(); i = next++) {
          try {
            ScenarioConfig c = cfg;
            c.noise_sigma = queue[i].sigma;
            c.seed = queue[i].seed;
            reports[i] = run_scenario(c);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      };
      std::vector<std::thread> pool;
      const int workers = std::min<int>(jobs, static_cast<int>(queue.size()));
      for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);

      std::vector<MetricsReport> flat;
      json arr = json::array();
      for (auto& r : reports) {
        arr.push_back(json(*r));
        flat.push_back(std::move(*r));
      }
      emit_json(sweep_out, arr);
      if (!sweep_csv.empty()) {
        auto out = open_out(sweep_csv);
        out << metrics_csv(flat);
      }
      std::cerr << "sweep: " << flat.size() << " reports (" << sweep_sigmas.size() << " sigmas x "
                << sweep_seeds << " seeds)\n";
      if (sweep_check) {
        bool ok = true;
        for (const auto& r : flat) {
          if (r.config.noise_sigma != 0.0) continue;
          for (const auto& f : check_floors(r)) {
            std::cerr << "check failed (seed " << r.config.seed << "): " << f << '\n';
            ok = false;
          }
        }
        if (!ok) return kExitCheckFailed;
      }
      return 0;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NonFiniteError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return 0;
}
