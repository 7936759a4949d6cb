#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pmufdi/attack.hpp"
#include "pmufdi/circle_fit.hpp"
#include "pmufdi/grid_model.hpp"
#include "pmufdi/harness.hpp"
#include "pmufdi/icon.hpp"

using namespace pmufdi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::vector<std::string> kScenarios{"scenario1", "scenario2", "scenario3", "scenario4"};
constexpr int kSeeds = 10;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::VectorXcd row_vec(const MeasurementMatrix& m, std::size_t t) {
  const auto r = m.row(t);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) v(static_cast<Eigen::Index>(i)) = r[i];
  return v;
}

// Random (H, C) trials shared by criteria 1 and 2.
struct AlgebraTrials {
  double worst_residual = 0.0;  // max |r(Mbar) - r(M)| / (1 + |r(M)|)
  double worst_shift = 0.0;     // max |shat(Mbar) - shat(M) - C| / (1 + |C|)
  double seconds = 0.0;
  int trials = 0;
};

AlgebraTrials algebra_trials() {
  AlgebraTrials out;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 g(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = std::uniform_int_distribution<int>(4, 32)(g);
    const int n = std::uniform_int_distribution<int>(std::max(8, p + 1), 64)(g);
    const auto seed = static_cast<std::uint64_t>(trial + 1);
    const auto model = make_random_model(n, p, seed, 0.05);
    const auto len = std::uniform_int_distribution<std::int64_t>(2, 1000)(g);
    const auto m = generate_clean(model, static_cast<std::size_t>(len), seed);
    std::vector<int> targets;
    for (int b = 0; b < p; ++b) {
      if (g() % 3 == 0) targets.push_back(b);
    }
    if (targets.empty()) targets.push_back(static_cast<int>(g() % static_cast<unsigned>(p)));
    const int cls = std::uniform_int_distribution<int>(1, 8)(g);
    const auto plan = build_plan(model, 1, {{cls, 0, len}}, targets, seed);
    const auto res = inject(m, plan, model);
    bool attacked = false;
    for (const std::size_t t : {std::size_t{0}, static_cast<std::size_t>(len - 1)}) {
      const auto r0 = residual_bdd(model, m.row(t), 0.0);
      const auto r1 = residual_bdd(model, res.attacked.row(t), 0.0);
      out.worst_residual = std::max(out.worst_residual, (r1.residual - r0.residual).norm() / (1.0 + r0.norm));
      const Eigen::VectorXcd c = plan.corruption_at(static_cast<std::int64_t>(t));
      const Eigen::VectorXcd shift = estimate_state(model, res.attacked.row(t)) - estimate_state(model, m.row(t));
      out.worst_shift = std::max(out.worst_shift, (shift - c).norm() / (1.0 + c.norm()));
      attacked = attacked || (row_vec(res.attacked, t) - row_vec(m, t)).norm() > 0.0;
    }
    if (!attacked) continue;
    ++out.trials;
  }
  out.seconds = seconds_since(start);
  return out;
}

Outcome criterion1(const AlgebraTrials& a) {
  const bool ok = a.trials == 1000 && a.worst_residual <= 1e-8 && a.seconds < 5.0;
  return {ok, std::to_string(a.trials) + " attacked trials, max residual change " +
                  fmt("%.2e", a.worst_residual) + " (limit 1e-8), " + fmt("%.2f s", a.seconds)};
}

Outcome criterion2(const AlgebraTrials& a) {
  return {a.trials == 1000 && a.worst_shift <= 1e-8,
          "max relative state-shift error " + fmt("%.2e", a.worst_shift) + " (limit 1e-8)"};
}

Outcome criterion3() {
  std::mt19937_64 g(31337);
  std::uniform_real_distribution<double> ctr(-10.0, 10.0), ang(0.0, 2.0 * M_PI);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Phasor c(ctr(g), ctr(g));
    const double r = 0.01 + (10.0 - 0.01) * std::uniform_real_distribution<double>(0.0, 1.0)(g);
    const int n = std::uniform_int_distribution<int>(3, 100)(g);
    std::vector<Phasor> pts;
    for (int i = 0; i < n; ++i) pts.push_back(c + std::polar(r, ang(g)));
    try {
      const auto fit = fit_circle(pts);
      worst = std::max(worst, std::abs(fit.center - c) / (1.0 + std::abs(c)));
    } catch (const DegenerateFitError&) {
      ++failures;
    }
  }
  int raised = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Phasor a(ctr(g), ctr(g));
    const Phasor d = std::polar(1.0, ang(g));
    const int n = std::uniform_int_distribution<int>(3, 100)(g);
    std::vector<Phasor> pts;
    for (int i = 0; i < n; ++i) pts.push_back(a + std::uniform_real_distribution<double>(-5, 5)(g) * d);
    try {
      fit_circle(pts);
    } catch (const DegenerateFitError&) {
      ++raised;
    }
  }
  const bool ok = worst <= 1e-9 && failures == 0 && raised == 1000;
  return {ok, "10000 exact circles: max center error " + fmt("%.2e", worst) + " x (1+|c|), " +
                  std::to_string(failures) + " spurious degenerate errors; " + std::to_string(raised) +
                  "/1000 collinear sets raised"};
}

Outcome criterion4() {
  std::mt19937_64 g(4242);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ang(0.0, 2.0 * M_PI);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Phasor c0(u(g), u(g));
    const Phasor e(0.5 * u(g), 0.5 * u(g));
    const double r = 0.5 + std::abs(u(g));
    std::vector<Phasor> window;
    for (int i = 0; i < 30; ++i) window.push_back(c0 + std::polar(r, ang(g)) + e);
    worst = std::max(worst, std::abs(fit_circle(window).center - (c0 + e)));
  }
  return {worst <= 1e-8, "max |c_fit - (c0 + e)| = " + fmt("%.2e", worst) + " over 1000 windows"};
}

ScenarioConfig scenario(const std::string& name, std::uint64_t seed, double sigma, int strategy) {
  auto cfg = preset(name);
  cfg.seed = seed;
  cfg.noise_sigma = sigma;
  cfg.attack_strategy = strategy;
  return cfg;
}

// Strategy-1 preset runs at sigma 0 and 0.05; shared by criteria 5, 8 and 9.
struct PresetRuns {
  std::vector<MetricsReport> clean;  // sigma 0
  std::vector<MetricsReport> noisy;  // sigma 0.05
};

PresetRuns preset_runs() {
  PresetRuns out;
  const RunOptions opts{1, std::nullopt};
  for (const auto& name : kScenarios) {
    for (int seed = 1; seed <= kSeeds; ++seed) {
      out.clean.push_back(run_scenario(scenario(name, static_cast<std::uint64_t>(seed), 0.0, 1), opts));
      out.noisy.push_back(run_scenario(scenario(name, static_cast<std::uint64_t>(seed), 0.05, 1), opts));
    }
  }
  return out;
}

Outcome criterion5(const PresetRuns& runs) {
  double min_recall = 1.0, min_psafe = 1.0, max_runtime = 0.0;
  std::int64_t prefix = 0;
  bool ok = true;
  for (const auto& r : runs.clean) {
    const double rec = r.detection.recall_intrusion.value_or(-1.0);
    const double ps = r.detection.precision_safe.value_or(-1.0);
    min_recall = std::min(min_recall, rec);
    min_psafe = std::min(min_psafe, ps);
    max_runtime = std::max(max_runtime, r.runtime_seconds);
    prefix += r.prefix_false_alarms;
    ok = ok && rec >= 0.9 && ps >= 0.9 && r.prefix_false_alarms == 0 && r.runtime_seconds <= 5.0;
  }
  return {ok, std::to_string(runs.clean.size()) + " runs: min intrusion recall " + fmt("%.4f", min_recall) +
                  ", min safe precision " + fmt("%.4f", min_psafe) + ", prefix false alarms " +
                  std::to_string(prefix) + ", max runtime " + fmt("%.2f s", max_runtime)};
}

// One isolated class interval per cycle after training, classes taken in turn.
ScenarioConfig isolated(std::uint64_t seed, const std::vector<int>& classes) {
  auto cfg = preset("scenario1");
  cfg.seed = seed;
  std::vector<ClassInterval> schedule;
  std::size_t k = 0;
  for (int c = cfg.training_cycles; c < cfg.cycles; ++c, ++k) {
    const std::int64_t start = static_cast<std::int64_t>(c) * cfg.base_samples;
    schedule.push_back({classes[k % classes.size()], start, start + cfg.interval_samples});
  }
  cfg.attack_classes = schedule;
  return cfg;
}

struct IsolatedRun {
  ScenarioConfig cfg;
  StreamRetrieval retrieval;
  std::size_t channels = 0;
};

IsolatedRun run_isolated(const ScenarioConfig& cfg) {
  auto data = generate_scenario(cfg);
  const auto plan = scenario_plan(cfg, data.model);
  auto injected = inject(data.clean, plan, data.model);
  auto dets = calibrate_detectors(injected.attacked, cfg.training_samples(), cfg.detector);
  auto retrieval = retrieve_stream(injected.attacked, std::move(dets));
  return {cfg, std::move(retrieval), injected.attacked.channels()};
}

Outcome criterion6() {
  std::string detail;
  std::vector<double> med;
  for (int cls : {2, 3, 4}) {
    std::vector<double> lat;
    int missed = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const auto run = run_isolated(isolated(static_cast<std::uint64_t>(seed), {cls}));
      for (const auto& iv : *run.cfg.attack_classes) {
        double l = std::numeric_limits<double>::infinity();
        for (std::int64_t t = iv.start; t < iv.end; ++t) {
          bool any = false;
          for (std::size_t j = 0; j < run.channels; ++j) {
            any = any || run.retrieval.flags[static_cast<std::size_t>(t) * run.channels + j];
          }
          if (any) {
            l = static_cast<double>(t - iv.start);
            break;
          }
        }
        missed += std::isinf(l);
        lat.push_back(l);
      }
    }
    med.push_back(median(lat));
    detail += "class " + std::to_string(cls) + " median " + fmt("%g", med.back()) + " samples (" +
              std::to_string(missed) + " missed of " + std::to_string(lat.size()) + "); ";
  }
  const bool ok = med[2] < med[1] && med[1] < med[0];
  return {ok, detail + "need class 4 < 3 < 2"};
}

AttackPattern synthetic(std::mt19937_64& g, int family, std::int64_t t) {
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  std::vector<double> seq;
  for (int i = 0; i < 10; ++i) {
    double base = 0.0;
    if (family == 0) base = i >= 8 ? 1.0 : 0.0;
    if (family == 1) base = i >= 2 ? 1.0 : 0.0;
    if (family == 2) base = i == 5 ? 1.0 : 0.0;
    seq.push_back(base + jitter(g));
  }
  return AttackPattern{seq, 0, t};
}

Outcome criterion7() {
  std::string detail;
  // (a)
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int nonzero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(std::uniform_int_distribution<int>(2, 64)(g)));
    for (auto& x : p) x = u(g) * std::pow(10.0, 3 * u(g));
    nonzero += pattern_similarity(p, p, SimilarityMode::centered) != 0.0;
    nonzero += similarity(cross_correlation(p, p), SimilarityMode::centered) != 0.0;
  }
  const bool a_ok = nonzero == 0;
  detail += "(a) " + std::to_string(nonzero) + " nonzero self-similarities; ";

  // (b) and (c)
  const std::size_t lambda = 5;
  std::vector<AttackPattern> train;
  std::vector<int> truth;
  for (int i = 0; i < 20; ++i) {
    train.push_back(synthetic(g, i % 2, i));
    truth.push_back(i % 2);
  }
  const auto grid = default_gamma_grid();
  const double gamma = calibrate_gamma(train, std::span<const int>(truth), grid, SimilarityMode::centered, lambda);
  Ensemble ens(gamma, SimilarityMode::centered, lambda);
  std::vector<int> label_of(3, 0);
  bool bound_ok = true;
  auto check_bound = [&] {
    for (const auto& c : ens.classes()) bound_ok = bound_ok && c.patterns.size() <= lambda;
    bound_ok = bound_ok && ens.stored_patterns() <= static_cast<std::size_t>(ens.classes_created()) * lambda;
  };
  for (std::size_t i = 0; i < train.size(); ++i) {
    label_of[static_cast<std::size_t>(truth[i])] = ens.classify(train[i]).label;
    check_bound();
  }
  int returning = 0, reclaimed = 0;
  for (int i = 0; i < 100; ++i) {
    const int phase = i < 40 ? 0 : i < 70 ? 1 : 2;
    const int family = phase == 1 ? 2 : i % 2;
    const auto c = ens.classify(synthetic(g, family, 100 + i));
    check_bound();
    if (phase == 2) {
      ++returning;
      reclaimed += c.label == label_of[static_cast<std::size_t>(family)];
    }
  }
  Ensemble wide(0.05, SimilarityMode::centered, 3);
  for (int i = 0; i < 5000; ++i) {
    std::vector<double> p(8);
    for (auto& x : p) x = u(g);
    wide.classify(AttackPattern{p, 0, i});
    for (const auto& c : wide.classes()) bound_ok = bound_ok && c.patterns.size() <= 3;
  }
  const bool b_ok = returning > 0 && reclaimed == returning && label_of[0] != label_of[1];
  detail += "(b) " + std::to_string(reclaimed) + "/" + std::to_string(returning) + " returning patterns reclaimed; ";
  detail += std::string("(c) memory bound ") + (bound_ok ? "held" : "violated") + "; ";

  // (d) stream-level onset pattern of each isolated class-1 / class-4 episode.
  double min_agree = 1.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto run = run_isolated(isolated(static_cast<std::uint64_t>(seed), {1, 4}));
    const auto& schedule = *run.cfg.attack_classes;
    std::vector<AttackPattern> cal, fresh;
    std::vector<int> cal_truth, fresh_truth;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      for (const auto& ev : run.retrieval.events) {
        if (ev.pattern.t_detect < schedule[i].start || ev.pattern.t_detect >= schedule[i].end) continue;
        const bool first_half = i < schedule.size() / 2;
        (first_half ? cal : fresh).push_back(ev.pattern);
        (first_half ? cal_truth : fresh_truth).push_back(schedule[i].class_id);
        break;
      }
    }
    const double g_cal = calibrate_gamma(cal, std::span<const int>(cal_truth), grid);
    Ensemble e(g_cal);
    e.train(cal);
    std::vector<int> pred;
    for (const auto& p : fresh) pred.push_back(e.classify(p).label);
    const double agree = fresh.size() == schedule.size() / 2 ? pairwise_agreement(fresh_truth, pred) : 0.0;
    min_agree = std::min(min_agree, agree);
  }
  const bool d_ok = min_agree >= 0.95;
  detail += "(d) min pairwise agreement over " + std::to_string(kSeeds) + " seeds " + fmt("%.4f", min_agree);
  return {a_ok && b_ok && bound_ok && d_ok, detail};
}

Outcome criterion8(const PresetRuns& runs) {
  double worst0 = 0.0, worst5 = 0.0;
  int misordered = 0;
  bool ok = true;
  for (const auto* set : {&runs.clean, &runs.noisy}) {
    const bool clean = set == &runs.clean;
    for (const auto& r : *set) {
      const double ratio = r.retrieval.max_channel_ratio.value_or(std::numeric_limits<double>::infinity());
      (clean ? worst0 : worst5) = std::max(clean ? worst0 : worst5, ratio);
      ok = ok && ratio <= (clean ? 0.1 : 0.2);
      const auto& ep = r.retrieval.episode_interval_ratio;
      for (std::size_t i = 1; i < ep.size(); ++i) {
        if (!ep[0] || (ep[i] && *ep[i] > *ep[0])) {
          ++misordered;
          break;
        }
      }
    }
  }
  ok = ok && misordered == 0;
  return {ok, "max per-channel RMSE ratio " + fmt("%.4f", worst0) + " at sigma 0 (limit 0.1), " +
                  fmt("%.4f", worst5) + " at sigma 0.05 (limit 0.2); interval 1 not worst in " +
                  std::to_string(misordered) + " runs"};
}

Outcome criterion9(const PresetRuns& runs, const Outcome& c8) {
  const auto& r = runs.clean.front();
  const double div = r.retrieval.formula_max_divergence;
  return {std::isfinite(div) && c8.pass,
          "max per-sample divergence between the arctan and closed-form offsets on " + r.config.name +
              " seed " + std::to_string(r.config.seed) + ": " + fmt("%.6g", div) +
              "; arctan path meets criterion 8: " + (c8.pass ? "yes" : "no")};
}

Outcome criterion10() {
  const std::vector<double> sigmas{0.05, 0.10, 0.15, 0.20, 0.25};
  std::string detail;
  bool ok = true;
  for (const auto& name : kScenarios) {
    const auto strategy = preset(name).attack_strategy;
    std::vector<double> medians;
    for (double s : sigmas) {
      std::vector<double> acc;
      for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto r = run_scenario(scenario(name, static_cast<std::uint64_t>(seed), s, strategy));
        acc.push_back(r.classification_accuracy.value_or(0.0));
      }
      medians.push_back(median(acc));
    }
    detail += name + ":";
    for (std::size_t i = 0; i < medians.size(); ++i) {
      detail += fmt(" %.4f", medians[i]);
      if (i > 0 && medians[i] > medians[i - 1]) ok = false;
    }
    detail += "; ";
  }
  return {ok, detail + "medians over sigma 0.05..0.25"};
}

void report(int id, const char* name, const Outcome& o, bool& all) {
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  all = all && o.pass;
}

}  // namespace

int main() {
  bool all = true;
  const auto algebra = algebra_trials();
  report(1, "unobservability invariance", criterion1(algebra), all);
  report(2, "state-shift identity", criterion2(algebra), all);
  report(3, "circle-fit exactness", criterion3(), all);
  report(4, "translation-deviation law", criterion4(), all);
  const auto runs = preset_runs();
  report(5, "detection floors", criterion5(runs), all);
  report(6, "detection latency ordering", criterion6(), all);
  report(7, "classifier properties", criterion7(), all);
  const auto c8 = criterion8(runs);
  report(8, "retrieval error reduction", c8, all);
  report(9, "retrieval formula divergence", criterion9(runs, c8), all);
  report(10, "noise monotonicity", criterion10(), all);
  return all ? 0 : 1;
}
