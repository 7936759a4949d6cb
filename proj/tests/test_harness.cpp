#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmufdi/harness.hpp"
#include "pmufdi/json_io.hpp"
#include "support.hpp"

using namespace pmufdi;

namespace {

struct Counts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

Counts oracle_counts(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth, int tol) {
  const int n = static_cast<int>(truth.size());
  Counts c;
  for (int t = 0; t < n; ++t) {
    const bool y = truth[t] != 0;
    bool p = pred[t] != 0;
    bool near_edge = false;
    for (int s = std::max(1, t - tol); s <= std::min(n - 1, t + tol); ++s) {
      near_edge |= (truth[s] != 0) != (truth[s - 1] != 0);
    }
    if (p != y && near_edge) {
      for (int s = std::max(0, t - tol); s <= std::min(n - 1, t + tol); ++s) {
        if ((pred[s] != 0) == y) p = y;
      }
    }
    if (p && y) ++c.tp;
    else if (!p && !y) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

ScenarioConfig small_config() {
  auto cfg = preset("scenario1");
  cfg.cycles = 6;
  return cfg;
}

}  // namespace

TEST_SUITE("eval_harness") {
  TEST_CASE("perfect and all-clean predictions") {
    std::vector<std::uint8_t> truth(100, 0);
    std::fill(truth.begin() + 30, truth.begin() + 60, 1);
    auto m = score_detection(truth, truth, 5);
    CHECK(*m.accuracy == 1.0);
    CHECK(*m.precision_safe == 1.0);
    CHECK(*m.recall_safe == 1.0);
    CHECK(*m.precision_intrusion == 1.0);
    CHECK(*m.recall_intrusion == 1.0);
    const std::vector<std::uint8_t> none(100, 0);
    m = score_detection(none, truth, 0);
    CHECK(*m.recall_intrusion == 0.0);
    CHECK_FALSE(m.precision_intrusion.has_value());
    m = score_detection(none, none, 3);
    CHECK_FALSE(m.recall_intrusion.has_value());
    CHECK_THROWS_AS(score_detection(none, std::vector<std::uint8_t>(99, 0), 1), DimensionError);
  }

  TEST_CASE("randomized flags match a brute-force confusion matrix") {
    auto g = testutil::rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(g() % 300);
      const int tol = static_cast<int>(g() % 8);
      std::vector<std::uint8_t> truth(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
      std::uint8_t state = 0;
      for (int t = 0; t < n; ++t) {
        if (g() % 20 == 0) state ^= 1;
        truth[t] = state;
        pred[t] = g() % 4 == 0 ? static_cast<std::uint8_t>(1 - state) : state;
      }
      const auto m = score_detection(pred, truth, tol);
      const auto c = oracle_counts(pred, truth, tol);
      CHECK(m.tp == c.tp);
      CHECK(m.tn == c.tn);
      CHECK(m.fp == c.fp);
      CHECK(m.fn == c.fn);
      CHECK(m.tp + m.tn + m.fp + m.fn == n);
      if (m.tp + m.fn > 0) CHECK(*m.recall_intrusion == doctest::Approx(double(m.tp) / double(m.tp + m.fn)));
      if (m.tn + m.fn > 0) CHECK(*m.precision_safe == doctest::Approx(double(m.tn) / double(m.tn + m.fn)));
    }
  }

  TEST_CASE("RMSE table") {
    MeasurementMatrix a(300, 2);
    auto g = testutil::rng(2);
    for (std::size_t t = 0; t < 300; ++t) {
      for (std::size_t j = 0; j < 2; ++j) a.set(t, j, Phasor(testutil::uniform(g, -1, 1), testutil::uniform(g, -1, 1)));
    }
    auto table = score_rmse(a, a);
    CHECK(table.mean.size() == 2);
    for (double v : table.mean) CHECK(v == 0.0);
    auto b = a;
    for (std::size_t t = 0; t < 300; ++t) b.set(t, 1, a(t, 1) + Phasor(1e-3, 0));
    table = score_rmse(a, b, 150);
    CHECK(table.per_channel[0][0] == 0.0);
    CHECK(table.per_channel[1][1] == doctest::Approx(1e-3).epsilon(1e-9));
    CHECK(table.mean[1] == doctest::Approx(5e-4).epsilon(1e-9));
    table = score_rmse(a, b, 200);
    CHECK(table.mean.size() == 2);
    CHECK_THROWS_AS(score_rmse(a, MeasurementMatrix(299, 2)), DimensionError);
  }

  TEST_CASE("run without attacks reports no intrusion support and no alarms") {
    auto cfg = small_config();
    cfg.attack_classes = std::vector<ClassInterval>{};
    const auto rep = run_scenario(cfg);
    CHECK_FALSE(rep.detection.recall_intrusion.has_value());
    CHECK(rep.detection.fp == 0);
    CHECK(rep.prefix_false_alarms == 0);
    CHECK(rep.detection_events == 0);
    CHECK(rep.first_attack_sample == -1);
  }

  TEST_CASE("small strategy-1 run meets the floors and is deterministic") {
    const auto cfg = small_config();
    const auto a = run_scenario(cfg, RunOptions{2, std::nullopt});
    const auto b = run_scenario(cfg, RunOptions{1, std::nullopt});
    CHECK(report_json(a, false) == report_json(b, false));
    CHECK(check_floors(a).empty());
    CHECK(*a.detection.recall_intrusion >= 0.9);
    const auto& d = a.detection;
    CHECK(d.tp + d.tn + d.fp + d.fn == cfg.stream_length());
    for (auto r : {d.accuracy, d.precision_safe, d.recall_safe, d.precision_intrusion, d.recall_intrusion}) {
      REQUIRE(r.has_value());
      CHECK(*r >= 0.0);
      CHECK(*r <= 1.0);
    }
    for (const auto& c : a.per_class) {
      for (auto r : {c.accuracy, c.precision, c.recall}) {
        if (r) CHECK((*r >= 0.0 && *r <= 1.0));
      }
    }
  }

  TEST_CASE("zero-sigma sweep entry equals a plain run") {
    const auto cfg = small_config();
    const std::vector<double> sigmas{0.0, 0.1};
    const auto reports = noise_sweep(cfg, sigmas);
    REQUIRE(reports.size() == 2);
    CHECK(report_json(reports[0], false) == report_json(run_scenario(cfg), false));
    CHECK(reports[1].config.noise_sigma == 0.1);
    const std::vector<double> bad{0.3};
    CHECK_THROWS_AS(noise_sweep(cfg, bad), ConfigError);
  }

  TEST_CASE("sweep noise hits ceil(k/2) columns") {
    for (const auto& name : preset_names()) {
      auto cfg = preset(name);
      cfg.cycles = 3;
      cfg.noise_sigma = 0.1;
      const auto data = generate_scenario(cfg);
      const auto k = static_cast<std::size_t>(cfg.total_channels());
      CHECK(data.noisy_columns.size() == (k + 1) / 2);
      cfg.noise_sigma = 0.0;
      CHECK(generate_scenario(cfg).noisy_columns.empty());
    }
  }

  TEST_CASE("invalid configs are rejected") {
    auto cfg = small_config();
    cfg.attack_classes = std::vector<ClassInterval>{{1, 3500, 3700}};
    CHECK_THROWS_AS(run_scenario(cfg), ConfigError);
  }

  TEST_CASE("metrics csv rows") {
    auto cfg = small_config();
    cfg.attack_classes = std::vector<ClassInterval>{};
    const std::vector<MetricsReport> reports{run_scenario(cfg)};
    const auto csv = metrics_csv(reports);
    CHECK(csv.rfind("scenario,strategy,sigma,seed,metric,value\n", 0) == 0);
    CHECK(csv.find("recall_intrusion,nan") != std::string::npos);
    CHECK(metrics_csv(reports, false).rfind("scenario,strategy", 0) == std::string::npos);
  }

  TEST_CASE("classification log round trip") {
    const std::vector<ClassificationEntry> log{{10, 2, 1, std::nan(""), true}, {40, 0, 1, 0.125, false}};
    std::stringstream ss;
    write_classification_log(ss, log);
    const auto back = read_classification_log(ss);
    REQUIRE(back.size() == 2);
    CHECK(std::isnan(back[0].upsilon));
    CHECK(back[0].new_class);
    CHECK(back[1].t == 40);
    CHECK(back[1].upsilon == 0.125);
  }
}
