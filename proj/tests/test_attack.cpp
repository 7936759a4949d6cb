#include <doctest.h>

#include <sstream>

#include "pmufdi/attack.hpp"
#include "support.hpp"

using namespace pmufdi;

namespace {

Eigen::VectorXcd row_vec(const MeasurementMatrix& m, std::size_t t) {
  const auto r = m.row(t);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) v(static_cast<Eigen::Index>(i)) = r[i];
  return v;
}

}  // namespace

TEST_SUITE("fdi_attack") {
  TEST_CASE("class increments") {
    const double mags[] = {1e-4, 5e-4, 1e-3, 5e-3};
    for (int c = 1; c <= 4; ++c) {
      CHECK(class_increment(c) == mags[c - 1]);
      CHECK(class_increment(c + 4) == -mags[c - 1]);
    }
    CHECK_THROWS_AS(class_increment(0), ConfigError);
    CHECK_THROWS_AS(class_increment(9), ConfigError);
  }

  TEST_CASE("class 4 over 150 samples accumulates 0.75 and class 8 mirrors it") {
    const auto model = make_random_model(6, 3, 2);
    const auto p4 = build_plan(model, 1, {{4, 100, 250}}, {1}, 3);
    const auto p8 = build_plan(model, 2, {{8, 100, 250}}, {1}, 3);
    CHECK(p4.magnitude_at(249) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p8.magnitude_at(249) == doctest::Approx(-0.75).epsilon(1e-12));
    for (std::int64_t t = 90; t < 260; ++t) {
      CHECK(p8.magnitude_at(t) == -p4.magnitude_at(t));
      const auto c4 = p4.corruption_at(t), c8 = p8.corruption_at(t);
      CHECK(std::abs(c4(1)) == doctest::Approx(std::abs(c8(1))));
      CHECK(c4(0) == Phasor(0, 0));
      CHECK(c4(2) == Phasor(0, 0));
    }
    CHECK(p4.magnitude_at(99) == 0.0);
    CHECK(p4.magnitude_at(250) == 0.0);
    CHECK(p4.class_at(100) == 4);
    CHECK(p4.class_at(250) == 0);
  }

  TEST_CASE("magnitude carries over back-to-back intervals only") {
    const auto model = make_random_model(6, 3, 2);
    const auto plan = build_plan(model, 1, {{1, 0, 10}, {2, 10, 20}, {3, 40, 50}}, {0, 2}, 1);
    CHECK(plan.carried == std::vector<double>{0.0, 10 * 1e-4, 0.0});
    CHECK(plan.magnitude_at(10) == doctest::Approx(10 * 1e-4 + 5e-4));
    CHECK(plan.magnitude_at(19) == doctest::Approx(10 * 1e-4 + 10 * 5e-4));
    CHECK(plan.magnitude_at(40) == doctest::Approx(1e-3));
    CHECK(plan.magnitude_at(30) == 0.0);
  }

  TEST_CASE("empty plan leaves the stream bit-exact") {
    const auto model = make_random_model(8, 3, 5, 0.01);
    const auto m = generate_clean(model, 200, 5);
    const auto plan = build_plan(model, 1, {}, {0}, 5);
    const auto res = inject(m, plan, model);
    CHECK(res.attacked == m);
    for (std::size_t t = 0; t < m.rows(); ++t) CHECK_FALSE(res.labels.attacked(t));
  }

  TEST_CASE("build_plan errors") {
    const auto model = make_random_model(6, 3, 2);
    CHECK_THROWS_AS(build_plan(model, 1, {{1, 0, 10}}, {}, 1), ConfigError);
    CHECK_THROWS_AS(build_plan(model, 1, {{1, 0, 10}}, {3}, 1), ConfigError);
    CHECK_THROWS_AS(build_plan(model, 1, {{1, 0, 10}}, {0, 0}, 1), ConfigError);
    CHECK_THROWS_AS(build_plan(model, 1, {{1, 0, 10}, {2, 5, 15}}, {0}, 1), ConfigError);
    CHECK_THROWS_AS(build_plan(model, 1, {{9, 0, 10}}, {0}, 1), ConfigError);
    CHECK_THROWS_AS(build_plan(model, 7, {{1, 0, 10}}, {0}, 1), ConfigError);
    const auto plan = build_plan(model, 1, {{1, 0, 10}}, {0}, 1);
    const auto other = make_random_model(7, 3, 2);
    CHECK_THROWS_AS(inject(generate_clean(other, 20, 1), plan, model), DimensionError);
  }

  TEST_CASE("unobservability over randomized models and plans") {
    int trials = 0;
    for (std::uint64_t seed = 1; trials < 1000; ++seed) {
      auto g = testutil::rng(seed);
      const int p = 2 + static_cast<int>(g() % 6);
      const int n = p + 1 + static_cast<int>(g() % 12);
      const auto model = make_random_model(n, p, seed, 0.02);
      const auto m = generate_clean(model, 40, seed);
      std::vector<int> targets;
      for (int b = 0; b < p; ++b) {
        if (g() % 2 == 0) targets.push_back(b);
      }
      if (targets.empty()) targets.push_back(0);
      const int cls = 1 + static_cast<int>(g() % 8);
      const auto plan = build_plan(model, 1, {{cls, 5, 35}}, targets, seed);
      const auto res = inject(m, plan, model);
      for (std::size_t t = 0; t < m.rows(); t += 4, ++trials) {
        const auto r0 = residual_bdd(model, m.row(t), 0);
        const auto r1 = residual_bdd(model, res.attacked.row(t), 0);
        REQUIRE((r1.residual - r0.residual).norm() <= 1e-8 * (1 + r0.norm));
        const Eigen::VectorXcd shift = estimate_state(model, res.attacked.row(t)) - estimate_state(model, m.row(t));
        REQUIRE((shift - plan.corruption_at(static_cast<std::int64_t>(t))).norm() <= 1e-8);
        const Eigen::VectorXcd d = row_vec(res.attacked, t) - row_vec(m, t);
        for (int j = 0; j < n; ++j) {
          const bool nonzero = d(j) != Phasor(0, 0);
          REQUIRE(nonzero == (res.labels(t, static_cast<std::size_t>(j)) != 0));
          if (nonzero) REQUIRE(res.labels(t, static_cast<std::size_t>(j)) == cls);
        }
      }
    }
  }

  TEST_CASE("attack support stays on rows that observe the targets") {
    const auto model = make_grid_model(preset("scenario1"));
    const auto plan = build_plan(model, 1, {{4, 0, 50}}, {0}, 1);
    const auto m = generate_clean(model, 60, 1);
    const auto res = inject(m, plan, model);
    for (int j = 0; j < model.n_meas(); ++j) {
      const bool observes = model.h()(j, 0) != 0.0;
      CHECK((res.labels(20, static_cast<std::size_t>(j)) != 0) == observes);
    }
  }

  TEST_CASE("label CSV round trip") {
    LabelTrack labels(5, 3);
    labels.set(1, 2, 4);
    labels.set(3, 0, 7);
    std::stringstream ss;
    write_labels(ss, labels);
    CHECK(ss.str().rfind("t,channel,class\n", 0) == 0);
    CHECK(read_labels(ss) == labels);
    CHECK(labels.attacked(1));
    CHECK_FALSE(labels.attacked(0));
    std::istringstream bad("t,channel,class\n0,0,1\n");
    LabelTrack one = read_labels(bad);
    CHECK(one.rows() == 1);
    std::istringstream broken("t,channel,class\n0,0,x\n");
    CHECK_THROWS_AS(read_labels(broken), ParseError);
  }
}
