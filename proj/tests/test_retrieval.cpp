#include <doctest.h>

#include "pmufdi/grid_model.hpp"
#include "pmufdi/retrieval.hpp"
#include "support.hpp"

using namespace pmufdi;

namespace {

MeasurementMatrix shifted(const MeasurementMatrix& m, std::size_t from, Phasor v) {
  auto out = m;
  for (std::size_t t = from; t < m.rows(); ++t) {
    for (std::size_t j = 0; j < m.channels(); ++j) out.set(t, j, m(t, j) + v);
  }
  return out;
}

std::vector<OriginDetector> calibrated(const MeasurementMatrix& m, std::size_t n_train) {
  std::vector<OriginDetector> dets;
  for (std::size_t j = 0; j < m.channels(); ++j) {
    const auto col = m.column(j);
    dets.push_back(OriginDetector::calibrate(std::span<const Phasor>(col).first(n_train),
                                             DetectorParams{}, static_cast<int>(j)));
  }
  return dets;
}

}  // namespace

TEST_SUITE("signal_retrieval") {
  TEST_CASE("zero mean deviation and inactive contexts pass through") {
    RetrievalContext ctx{0.0, Phasor(0.3, 0.4), true};
    const Phasor z(1.25, -0.5);
    auto r = retrieve_sample(z, ctx);
    CHECK(r.value == z);
    ctx.mean_dev = 0.2;
    ctx.active = false;
    r = retrieve_sample(z, ctx);
    CHECK(r.value == z);
    CHECK_FALSE(r.applied);
  }

  TEST_CASE("offset points from the origin toward the center") {
    auto g = testutil::rng(1);
    for (int trial = 0; trial < 500; ++trial) {
      const Phasor c(testutil::uniform(g, -1, 1), testutil::uniform(g, -1, 1));
      const double md = testutil::uniform(g, 0, 0.5);
      const RetrievalContext ctx{md, c, true};
      REQUIRE_FALSE(ctx.vertical());
      const Phasor off = retrieval_offset(ctx);
      const double cross = off.real() * c.imag() - off.imag() * c.real();
      CHECK(std::abs(cross) <= 1e-9);
      CHECK(off.real() * c.real() + off.imag() * c.imag() >= 0);
      CHECK(std::abs(off) == doctest::Approx(md).epsilon(1e-12));
      const Phasor z(testutil::uniform(g, -1, 1), testutil::uniform(g, -1, 1));
      CHECK(std::abs(retrieve_sample(z, ctx).value - (z - off)) <= 1e-15);
    }
  }

  TEST_CASE("vertical guard and undefined direction") {
    RetrievalContext ctx{0.2, Phasor(-0.5, 1e-13), true};
    REQUIRE(ctx.vertical());
    CHECK(retrieval_offset(ctx) == Phasor(-0.2, 0));
    CHECK(retrieve_sample(Phasor(1, 1), ctx, RetrievalFormula::closed_form).value == Phasor(1.2, 1));
    ctx.center = Phasor(0, 0);
    const auto r = retrieve_sample(Phasor(1, 1), ctx);
    CHECK(r.undefined_direction);
    CHECK_FALSE(r.applied);
    CHECK(r.value == Phasor(1, 1));
  }

  TEST_CASE("closed form follows its printed expression") {
    auto g = testutil::rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      const Phasor c(testutil::uniform(g, 0.1, 1), testutil::uniform(g, 0.1, 1));
      const double md = testutil::uniform(g, 0, 0.5);
      const double th = c.real() / c.imag();
      const RetrievalContext ctx{md, c, true};
      const Phasor expect = Phasor(1, 1) - md / std::sqrt(1 + th * th) * Phasor(1, th * th);
      CHECK(std::abs(retrieve_sample(Phasor(1, 1), ctx, RetrievalFormula::closed_form).value - expect) <= 1e-12);
    }
    // The two forms coincide when the center lies on the diagonal.
    const RetrievalContext diag{0.1, Phasor(0.3, 0.3), true};
    CHECK(std::abs(retrieve_sample(0, diag).value - retrieve_sample(0, diag, RetrievalFormula::closed_form).value) <= 1e-15);
    CHECK(retrieval_formula_from_string("closed-form") == RetrievalFormula::closed_form);
    CHECK_THROWS_AS(retrieval_formula_from_string("x"), ConfigError);
  }

  TEST_CASE("clean input comes back bit-exact") {
    const auto model = make_random_model(4, 2, 3, 0.01);
    const auto m = generate_clean(model, 1500, 3);
    const auto res = retrieve_stream(m, calibrated(m, 600), RetrievalFormula::arctan, 2);
    CHECK(res.retrieved == m);
    CHECK(res.events.empty());
    CHECK(res.retrieved.rows() == m.rows());
  }

  TEST_CASE("constant injected offset is removed once the queue converges") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto g = testutil::rng(seed);
      const auto model = make_random_model(3, 2, seed);
      const auto m = generate_clean(model, 1200, seed);
      const Phasor v = std::polar(0.3, testutil::uniform(g, -3, 3));
      const auto attacked = shifted(m, 700, v);
      const DetectorParams p;
      const auto res = retrieve_stream(attacked, calibrated(m, 600));
      const std::size_t settled = 700 + static_cast<std::size_t>(p.window + p.queue);
      for (std::size_t t = settled; t < m.rows(); ++t) {
        for (std::size_t j = 0; j < m.channels(); ++j) {
          REQUIRE(std::abs(res.retrieved(t, j) - m(t, j)) <= 0.1 * std::abs(v));
        }
      }
      double err_att = 0, err_ret = 0;
      for (std::size_t t = 700; t < m.rows(); ++t) {
        for (std::size_t j = 0; j < m.channels(); ++j) {
          err_att += std::norm(attacked(t, j) - m(t, j));
          err_ret += std::norm(res.retrieved(t, j) - m(t, j));
        }
      }
      CHECK(err_ret < err_att);
    }
  }

  TEST_CASE("retrieval is causal") {
    const auto model = make_random_model(2, 1, 4);
    const auto m = generate_clean(model, 1000, 4);
    const auto attacked = shifted(m, 700, Phasor(0.2, -0.1));
    const auto full = retrieve_stream(attacked, calibrated(m, 600));
    for (std::size_t cut : {650u, 720u, 800u, 999u}) {
      MeasurementMatrix prefix(cut, attacked.meta(), attacked.rate_hz());
      for (std::size_t t = 0; t < cut; ++t) {
        for (std::size_t j = 0; j < attacked.channels(); ++j) prefix.set(t, j, attacked(t, j));
      }
      const auto part = retrieve_stream(prefix, calibrated(m, 600));
      for (std::size_t t = 0; t < cut; ++t) {
        for (std::size_t j = 0; j < attacked.channels(); ++j) {
          REQUIRE(part.retrieved(t, j) == full.retrieved(t, j));
        }
      }
    }
  }

  TEST_CASE("parallel and serial runs agree") {
    const auto model = make_random_model(6, 2, 5, 0.01);
    const auto m = generate_clean(model, 1200, 5);
    const auto attacked = shifted(m, 800, Phasor(0.1, 0.1));
    const auto a = retrieve_stream(attacked, calibrated(m, 600), RetrievalFormula::arctan, 1);
    const auto b = retrieve_stream(attacked, calibrated(m, 600), RetrievalFormula::arctan, 4);
    CHECK(a.retrieved == b.retrieved);
    CHECK(a.flags == b.flags);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 1; i < a.events.size(); ++i) {
      CHECK(a.events[i - 1].pattern.t_detect <= a.events[i].pattern.t_detect);
    }
    CHECK_THROWS_AS(retrieve_stream(attacked, {}), DimensionError);
  }
}
