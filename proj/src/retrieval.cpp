#include "pmufdi/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "internal.hpp"

namespace pmufdi {

std::string_view to_string(RetrievalFormula formula) {
  return formula == RetrievalFormula::arctan ? "arctan" : "closed_form";
}

RetrievalFormula retrieval_formula_from_string(std::string_view text) {
  if (text == "arctan") return RetrievalFormula::arctan;
  if (text == "closed_form" || text == "closed-form") return RetrievalFormula::closed_form;
  throw ConfigError("unknown retrieval formula '" + std::string(text) + "'");
}

bool RetrievalContext::vertical() const noexcept {
  return std::abs(center.imag()) < 1e-12;
}

RetrievalContext retrieval_context(const OriginDetector& detector) {
  RetrievalContext ctx;
  ctx.mean_dev = detector.queue().mean();
  ctx.center = detector.center().value_or(Phasor{});
  ctx.active = detector.flag();
  return ctx;
}

Phasor retrieval_offset(const RetrievalContext& ctx) {
  const double x = ctx.center.real();
  const double y = ctx.center.imag();
  if (ctx.vertical()) {
    if (x == 0.0) return {};
    return {std::copysign(ctx.mean_dev, x), 0.0};
  }
  // Unit vector towards the center written through arctan(x / y): for y > 0
  // it is (sin phi, cos phi), mirrored for y < 0.
  const double phi = std::atan(ctx.theta());
  const double s = y > 0.0 ? 1.0 : -1.0;
  return ctx.mean_dev * Phasor(s * std::sin(phi), s * std::cos(phi));
}

namespace {

Phasor closed_form_offset(const RetrievalContext& ctx) {
  if (ctx.vertical()) return retrieval_offset(ctx);
  const double th = ctx.theta();
  return ctx.mean_dev / std::sqrt(1.0 + th * th) * Phasor(1.0, th * th);
}

}  // namespace

RetrievalOutcome retrieve_sample(Phasor z_attacked, const RetrievalContext& ctx,
                                 RetrievalFormula formula) {
  RetrievalOutcome out{z_attacked, false, false};
  if (!ctx.active) return out;
  if (ctx.center == Phasor{}) {
    out.undefined_direction = true;
    return out;
  }
  const Phasor off = formula == RetrievalFormula::arctan ? retrieval_offset(ctx)
                                                         : closed_form_offset(ctx);
  out.value = z_attacked - off;
  out.applied = true;
  return out;
}

StreamRetrieval retrieve_stream(const MeasurementMatrix& attacked,
                                std::vector<OriginDetector> detectors,
                                RetrievalFormula formula, int jobs) {
  const std::size_t n = attacked.rows();
  const std::size_t k = attacked.channels();
  if (detectors.size() != k) {
    throw DimensionError("need one detector per channel (" + std::to_string(k) + "), got " +
                         std::to_string(detectors.size()));
  }
  StreamRetrieval out{attacked, {}, std::vector<std::uint8_t>(n * k, 0),
                      std::vector<std::uint8_t>(n * k, 0), {}, 0.0, 0};
  const RetrievalFormula other = formula == RetrievalFormula::arctan
                                     ? RetrievalFormula::closed_form
                                     : RetrievalFormula::arctan;
  std::vector<std::vector<Detection>> events(k);
  std::vector<double> divergence(k, 0.0);
  std::vector<std::int64_t> undefined(k, 0);

  detail::parallel_for(k, jobs, [&](std::size_t j) {
    auto& det = detectors[j];
    for (std::size_t t = 0; t < n; ++t) {
      const Phasor z = attacked(t, j);
      if (auto ev = det.step(z)) events[j].push_back(std::move(*ev));
      const auto ctx = retrieval_context(det);
      out.flags[t * k + j] = det.flag() ? 1 : 0;
      out.warm[t * k + j] = det.deviation().has_value() ? 1 : 0;
      if (!ctx.active) continue;
      const auto r = retrieve_sample(z, ctx, formula);
      if (r.undefined_direction) {
        ++undefined[j];
        continue;
      }
      out.retrieved.set(t, j, r.value);
      const auto alt = retrieve_sample(z, ctx, other);
      divergence[j] = std::max(divergence[j], std::abs(r.value - alt.value));
    }
  });

  for (std::size_t j = 0; j < k; ++j) {
    out.max_formula_divergence = std::max(out.max_formula_divergence, divergence[j]);
    out.undefined_direction += undefined[j];
    for (auto& ev : events[j]) out.events.push_back(std::move(ev));
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const Detection& a, const Detection& b) {
                     if (a.pattern.t_detect != b.pattern.t_detect) {
                       return a.pattern.t_detect < b.pattern.t_detect;
                     }
                     return a.pattern.channel < b.pattern.channel;
                   });
  out.detectors = std::move(detectors);
  return out;
}

}  // namespace pmufdi
