#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pmufdi/detector.hpp"
#include "pmufdi/measurement.hpp"

namespace pmufdi {

enum class RetrievalFormula {
  arctan,       // subtract mean deviation along arctan(x_t / y_t) (reference)
  closed_form,  // the printed one-line simplification, kept for comparison
};

std::string_view to_string(RetrievalFormula formula);
RetrievalFormula retrieval_formula_from_string(std::string_view text);

struct RetrievalContext {
  double mean_dev = 0.0;  // mean of the deviation queue
  Phasor center;          // current fitted center (x_t, y_t)
  bool active = false;    // detector flag

  /// theta = x_t / y_t; callers check vertical() first.
  double theta() const noexcept { return center.real() / center.imag(); }
  /// |y_t| below 1e-12: the direction is taken as (sign(x_t), 0).
  bool vertical() const noexcept;
};

/// Snapshot of a detector after its latest step.
RetrievalContext retrieval_context(const OriginDetector& detector);

struct RetrievalOutcome {
  Phasor value;
  bool applied = false;            // an offset was subtracted
  bool undefined_direction = false;  // flagged with center exactly at origin
};

RetrievalOutcome retrieve_sample(Phasor z_attacked, const RetrievalContext& ctx,
                                 RetrievalFormula formula =
                                     RetrievalFormula::arctan);

/// The offset retrieve_sample subtracts under the arctan form.
Phasor retrieval_offset(const RetrievalContext& ctx);

struct StreamRetrieval {
  MeasurementMatrix retrieved;
  std::vector<Detection> events;        // ordered by (t, channel)
  std::vector<std::uint8_t> flags;      // rows x channels, detector flags
  std::vector<std::uint8_t> warm;       // rows x channels, window was warm
  std::vector<OriginDetector> detectors;  // state after the last sample
  double max_formula_divergence = 0.0;  // max |arctan - closed_form| sample
  std::int64_t undefined_direction = 0;
};

/// Runs detection and retrieval in lockstep, one output per input sample with
/// no lookahead. `detectors` holds one calibrated detector per channel.
StreamRetrieval retrieve_stream(const MeasurementMatrix& attacked,
                                std::vector<OriginDetector> detectors,
                                RetrievalFormula formula =
                                    RetrievalFormula::arctan,
                                int jobs = 1);

}  // namespace pmufdi
