#pragma once

// JSON conversions (nlohmann::json ADL hooks) for the serialized artifacts:
// scenario configs, grid models, attack plans, detection events, ensemble
// snapshots and metrics reports.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmufdi/attack.hpp"
#include "pmufdi/detector.hpp"
#include "pmufdi/grid_model.hpp"
#include "pmufdi/harness.hpp"
#include "pmufdi/icon.hpp"
#include "pmufdi/scenario.hpp"

namespace pmufdi {

using json = nlohmann::json;

void to_json(json& j, const PmuChannels& v);
void from_json(const json& j, PmuChannels& v);
void to_json(json& j, const ClassInterval& v);
void from_json(const json& j, ClassInterval& v);
void to_json(json& j, const DetectorParams& v);
void from_json(const json& j, DetectorParams& v);
void to_json(json& j, const ClassifierParams& v);
void from_json(const json& j, ClassifierParams& v);
/// Missing keys keep their defaults, so partial configs overlay cleanly.
void to_json(json& j, const ScenarioConfig& v);
void from_json(const json& j, ScenarioConfig& v);

void to_json(json& j, const GridModel& v);
GridModel grid_model_from_json(const json& j);

void to_json(json& j, const AttackPlan& v);
AttackPlan attack_plan_from_json(const json& j);

/// {t, channel, d_t, delta, pattern}
void to_json(json& j, const Detection& v);
void from_json(const json& j, Detection& v);

/// Detection events, one JSON object per line.
void write_events(std::ostream& out, std::span<const Detection> events);
std::vector<Detection> read_events(std::istream& in);

void to_json(json& j, const Ensemble& v);
Ensemble ensemble_from_json(const json& j);

void to_json(json& j, const DetectionMetrics& v);
void to_json(json& j, const RmseTable& v);
void to_json(json& j, const MetricsReport& v);

/// Report without the wall-clock field, for reproducibility comparisons.
json report_json(const MetricsReport& report, bool include_runtime = true);

/// Applies `overlay` onto `base` key by key (objects merge recursively).
ScenarioConfig merge_config(const ScenarioConfig& base, const json& overlay);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& value);

}  // namespace pmufdi
