#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "capgate/core.hpp"
#include "capgate/evaluation.hpp"
#include "capgate/optimizer.hpp"
#include "capgate/policies.hpp"

namespace capgate {

// Long-format sweep schema. CSV columns and JSON keys are identical; bootstrap
// columns are empty (CSV) or null (JSON) when a sweep ran without resampling.
const std::vector<std::string>& sweep_columns();

void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records);
nlohmann::ordered_json to_json(const SweepRecord& record);
nlohmann::ordered_json to_json(std::span<const SweepRecord> records);

nlohmann::ordered_json to_json(const ThresholdDecision& decision);
nlohmann::ordered_json to_json(const PolicyOutcome& outcome);
nlohmann::ordered_json to_json(const BootstrapSummary& summary);

}  // namespace capgate
