#pragma once

#include "fes/classify.hpp"
#include "fes/patterns.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace fes {

/// Outcome of one error-simulation experiment; one JSON line in a records file.
struct CampaignRecord {
    std::uint64_t index = 0;
    std::size_t input = 0;
    std::uint64_t master_seed = 0;
    CorruptionEvent event;
    Outcome outcome;
    std::string error;
    /// FNV-1a digest of the corrupted graph outputs.
    std::uint64_t digest = 0;
    std::optional<double> wall_ms;
};

nlohmann::json to_json(const CampaignRecord& r);
CampaignRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SpatialPattern& p);
SpatialPattern pattern_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorruptionEvent& e);
CorruptionEvent event_from_json(const nlohmann::json& j);

} // namespace fes
