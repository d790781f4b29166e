#pragma once

#include "fes/classify.hpp"
#include "fes/record.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fes {

inline constexpr int report_schema_version = 1;

/// Outcome counts for one slice of a campaign.
struct Tally {
    std::array<std::uint64_t, outcome_kind_count> counts{};

    std::uint64_t total() const;
    std::uint64_t operator[](OutcomeKind k) const { return counts[static_cast<std::size_t>(k)]; }
    double unusable_rate() const;
    void add(OutcomeKind k) { ++counts[static_cast<std::size_t>(k)]; }
    Tally& operator+=(const Tally& other);
    bool operator==(const Tally&) const = default;
};

struct Report {
    Tally totals;
    std::map<std::string, Tally> by_site;
    std::map<std::string, Tally> by_kind;
    std::map<std::string, Tally> by_spatial;
    /// Keyed by the single value domain of the event, or "Mixed".
    std::map<std::string, Tally> by_domain;
    nlohmann::json metadata = nlohmann::json::object();

    bool operator==(const Report& other) const;
};

/// Folds records into a report. Order of records does not matter.
Report aggregate(std::span<const CampaignRecord> records);
/// Combines two partial reports; metadata of `a` wins on conflicts.
Report merge(const Report& a, const Report& b);

nlohmann::json to_json(const Report& report);
/// Totals, then per-kind and per-site tables sorted by unusable rate.
std::string render_text(const Report& report);

/// Parses a JSON-lines records file; malformed lines raise DataError naming the line.
std::vector<CampaignRecord> read_records(const std::filesystem::path& path);

} // namespace fes
