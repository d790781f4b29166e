#pragma once

#include "fes/patterns.hpp"
#include "fes/rng.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fes {

inline constexpr int db_schema_version = 1;

/// Frequency tables for one operator kind.
struct ErrorModelEntry {
    std::array<double, spatial_variant_count> spatial_freq{};
    std::array<double, domain_kind_count> domain_freq{};
    /// Erroneous-value count -> number of corrupted tensors. Validation only.
    std::map<std::size_t, std::uint64_t> cardinality_hist;
    std::string corpus;
    std::uint64_t samples = 0;
    /// False when the key is not one of the interpreter's operator kinds.
    bool known_kind = true;

    double generatable_mass() const;
};

struct ErrorModelDB {
    int schema_version = db_schema_version;
    std::map<std::string, ErrorModelEntry> kinds;
    std::optional<ErrorModelEntry> fallback;

    /// Entry for `kind`, or the fallback when allowed; nullptr when neither applies.
    const ErrorModelEntry* find(const std::string& kind, bool allow_fallback) const;
    std::vector<std::string> unknown_kinds() const;
};

/// Linear-kernel profile used for kinds without their own entry, when enabled.
ErrorModelEntry default_fallback_entry();

/// Throws DataError naming the kind when a frequency vector is invalid.
void validate(const ErrorModelDB& db);

ErrorModelDB db_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ErrorModelDB& db);
ErrorModelDB load_db(const std::filesystem::path& path);
void save_db(const ErrorModelDB& db, const std::filesystem::path& path);

/// Draws one corruption event for an output tensor of `shape` produced by `kind`.
/// Random spatial mass is excluded and the rest renormalized; variants the shape
/// cannot host are removed the same way, falling back to SinglePoint.
CorruptionEvent sample_error(const ErrorModelDB& db, const std::string& kind, const Shape& shape, Rng& rng,
                             const SamplerConfig& cfg = {}, bool allow_fallback = false);

/// Same draw from an explicit entry.
CorruptionEvent sample_error(const ErrorModelEntry& entry, const std::string& kind, const Shape& shape, Rng& rng,
                             const SamplerConfig& cfg = {});

/// The renormalized spatial distribution sample_error draws from on this view.
std::array<double, spatial_variant_count> effective_spatial_freq(const ErrorModelEntry& entry, const Shape& view);

} // namespace fes
