#pragma once

#include "fes/rng.hpp"
#include "fes/tensor.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fes {

/// Spatial corruption patterns, in the column order of the published frequency table.
enum class SpatialVariant { SinglePoint, SameRow, RandomSFM, BulletWake, ShatteredGlass, RandomMFM };
inline constexpr std::size_t spatial_variant_count = 6;

/// Value domains, in classification precedence order.
enum class DomainKind { NaN, Zero, BitFlip, InUnitBall, Random };
inline constexpr std::size_t domain_kind_count = 5;

std::string_view to_string(SpatialVariant v);
std::string_view to_string(DomainKind d);
std::optional<SpatialVariant> parse_spatial_variant(std::string_view s);
std::optional<DomainKind> parse_domain_kind(std::string_view s);

/// RandomSFM / RandomMFM are recognised by the analyzer but never generated.
constexpr bool is_generatable(SpatialVariant v)
{
    return v != SpatialVariant::RandomSFM && v != SpatialVariant::RandomMFM;
}

constexpr bool is_multi_map(SpatialVariant v)
{
    return v == SpatialVariant::BulletWake || v == SpatialVariant::ShatteredGlass || v == SpatialVariant::RandomMFM;
}

/// A position in the (C, H, W) view of a tensor.
struct Location {
    std::size_t c = 0, y = 0, x = 0;
    auto operator<=>(const Location&) const = default;
};

/// The (C, H, W) view used for pattern generation and analysis. Rank-3 tensors with
/// more than one map keep their layout; everything else is flat and becomes (1, 1, N).
Shape canonical_view(const Shape& shape);

std::size_t flat_index(const Shape& view, const Location& loc);
Location location_of(const Shape& view, std::size_t flat);

/// A spatial pattern with its parameters bound. Coordinates refer to the canonical view.
///  - SinglePoint: (c, y, x)
///  - SameRow: c, y, [x_start, x_end], skipped_points
///  - BulletWake: entry point (y, x), [c_first, c_last], skipped_maps
///  - ShatteredGlass: BulletWake fields plus shattered_maps, whose row y spans
///    [x_start, x_end] minus skipped_points
///  - RandomSFM / RandomMFM: no parameters
struct SpatialPattern {
    SpatialVariant variant = SpatialVariant::SinglePoint;
    std::size_t c = 0, y = 0, x = 0;
    std::size_t x_start = 0, x_end = 0;
    std::size_t c_first = 0, c_last = 0;
    std::vector<std::size_t> skipped_points;
    std::vector<std::size_t> skipped_maps;
    std::vector<std::size_t> shattered_maps;

    bool operator==(const SpatialPattern&) const = default;
};

/// Knobs for the parts of pattern generation the frequency tables leave open.
struct SamplerConfig {
    double row_skip_p = 0.25;   // interior row points left intact
    double map_skip_p = 0.25;   // interior maps left intact
    double random_scale = 1e3;  // replacement range for the Random domain
    /// Overrides every drawn value domain; the random stream advances as without it.
    std::optional<DomainKind> force_domain;
};

/// Whether the canonical view admits the variant at all.
bool admits(SpatialVariant v, const Shape& view);

/// Draws the parameters of a variant uniformly within the view's bounds.
SpatialPattern sample_pattern(SpatialVariant v, const Shape& view, Rng& rng, const SamplerConfig& cfg = {});

/// Expands a bound pattern into its sorted list of locations.
std::vector<Location> generate_targets(const SpatialPattern& pattern, const Shape& view);

/// sample_pattern followed by generate_targets.
std::vector<Location> generate_targets(SpatialVariant v, const Shape& view, Rng& rng, const SamplerConfig& cfg = {});

/// Per-target value corruption with its parameters bound.
struct DomainAssignment {
    DomainKind kind = DomainKind::Zero;
    int bit = 0;             // BitFlip
    float delta = 0.0f;      // InUnitBall
    float replacement = 0.0f; // Random

    bool operator==(const DomainAssignment&) const = default;
};

/// One sampled error: where, which pattern, and how each target is rewritten.
struct CorruptionEvent {
    std::string site;
    std::string kind;
    Shape view;
    SpatialPattern spatial;
    std::vector<Location> targets;
    std::vector<DomainAssignment> domains;
    std::uint64_t seed = 0;

    bool operator==(const CorruptionEvent&) const = default;
};

} // namespace fes
