#include "fes/patterns.hpp"

#include "fes/error.hpp"

#include <algorithm>

namespace fes {

namespace {

constexpr std::array<std::string_view, spatial_variant_count> spatial_names{
    "SinglePoint", "SameRow", "RandomSFM", "BulletWake", "ShatteredGlass", "RandomMFM"};
constexpr std::array<std::string_view, domain_kind_count> domain_names{"NaN", "Zero", "BitFlip", "InUnitBall",
                                                                       "Random"};

/// Two distinct uniform values in [0, n), ascending. n >= 2.
std::pair<std::size_t, std::size_t> ordered_pair(Rng& rng, std::size_t n)
{
    auto a = uniform_index(rng, n);
    auto b = uniform_index(rng, n - 1);
    if (b >= a)
        ++b;
    return {std::min<std::size_t>(a, b), std::max<std::size_t>(a, b)};
}

} // namespace

std::string_view to_string(SpatialVariant v) { return spatial_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(DomainKind d) { return domain_names[static_cast<std::size_t>(d)]; }

std::optional<SpatialVariant> parse_spatial_variant(std::string_view s)
{
    for (std::size_t i = 0; i < spatial_names.size(); ++i)
        if (spatial_names[i] == s)
            return static_cast<SpatialVariant>(i);
    return std::nullopt;
}

std::optional<DomainKind> parse_domain_kind(std::string_view s)
{
    for (std::size_t i = 0; i < domain_names.size(); ++i)
        if (domain_names[i] == s)
            return static_cast<DomainKind>(i);
    return std::nullopt;
}

Shape canonical_view(const Shape& shape)
{
    if (shape.size() == 3 && shape[0] > 1)
        return shape;
    return {1, 1, element_count(shape)};
}

std::size_t flat_index(const Shape& view, const Location& loc)
{
    return (loc.c * view[1] + loc.y) * view[2] + loc.x;
}

Location location_of(const Shape& view, std::size_t flat)
{
    const auto plane = view[1] * view[2];
    return {flat / plane, (flat % plane) / view[2], flat % view[2]};
}

bool admits(SpatialVariant v, const Shape& view)
{
    switch (v) {
    case SpatialVariant::SinglePoint:
        return true;
    case SpatialVariant::SameRow:
        return view[2] >= 2;
    case SpatialVariant::BulletWake:
        return view[0] >= 2;
    case SpatialVariant::ShatteredGlass:
        return view[0] >= 2 && view[2] >= 2;
    case SpatialVariant::RandomSFM:
    case SpatialVariant::RandomMFM:
        return false;
    }
    return false;
}

SpatialPattern sample_pattern(SpatialVariant v, const Shape& view, Rng& rng, const SamplerConfig& cfg)
{
    if (!admits(v, view))
        throw DataError(std::string(to_string(v)) + " cannot be generated on a tensor with view " + to_string(view));
    const auto C = view[0], H = view[1], W = view[2];
    SpatialPattern p;
    p.variant = v;

    auto skip_interior = [&](std::size_t lo, std::size_t hi, double prob, std::size_t keep,
                             std::vector<std::size_t>& out) {
        for (std::size_t i = lo + 1; i < hi; ++i)
            if (i != keep && bernoulli(rng, prob))
                out.push_back(i);
    };
    constexpr auto none = static_cast<std::size_t>(-1);

    switch (v) {
    case SpatialVariant::SinglePoint:
        p.c = uniform_index(rng, C);
        p.y = uniform_index(rng, H);
        p.x = uniform_index(rng, W);
        break;
    case SpatialVariant::SameRow:
        p.c = uniform_index(rng, C);
        p.y = uniform_index(rng, H);
        std::tie(p.x_start, p.x_end) = ordered_pair(rng, W);
        skip_interior(p.x_start, p.x_end, cfg.row_skip_p, none, p.skipped_points);
        break;
    case SpatialVariant::BulletWake:
        p.y = uniform_index(rng, H);
        p.x = uniform_index(rng, W);
        std::tie(p.c_first, p.c_last) = ordered_pair(rng, C);
        skip_interior(p.c_first, p.c_last, cfg.map_skip_p, none, p.skipped_maps);
        break;
    case SpatialVariant::ShatteredGlass: {
        p.y = uniform_index(rng, H);
        std::tie(p.c_first, p.c_last) = ordered_pair(rng, C);
        skip_interior(p.c_first, p.c_last, cfg.map_skip_p, none, p.skipped_maps);
        std::vector<std::size_t> maps;
        for (auto c = p.c_first; c <= p.c_last; ++c)
            if (!std::binary_search(p.skipped_maps.begin(), p.skipped_maps.end(), c))
                maps.push_back(c);
        p.shattered_maps = {maps[uniform_index(rng, maps.size())]};
        std::tie(p.x_start, p.x_end) = ordered_pair(rng, W);
        p.x = p.x_start + uniform_index(rng, p.x_end - p.x_start + 1);
        skip_interior(p.x_start, p.x_end, cfg.row_skip_p, p.x, p.skipped_points);
        break;
    }
    default:
        break;
    }
    return p;
}

std::vector<Location> generate_targets(const SpatialPattern& p, const Shape& view)
{
    const auto C = view[0], H = view[1], W = view[2];
    auto in_bounds = [&](const Location& l) { return l.c < C && l.y < H && l.x < W; };
    auto skipped = [](const std::vector<std::size_t>& v, std::size_t i) {
        return std::find(v.begin(), v.end(), i) != v.end();
    };
    std::vector<Location> out;
    switch (p.variant) {
    case SpatialVariant::SinglePoint:
        out.push_back({p.c, p.y, p.x});
        break;
    case SpatialVariant::SameRow:
        if (p.x_start >= p.x_end)
            throw DataError("SameRow needs x_start < x_end");
        for (auto x = p.x_start; x <= p.x_end; ++x)
            if (!skipped(p.skipped_points, x))
                out.push_back({p.c, p.y, x});
        if (out.size() < 2)
            throw DataError("SameRow must corrupt at least two points");
        break;
    case SpatialVariant::BulletWake:
    case SpatialVariant::ShatteredGlass: {
        if (p.c_first >= p.c_last)
            throw DataError(std::string(to_string(p.variant)) + " needs c_first < c_last");
        std::size_t maps = 0;
        for (auto c = p.c_first; c <= p.c_last; ++c) {
            if (skipped(p.skipped_maps, c))
                continue;
            ++maps;
            if (p.variant == SpatialVariant::ShatteredGlass && skipped(p.shattered_maps, c)) {
                for (auto x = p.x_start; x <= p.x_end; ++x)
                    if (x == p.x || !skipped(p.skipped_points, x))
                        out.push_back({c, p.y, x});
                if (p.x < p.x_start || p.x > p.x_end)
                    out.push_back({c, p.y, p.x});
            } else {
                out.push_back({c, p.y, p.x});
            }
        }
        if (maps < 2)
            throw DataError(std::string(to_string(p.variant)) + " must corrupt at least two maps");
        if (p.variant == SpatialVariant::ShatteredGlass) {
            bool inside = false;
            for (auto s : p.shattered_maps)
                inside |= s >= p.c_first && s <= p.c_last && !skipped(p.skipped_maps, s);
            if (!inside)
                throw DataError("ShatteredGlass needs a shattered map among its corrupted maps");
        }
        break;
    }
    case SpatialVariant::RandomSFM:
    case SpatialVariant::RandomMFM:
        throw DataError(std::string(to_string(p.variant)) + " has no generator");
    }
    for (auto& l : out)
        if (!in_bounds(l))
            throw DataError("pattern location out of bounds for view " + to_string(view));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Location> generate_targets(SpatialVariant v, const Shape& view, Rng& rng, const SamplerConfig& cfg)
{
    return generate_targets(sample_pattern(v, view, rng, cfg), view);
}

} // namespace fes
