#include "fes/saboteur.hpp"

#include "fes/error.hpp"

#include <bit>
#include <cmath>

namespace fes {

namespace {

constexpr std::uint32_t quiet_nan = 0x7fc00000u;
constexpr std::uint32_t alt_nan = 0x7fc00001u;
constexpr std::uint32_t negative_zero = 0x80000000u;
constexpr int max_redraws = 10000;

bool acceptable_random(float golden, float r)
{
    if (std::isnan(r) || r == 0.0f)
        return false;
    const auto gb = float_bits(golden), rb = float_bits(r);
    if (std::popcount(gb ^ rb) <= 1)
        return false;
    return !(std::abs(static_cast<double>(r) - static_cast<double>(golden)) <= 1.0);
}

} // namespace

Tensor corrupt_values(const Tensor& golden, std::span<const Location> targets, std::span<DomainAssignment> domains,
                      Rng& rng, const SamplerConfig& cfg)
{
    if (targets.size() != domains.size())
        throw DataError("corrupt_values: one domain assignment per target required");
    const auto view = canonical_view(golden.shape());
    Tensor out = golden;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto& loc = targets[t];
        if (loc.c >= view[0] || loc.y >= view[1] || loc.x >= view[2])
            throw DataError("corruption target out of bounds for view " + to_string(view));
        const auto idx = flat_index(view, loc);
        const float g = golden[idx];
        const auto gb = float_bits(g);
        auto& d = domains[t];
        float v = g;
        switch (d.kind) {
        case DomainKind::NaN:
            v = bits_float(gb == quiet_nan ? alt_nan : quiet_nan);
            break;
        case DomainKind::Zero:
            v = gb == 0u ? bits_float(negative_zero) : 0.0f;
            break;
        case DomainKind::BitFlip:
            if (d.bit < 0 || d.bit > 31)
                throw DataError("bit index must lie in [0, 31]");
            v = bits_float(gb ^ (1u << d.bit));
            break;
        case DomainKind::InUnitBall: {
            if (!(std::abs(d.delta) <= 1.0f))
                throw DataError("InUnitBall delta must lie in [-1, 1]");
            if (!std::isfinite(g)) {
                // Any finite value differs from a non-finite golden.
                if (d.delta == 0.0f)
                    d.delta = 0.5f;
                v = d.delta;
                break;
            }
            v = g + d.delta;
            // Landing on zero would read back as the Zero domain.
            for (int i = 0; i < 64 && (float_bits(v) == gb || v == 0.0f); ++i) {
                d.delta = static_cast<float>(uniform_real(rng, -1.0, 1.0));
                v = g + d.delta;
            }
            if (float_bits(v) == gb) {
                // |golden| is so large that no delta in [-1, 1] moves it.
                v = std::nextafter(g, d.delta < 0.0f ? -INFINITY : INFINITY);
                d.delta = static_cast<float>(static_cast<double>(v) - static_cast<double>(g));
            }
            break;
        }
        case DomainKind::Random: {
            float r = d.replacement;
            int i = 0;
            while (!acceptable_random(g, r)) {
                if (++i > max_redraws)
                    throw EngineError("could not draw a Random-domain replacement; random_scale too small?");
                r = static_cast<float>(uniform_real(rng, -cfg.random_scale, cfg.random_scale));
            }
            d.replacement = r;
            v = r;
            break;
        }
        }
        out[idx] = v;
    }
    return out;
}

} // namespace fes
