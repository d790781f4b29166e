#pragma once

#include "fes/patterns.hpp"
#include "fes/rng.hpp"
#include "fes/tensor.hpp"

#include <span>

namespace fes {

/// Rewrites each target of a copy of `golden` according to its domain assignment.
///
///  - NaN: quiet NaN
///  - Zero: +0.0
///  - BitFlip: the assigned bit of the binary32 encoding is flipped
///  - InUnitBall: golden + delta, with delta redrawn from U[-1, 1] while the result is bit-identical
///  - Random: the replacement, redrawn from U[-scale, scale] while it lies within 1 of golden,
///    is one bit away from it, or is zero
///
/// Every target ends up bitwise different from golden: a NaN or +0.0 that is already
/// present is replaced by another NaN payload or by -0.0. `domains` is updated with the
/// parameters that were actually applied. Locations refer to canonical_view(golden.shape()).
Tensor corrupt_values(const Tensor& golden, std::span<const Location> targets, std::span<DomainAssignment> domains,
                      Rng& rng, const SamplerConfig& cfg = {});

} // namespace fes
