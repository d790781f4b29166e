#pragma once

#include "fes/graph.hpp"
#include "fes/rng.hpp"
#include "fes/tensor.hpp"

#include <cstdint>

// Small seeded reference networks for tests, benchmarks and the demo data.
namespace fes::zoo {

/// Uniform values in [lo, hi).
Tensor random_tensor(const Shape& shape, Rng& rng, float lo = -1.0f, float hi = 1.0f);

/// LeNet-5 layout on a 1x32x32 input, 13 nodes:
/// conv5(6) relu pool conv5(16) relu pool flatten dense(120) relu dense(84) relu dense(10) softmax.
Graph lenet5(std::uint64_t seed);

/// 7-node variant: conv pool conv pool flatten dense softmax.
Graph lenet_small(std::uint64_t seed);

/// LeakyReLU on the input followed by Add(relu, input). Zero inputs make
/// a Zero event on the relu output vanish at the Add.
Graph relu_add(const Shape& shape);

/// One input image for `graph` drawn in [0, 1).
Tensor random_input(const Graph& graph, std::uint64_t seed);

} // namespace fes::zoo
