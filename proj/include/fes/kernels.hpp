#pragma once

#include "fes/tensor.hpp"

#include <cstddef>

// Operator kernels. `fes::kernels` holds the OpenMP-parallel versions used by the
// interpreter; `fes::kernels::reference` holds plain serial loops kept for testing
// and benchmarking. Both evaluate every output element with the same operation
// order, so their results are bit-identical.
//
// Accumulation order for Conv2D is input channel, then kernel row, then kernel
// column; Dense accumulates in input index order. Bias is added after the sum.

namespace fes::kernels {

Tensor conv2d(const Tensor& in, const Tensor& filter, const Tensor* bias, std::size_t stride, std::size_t padding);
Tensor dense(const Tensor& in, const Tensor& weight, const Tensor* bias);
Tensor max_pool(const Tensor& in, std::size_t window, std::size_t stride);
Tensor batch_norm(const Tensor& in, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                  const Tensor& variance, float epsilon);
Tensor bias_add(const Tensor& in, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor exp(const Tensor& in);
Tensor leaky_relu(const Tensor& in, float slope);
Tensor sigmoid(const Tensor& in);
Tensor softmax(const Tensor& in);

namespace reference {

Tensor conv2d(const Tensor& in, const Tensor& filter, const Tensor* bias, std::size_t stride, std::size_t padding);
Tensor dense(const Tensor& in, const Tensor& weight, const Tensor* bias);
Tensor max_pool(const Tensor& in, std::size_t window, std::size_t stride);
Tensor batch_norm(const Tensor& in, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                  const Tensor& variance, float epsilon);
Tensor bias_add(const Tensor& in, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor exp(const Tensor& in);
Tensor leaky_relu(const Tensor& in, float slope);
Tensor sigmoid(const Tensor& in);
Tensor softmax(const Tensor& in);

} // namespace reference

/// Scalar definitions shared by both implementations.
namespace scalar {

inline float leaky_relu(float x, float slope) { return x > 0.0f ? x : x * slope; }

float sigmoid(float x);

inline bool pool_takes(float candidate, float current)
{
    // NaN wins and then sticks.
    return candidate != candidate || candidate > current;
}

inline float batch_norm(float x, float gamma, float beta, float mean, float variance, float epsilon);

} // namespace scalar

} // namespace fes::kernels

#include <cmath>

inline float fes::kernels::scalar::batch_norm(float x, float gamma, float beta, float mean, float variance,
                                              float epsilon)
{
    return gamma * ((x - mean) / std::sqrt(variance + epsilon)) + beta;
}
