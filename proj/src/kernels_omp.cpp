#include "fes/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstdint>

namespace fes::kernels {

namespace {

// Below this many scalar operations a parallel region costs more than it saves.
constexpr std::size_t min_parallel_work = 1 << 14;

bool go_parallel(std::size_t work)
{
    return work >= min_parallel_work && !omp_in_parallel();
}

template <typename F>
Tensor elementwise(const Tensor& in, F&& f)
{
    Tensor out(in.shape());
    const auto n = static_cast<std::int64_t>(in.size());
    const float* src = in.data().data();
    float* dst = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(in.size()))
    for (std::int64_t i = 0; i < n; ++i)
        dst[i] = f(src[i]);
    return out;
}

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, F&& f)
{
    Tensor out(a.shape());
    const auto n = static_cast<std::int64_t>(a.size());
    const float* pa = a.data().data();
    const float* pb = b.data().data();
    float* dst = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(a.size()))
    for (std::int64_t i = 0; i < n; ++i)
        dst[i] = f(pa[i], pb[i]);
    return out;
}

} // namespace

Tensor conv2d(const Tensor& in, const Tensor& filter, const Tensor* bias, std::size_t stride, std::size_t padding)
{
    const auto cin = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
    const auto cout = filter.shape()[0], k = filter.shape()[2];
    const auto oh = (h + 2 * padding - k) / stride + 1, ow = (w + 2 * padding - k) / stride + 1;
    Tensor out({cout, oh, ow});
    const float* x = in.data().data();
    const float* wt = filter.data().data();
    float* y = out.data().data();
    const auto rows = static_cast<std::int64_t>(cout * oh);
    const auto pad = static_cast<std::ptrdiff_t>(padding);
    const auto sh = static_cast<std::ptrdiff_t>(h), sw = static_cast<std::ptrdiff_t>(w);

#pragma omp parallel for schedule(static) if (go_parallel(out.size() * cin * k * k))
    for (std::int64_t row = 0; row < rows; ++row) {
        const auto co = static_cast<std::size_t>(row) / oh, oy = static_cast<std::size_t>(row) % oh;
        const float* wco = wt + co * cin * k * k;
        for (std::size_t ox = 0; ox < ow; ++ox) {
            float acc = 0.0f;
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const float* xc = x + ci * h * w;
                const float* wc = wco + ci * k * k;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
                    if (iy < 0 || iy >= sh)
                        continue;
                    const float* xrow = xc + iy * sw;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
                        if (ix < 0 || ix >= sw)
                            continue;
                        acc += wc[ky * k + kx] * xrow[ix];
                    }
                }
            }
            if (bias)
                acc += (*bias)[co];
            y[row * static_cast<std::int64_t>(ow) + static_cast<std::int64_t>(ox)] = acc;
        }
    }
    return out;
}

Tensor dense(const Tensor& in, const Tensor& weight, const Tensor* bias)
{
    const auto nout = weight.shape()[0], nin = weight.shape()[1];
    Tensor out({1, nout});
    const float* x = in.data().data();
    const float* wt = weight.data().data();
    float* y = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(nout * nin))
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(nout); ++o) {
        const float* wrow = wt + static_cast<std::size_t>(o) * nin;
        float acc = 0.0f;
        for (std::size_t i = 0; i < nin; ++i)
            acc += wrow[i] * x[i];
        if (bias)
            acc += (*bias)[static_cast<std::size_t>(o)];
        y[o] = acc;
    }
    return out;
}

Tensor max_pool(const Tensor& in, std::size_t window, std::size_t stride)
{
    const auto c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
    const auto oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
    Tensor out({c, oh, ow});
    const float* x = in.data().data();
    float* y = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(out.size() * window * window))
    for (std::int64_t plane = 0; plane < static_cast<std::int64_t>(c); ++plane) {
        const float* xc = x + static_cast<std::size_t>(plane) * h * w;
        float* yc = y + static_cast<std::size_t>(plane) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                float m = xc[oy * stride * w + ox * stride];
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        float v = xc[(oy * stride + ky) * w + ox * stride + kx];
                        if (scalar::pool_takes(v, m))
                            m = v;
                    }
                yc[oy * ow + ox] = m;
            }
    }
    return out;
}

Tensor batch_norm(const Tensor& in, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                  const Tensor& variance, float epsilon)
{
    const auto c = in.shape()[0], plane = in.shape()[1] * in.shape()[2];
    Tensor out(in.shape());
    const float* x = in.data().data();
    float* y = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(in.size()))
    for (std::int64_t ch = 0; ch < static_cast<std::int64_t>(c); ++ch) {
        const auto cc = static_cast<std::size_t>(ch);
        for (std::size_t i = 0; i < plane; ++i)
            y[cc * plane + i] =
                scalar::batch_norm(x[cc * plane + i], gamma[cc], beta[cc], mean[cc], variance[cc], epsilon);
    }
    return out;
}

Tensor bias_add(const Tensor& in, const Tensor& bias)
{
    const auto n = bias.size(), inner = in.size() / n;
    const bool per_channel = in.rank() == 3;
    Tensor out(in.shape());
    const float* x = in.data().data();
    const float* b = bias.data().data();
    float* y = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(in.size()))
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(in.size()); ++i) {
        const auto u = static_cast<std::size_t>(i);
        y[i] = x[i] + b[per_channel ? u / inner : u % n];
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b)
{
    return binary(a, b, [](float p, float q) { return p + q; });
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    return binary(a, b, [](float p, float q) { return p * q; });
}

Tensor div(const Tensor& a, const Tensor& b)
{
    return binary(a, b, [](float p, float q) { return p / q; });
}

Tensor exp(const Tensor& in)
{
    return elementwise(in, [](float v) { return std::exp(v); });
}

Tensor leaky_relu(const Tensor& in, float slope)
{
    return elementwise(in, [slope](float v) { return scalar::leaky_relu(v, slope); });
}

Tensor sigmoid(const Tensor& in)
{
    return elementwise(in, [](float v) { return scalar::sigmoid(v); });
}

Tensor softmax(const Tensor& in)
{
    // Max and sum are serial: their order fixes the result bits.
    float m = in[0];
    for (std::size_t i = 1; i < in.size(); ++i)
        if (scalar::pool_takes(in[i], m))
            m = in[i];
    Tensor out = elementwise(in, [m](float v) { return std::exp(v - m); });
    float sum = 0.0f;
    for (std::size_t i = 0; i < out.size(); ++i)
        sum += out[i];
    float* y = out.data().data();
#pragma omp parallel for schedule(static) if (go_parallel(out.size()))
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(out.size()); ++i)
        y[i] /= sum;
    return out;
}

} // namespace fes::kernels
