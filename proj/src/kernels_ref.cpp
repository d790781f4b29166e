#include "fes/kernels.hpp"

#include <cmath>

namespace fes::kernels {

float scalar::sigmoid(float x)
{
    return 1.0f / (1.0f + std::exp(-x));
}

namespace reference {

Tensor conv2d(const Tensor& in, const Tensor& filter, const Tensor* bias, std::size_t stride, std::size_t padding)
{
    const auto cin = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
    const auto cout = filter.shape()[0], k = filter.shape()[2];
    const auto oh = (h + 2 * padding - k) / stride + 1, ow = (w + 2 * padding - k) / stride + 1;
    Tensor out({cout, oh, ow});
    for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                float acc = 0.0f;
                for (std::size_t ci = 0; ci < cin; ++ci)
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h))
                            continue;
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                continue;
                            acc += filter[((co * cin + ci) * k + ky) * k + kx] *
                                   in[(ci * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
                        }
                    }
                if (bias)
                    acc += (*bias)[co];
                out[(co * oh + oy) * ow + ox] = acc;
            }
    return out;
}

Tensor dense(const Tensor& in, const Tensor& weight, const Tensor* bias)
{
    const auto nout = weight.shape()[0], nin = weight.shape()[1];
    Tensor out({1, nout});
    for (std::size_t o = 0; o < nout; ++o) {
        float acc = 0.0f;
        for (std::size_t i = 0; i < nin; ++i)
            acc += weight[o * nin + i] * in[i];
        if (bias)
            acc += (*bias)[o];
        out[o] = acc;
    }
    return out;
}

Tensor max_pool(const Tensor& in, std::size_t window, std::size_t stride)
{
    const auto c = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
    const auto oh = (h - window) / stride + 1, ow = (w - window) / stride + 1;
    Tensor out({c, oh, ow});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                float m = in[(ch * h + oy * stride) * w + ox * stride];
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        float v = in[(ch * h + oy * stride + ky) * w + ox * stride + kx];
                        if (scalar::pool_takes(v, m))
                            m = v;
                    }
                out[(ch * oh + oy) * ow + ox] = m;
            }
    return out;
}

Tensor batch_norm(const Tensor& in, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                  const Tensor& variance, float epsilon)
{
    const auto c = in.shape()[0], plane = in.shape()[1] * in.shape()[2];
    Tensor out(in.shape());
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i)
            out[ch * plane + i] =
                scalar::batch_norm(in[ch * plane + i], gamma[ch], beta[ch], mean[ch], variance[ch], epsilon);
    return out;
}

Tensor bias_add(const Tensor& in, const Tensor& bias)
{
    const auto n = bias.size(), inner = in.size() / n;
    Tensor out(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] + bias[in.rank() == 3 ? i / inner : i % n];
    return out;
}

Tensor add(const Tensor& a, const Tensor& b)
{
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] + b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] * b[i];
    return out;
}

Tensor div(const Tensor& a, const Tensor& b)
{
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] / b[i];
    return out;
}

Tensor exp(const Tensor& in)
{
    Tensor out(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = std::exp(in[i]);
    return out;
}

Tensor leaky_relu(const Tensor& in, float slope)
{
    Tensor out(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = scalar::leaky_relu(in[i], slope);
    return out;
}

Tensor sigmoid(const Tensor& in)
{
    Tensor out(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = scalar::sigmoid(in[i]);
    return out;
}

Tensor softmax(const Tensor& in)
{
    Tensor out(in.shape());
    float m = in[0];
    for (std::size_t i = 1; i < in.size(); ++i)
        if (scalar::pool_takes(in[i], m))
            m = in[i];
    float sum = 0.0f;
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = std::exp(in[i] - m);
        sum += out[i];
    }
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] /= sum;
    return out;
}

} // namespace reference
} // namespace fes::kernels
