#pragma once

#include <cmath>
#include <vector>

#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

struct PoolSpec {
    int window = 2;
    int stride = 2;
};

/// Square-window max pooling without padding. Ties resolve to the first
/// position in row-major window order; a NaN in the window wins.
class MaxPool2d {
public:
    MaxPool2d() = default;
    explicit MaxPool2d(PoolSpec spec) : spec_(spec) {
        if (spec.window < 1 || spec.stride < 1) {
            throw ShapeError("pool window and stride must be >= 1");
        }
    }

    const PoolSpec& spec() const noexcept { return spec_; }

    Shape4 output_shape(const Shape4& in) const {
        const auto k = static_cast<std::size_t>(spec_.window);
        if (k > in.h || k > in.w) {
            throw ShapeError("pool window " + std::to_string(k) + " larger than input " + in.str());
        }
        const auto s = static_cast<std::size_t>(spec_.stride);
        return {in.n, in.c, (in.h - k) / s + 1, (in.w - k) / s + 1};
    }

    Tensor4 forward(const Tensor4& x) {
        input_shape_ = x.shape();
        return run(x, &argmax_);
    }

    Tensor4 apply(const Tensor4& x) const { return run(x, nullptr); }

    Tensor4 backward(const Tensor4& upstream) const {
        if (upstream.size() != argmax_.size()) {
            throw ShapeError("maxpool upstream gradient size mismatch");
        }
        Tensor4 dx(input_shape_);
        auto dst = dx.values();
        auto src = upstream.values();
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[argmax_[i]] += src[i];
        }
        return dx;
    }

private:
    Tensor4 run(const Tensor4& x, std::vector<std::size_t>* argmax) const {
        const Shape4 in = x.shape();
        const Shape4 out_shape = output_shape(in);
        Tensor4 y(out_shape);
        if (argmax) {
            argmax->assign(out_shape.count(), 0);
        }
        const auto k = static_cast<std::size_t>(spec_.window);
        const auto s = static_cast<std::size_t>(spec_.stride);
        std::size_t o = 0;
        auto xv = x.values();
        for (std::size_t n = 0; n < in.n; ++n) {
            for (std::size_t c = 0; c < in.c; ++c) {
                const std::size_t base = (n * in.c + c) * in.plane();
                for (std::size_t oh = 0; oh < out_shape.h; ++oh) {
                    for (std::size_t ow = 0; ow < out_shape.w; ++ow, ++o) {
                        std::size_t best = base + oh * s * in.w + ow * s;
                        for (std::size_t i = 0; i < k; ++i) {
                            for (std::size_t j = 0; j < k; ++j) {
                                const std::size_t idx = base + (oh * s + i) * in.w + ow * s + j;
                                if (xv[idx] > xv[best] || (std::isnan(xv[idx]) && !std::isnan(xv[best]))) {
                                    best = idx;
                                }
                            }
                        }
                        y.values()[o] = xv[best];
                        if (argmax) {
                            (*argmax)[o] = best;
                        }
                    }
                }
            }
        }
        return y;
    }

    PoolSpec spec_{};
    Shape4 input_shape_{};
    std::vector<std::size_t> argmax_;
};

} // namespace csifp::nn
