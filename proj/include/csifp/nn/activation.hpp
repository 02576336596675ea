#pragma once

#include <cmath>
#include <vector>

#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

/// NaN inputs pass through so divergence stays visible downstream.
class Relu {
public:
    Tensor4 forward(const Tensor4& x) {
        mask_.assign(x.size(), 0);
        Tensor4 y = x;
        auto v = y.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] > 0.0) {
                mask_[i] = 1;
            } else if (!std::isnan(v[i])) {
                v[i] = 0.0;
            }
        }
        return y;
    }

    static Tensor4 apply(const Tensor4& x) {
        Tensor4 y = x;
        for (auto& v : y.values()) {
            v = (v > 0.0 || std::isnan(v)) ? v : 0.0;
        }
        return y;
    }

    Tensor4 backward(const Tensor4& upstream) const {
        if (upstream.size() != mask_.size()) {
            throw ShapeError("relu upstream gradient size mismatch");
        }
        Tensor4 dx = upstream;
        auto v = dx.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!mask_[i]) {
                v[i] = 0.0;
            }
        }
        return dx;
    }

private:
    std::vector<unsigned char> mask_;
};

} // namespace csifp::nn
