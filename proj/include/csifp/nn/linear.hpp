#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

/// Fully connected layer z = W x + b on (n, features, 1, 1) tensors.
class Linear {
public:
    Linear() = default;
    Linear(std::size_t in_features, std::size_t out_features)
        : in_(in_features),
          out_(out_features),
          weight_(in_features * out_features),
          bias_(out_features),
          weight_grad_(weight_.size()),
          bias_grad_(out_features) {
        if (in_features == 0 || out_features == 0) {
            throw ShapeError("linear layer needs positive feature counts");
        }
    }

    std::size_t in_features() const noexcept { return in_; }
    std::size_t out_features() const noexcept { return out_; }

    /// N(0, scale^2 / fan_in). The classifier head uses a small scale so the
    /// untrained softmax starts close to uniform.
    template <typename Rng>
    void initialize(Rng& rng, double scale = 0.1) {
        std::normal_distribution<double> dist(0.0, scale / std::sqrt(static_cast<double>(in_)));
        for (auto& w : weight_) {
            w = dist(rng);
        }
        std::fill(bias_.begin(), bias_.end(), 0.0);
    }

    double& weight(std::size_t o, std::size_t i) noexcept { return weight_[o * in_ + i]; }
    std::vector<double>& weights() noexcept { return weight_; }
    std::vector<double>& biases() noexcept { return bias_; }
    const std::vector<double>& weight_grad() const noexcept { return weight_grad_; }
    const std::vector<double>& bias_grad() const noexcept { return bias_grad_; }

    Tensor4 forward(const Tensor4& x) {
        input_ = x;
        return apply(x);
    }

    Tensor4 apply(const Tensor4& x) const {
        check(x.shape());
        const std::size_t batch = x.shape().n;
        Tensor4 y({batch, out_, 1, 1});
        auto xv = x.values();
        auto yv = y.values();
        for (std::size_t n = 0; n < batch; ++n) {
            const double* xi = xv.data() + n * in_;
            for (std::size_t o = 0; o < out_; ++o) {
                const double* w = weight_.data() + o * in_;
                double acc = bias_[o];
                for (std::size_t i = 0; i < in_; ++i) {
                    acc += w[i] * xi[i];
                }
                yv[n * out_ + o] = acc;
            }
        }
        return y;
    }

    Tensor4 backward(const Tensor4& upstream) {
        const std::size_t batch = input_.shape().n;
        if (upstream.shape() != Shape4{batch, out_, 1, 1}) {
            throw ShapeError("linear upstream gradient shape mismatch");
        }
        std::fill(weight_grad_.begin(), weight_grad_.end(), 0.0);
        std::fill(bias_grad_.begin(), bias_grad_.end(), 0.0);
        Tensor4 dx(input_.shape());
        auto xv = input_.values();
        auto gv = upstream.values();
        auto dv = dx.values();
        for (std::size_t n = 0; n < batch; ++n) {
            const double* xi = xv.data() + n * in_;
            double* di = dv.data() + n * in_;
            for (std::size_t o = 0; o < out_; ++o) {
                const double g = gv[n * out_ + o];
                bias_grad_[o] += g;
                const double* w = weight_.data() + o * in_;
                double* wg = weight_grad_.data() + o * in_;
                for (std::size_t i = 0; i < in_; ++i) {
                    wg[i] += g * xi[i];
                    di[i] += g * w[i];
                }
            }
        }
        return dx;
    }

    std::vector<ParamView> parameters() { return {{weight_, weight_grad_}, {bias_, bias_grad_}}; }

private:
    void check(const Shape4& s) const {
        if (s.per_sample() != in_ || s.h != 1 || s.w != 1) {
            throw ShapeError("linear layer expects (n, " + std::to_string(in_) + ", 1, 1), got " + s.str());
        }
    }

    std::size_t in_ = 0;
    std::size_t out_ = 0;
    std::vector<double> weight_;
    std::vector<double> bias_;
    std::vector<double> weight_grad_;
    std::vector<double> bias_grad_;
    Tensor4 input_;
};

} // namespace csifp::nn
