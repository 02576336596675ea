#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "csifp/core/matrix.hpp"
#include "csifp/nn/activation.hpp"
#include "csifp/nn/batchnorm.hpp"
#include "csifp/nn/conv2d.hpp"
#include "csifp/nn/linear.hpp"
#include "csifp/nn/pooling.hpp"
#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

inline constexpr std::size_t kConvStages = 5;
inline constexpr std::size_t kPoolStages = 4;

struct ConvStage {
    int out_channels = 8;
    int kernel_h = 3;
    int kernel_w = 3;
    int stride = 1;
    int padding = 1;
    friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

/// Layer order: BatchNorm2d -> [conv -> relu -> pool] x4 -> conv -> relu ->
/// flatten -> BatchNorm1d -> linear.
struct NetworkConfig {
    int in_channels = 1;
    int in_height = 240;
    int in_width = 64;
    std::array<ConvStage, kConvStages> conv{ConvStage{8}, ConvStage{16}, ConvStage{32}, ConvStage{64}, ConvStage{64}};
    std::array<PoolSpec, kPoolStages> pool{PoolSpec{}, PoolSpec{}, PoolSpec{}, PoolSpec{}};
    int n_classes = 30;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.1;
    std::uint64_t init_seed = 1;

    friend bool operator==(const NetworkConfig& a, const NetworkConfig& b) {
        auto pool_eq = [](const PoolSpec& x, const PoolSpec& y) { return x.window == y.window && x.stride == y.stride; };
        for (std::size_t i = 0; i < kPoolStages; ++i) {
            if (!pool_eq(a.pool[i], b.pool[i])) {
                return false;
            }
        }
        return a.in_channels == b.in_channels && a.in_height == b.in_height && a.in_width == b.in_width &&
               a.conv == b.conv && a.n_classes == b.n_classes && a.bn_epsilon == b.bn_epsilon &&
               a.bn_momentum == b.bn_momentum && a.init_seed == b.init_seed;
    }
};

class Network {
public:
    explicit Network(NetworkConfig cfg) : cfg_(cfg) {
        if (cfg.in_channels < 1 || cfg.in_height < 1 || cfg.in_width < 1 || cfg.n_classes < 1) {
            throw ShapeError("network input shape and class count must be positive");
        }
        Shape4 s{1, static_cast<std::size_t>(cfg.in_channels), static_cast<std::size_t>(cfg.in_height),
                 static_cast<std::size_t>(cfg.in_width)};
        bn_in_ = BatchNorm(s.c, cfg.bn_epsilon, cfg.bn_momentum);
        int channels = cfg.in_channels;
        for (std::size_t i = 0; i < kConvStages; ++i) {
            const auto& st = cfg.conv[i];
            conv_[i] = Conv2d({channels, st.out_channels, st.kernel_h, st.kernel_w, st.stride, st.padding});
            s = conv_[i].output_shape(s);
            channels = st.out_channels;
            if (i < kPoolStages) {
                pool_[i] = MaxPool2d(cfg.pool[i]);
                s = pool_[i].output_shape(s);
            }
        }
        pre_flatten_ = s;
        flatten_length_ = s.per_sample();
        bn_out_ = BatchNorm(flatten_length_, cfg.bn_epsilon, cfg.bn_momentum);
        head_ = Linear(flatten_length_, static_cast<std::size_t>(cfg.n_classes));

        std::mt19937_64 rng(cfg.init_seed);
        for (auto& c : conv_) {
            c.initialize(rng);
        }
        head_.initialize(rng);
    }

    const NetworkConfig& config() const noexcept { return cfg_; }
    std::size_t flatten_length() const noexcept { return flatten_length_; }
    Shape4 input_shape(std::size_t batch) const noexcept {
        return {batch, static_cast<std::size_t>(cfg_.in_channels), static_cast<std::size_t>(cfg_.in_height),
                static_cast<std::size_t>(cfg_.in_width)};
    }

    /// Logits (batch x classes). Caches activations for backward.
    RealMatrix forward(const Tensor4& x, Mode mode) {
        check_input(x.shape());
        Tensor4 h = bn_in_.forward(x, mode);
        for (std::size_t i = 0; i < kConvStages; ++i) {
            h = relu_[i].forward(conv_[i].forward(h));
            if (i < kPoolStages) {
                h = pool_[i].forward(h);
            }
        }
        h = bn_out_.forward(flatten(h), mode);
        return to_matrix(head_.forward(h));
    }

    /// Eval-mode logits without touching cached state.
    RealMatrix predict(const Tensor4& x) const {
        check_input(x.shape());
        Tensor4 h = bn_in_.apply(x);
        for (std::size_t i = 0; i < kConvStages; ++i) {
            h = Relu::apply(conv_[i].apply(h));
            if (i < kPoolStages) {
                h = pool_[i].apply(h);
            }
        }
        h = bn_out_.apply(flatten(h));
        return to_matrix(head_.apply(h));
    }

    /// Backpropagates the gradient of the loss w.r.t. the logits of the last
    /// forward call; parameter gradients are overwritten. Returns the input gradient.
    Tensor4 backward(const RealMatrix& logit_grad) {
        Tensor4 g({logit_grad.rows(), logit_grad.cols(), 1, 1}, logit_grad.storage());
        g = bn_out_.backward(head_.backward(g));
        Shape4 pre = pre_flatten_;
        pre.n = logit_grad.rows();
        g = unflatten(std::move(g), pre);
        for (std::size_t i = kConvStages; i-- > 0;) {
            if (i < kPoolStages) {
                g = pool_[i].backward(g);
            }
            g = conv_[i].backward(relu_[i].backward(g));
        }
        return bn_in_.backward(g);
    }

    /// Trainable tensors in a fixed order: bn_in, conv1..5, bn_out, head.
    std::vector<ParamView> parameters() {
        std::vector<ParamView> out;
        auto append = [&](std::vector<ParamView> v) { out.insert(out.end(), v.begin(), v.end()); };
        append(bn_in_.parameters());
        for (auto& c : conv_) {
            append(c.parameters());
        }
        append(bn_out_.parameters());
        append(head_.parameters());
        return out;
    }

    /// Batch-norm running statistics in a fixed order.
    std::vector<std::span<double>> buffers() {
        return {bn_in_.running_mean(), bn_in_.running_var(), bn_out_.running_mean(), bn_out_.running_var()};
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (const auto& p : parameters()) {
            n += p.value.size();
        }
        return n;
    }

    std::size_t buffer_count() {
        std::size_t n = 0;
        for (const auto& b : buffers()) {
            n += b.size();
        }
        return n;
    }

    std::vector<double> flat_parameters() {
        std::vector<double> out;
        for (const auto& p : parameters()) {
            out.insert(out.end(), p.value.begin(), p.value.end());
        }
        return out;
    }

    std::vector<double> flat_gradients() {
        std::vector<double> out;
        for (const auto& p : parameters()) {
            out.insert(out.end(), p.grad.begin(), p.grad.end());
        }
        return out;
    }

    std::vector<double> flat_buffers() {
        std::vector<double> out;
        for (const auto& b : buffers()) {
            out.insert(out.end(), b.begin(), b.end());
        }
        return out;
    }

    void set_flat_parameters(std::span<const double> values) {
        if (values.size() != parameter_count()) {
            throw ShapeError("parameter vector length " + std::to_string(values.size()) + " does not match network (" +
                             std::to_string(parameter_count()) + ")");
        }
        std::size_t k = 0;
        for (auto& p : parameters()) {
            for (auto& v : p.value) {
                v = values[k++];
            }
        }
    }

    void set_flat_buffers(std::span<const double> values) {
        if (values.size() != buffer_count()) {
            throw ShapeError("buffer vector length does not match network");
        }
        std::size_t k = 0;
        for (auto& b : buffers()) {
            for (auto& v : b) {
                v = values[k++];
            }
        }
    }

    BatchNorm& input_norm() noexcept { return bn_in_; }
    BatchNorm& feature_norm() noexcept { return bn_out_; }
    Conv2d& conv(std::size_t i) noexcept { return conv_[i]; }
    Linear& head() noexcept { return head_; }

private:
    void check_input(const Shape4& s) const {
        if (s.c != static_cast<std::size_t>(cfg_.in_channels) || s.h != static_cast<std::size_t>(cfg_.in_height) ||
            s.w != static_cast<std::size_t>(cfg_.in_width)) {
            throw ShapeError("network input " + s.str() + " does not match configured " + input_shape(s.n).str());
        }
    }

    static RealMatrix to_matrix(const Tensor4& t) {
        return RealMatrix(t.shape().n, t.shape().c, std::vector<double>(t.values().begin(), t.values().end()));
    }

    NetworkConfig cfg_;
    BatchNorm bn_in_;
    std::array<Conv2d, kConvStages> conv_;
    std::array<Relu, kConvStages> relu_;
    std::array<MaxPool2d, kPoolStages> pool_;
    BatchNorm bn_out_;
    Linear head_;
    Shape4 pre_flatten_{};
    std::size_t flatten_length_ = 0;
};

} // namespace csifp::nn
