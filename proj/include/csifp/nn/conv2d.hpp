#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

struct ConvSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_h = 3;
    int kernel_w = 3;
    int stride = 1;
    int padding = 1;
};

inline std::size_t conv_out_dim(std::size_t in, int kernel, int stride, int padding) {
    const long span = static_cast<long>(in) + 2L * padding - kernel;
    if (span < 0 || stride < 1) {
        throw ShapeError("convolution kernel larger than padded input");
    }
    return static_cast<std::size_t>(span / stride + 1);
}

/// 2-D cross-correlation with zero padding and bias, lowered to a matrix
/// product per sample (im2col).
class Conv2d {
public:
    Conv2d() = default;
    explicit Conv2d(ConvSpec spec)
        : spec_(spec),
          weight_(static_cast<std::size_t>(spec.out_channels) * spec.in_channels * spec.kernel_h * spec.kernel_w),
          bias_(static_cast<std::size_t>(spec.out_channels)),
          weight_grad_(weight_.size()),
          bias_grad_(bias_.size()) {
        if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel_h < 1 || spec.kernel_w < 1 ||
            spec.stride < 1 || spec.padding < 0) {
            throw ShapeError("invalid convolution specification");
        }
    }

    const ConvSpec& spec() const noexcept { return spec_; }

    Shape4 output_shape(const Shape4& in) const {
        if (in.c != static_cast<std::size_t>(spec_.in_channels)) {
            throw ShapeError("conv expects " + std::to_string(spec_.in_channels) + " input channels, got " +
                             std::to_string(in.c));
        }
        return {in.n, static_cast<std::size_t>(spec_.out_channels), conv_out_dim(in.h, spec_.kernel_h, spec_.stride, spec_.padding),
                conv_out_dim(in.w, spec_.kernel_w, spec_.stride, spec_.padding)};
    }

    /// He initialisation: N(0, 2 / fan_in), zero bias.
    template <typename Rng>
    void initialize(Rng& rng) {
        const double fan_in = static_cast<double>(spec_.in_channels) * spec_.kernel_h * spec_.kernel_w;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (auto& w : weight_) {
            w = dist(rng);
        }
        std::fill(bias_.begin(), bias_.end(), 0.0);
    }

    double& weight(int oc, int ic, int kh, int kw) noexcept { return weight_[index(oc, ic, kh, kw)]; }
    double weight(int oc, int ic, int kh, int kw) const noexcept { return weight_[index(oc, ic, kh, kw)]; }
    std::vector<double>& weights() noexcept { return weight_; }
    std::vector<double>& biases() noexcept { return bias_; }
    const std::vector<double>& weight_grad() const noexcept { return weight_grad_; }
    const std::vector<double>& bias_grad() const noexcept { return bias_grad_; }

    Tensor4 forward(const Tensor4& x) {
        input_ = x;
        return apply(x);
    }

    /// Forward without caching (eval-only paths).
    Tensor4 apply(const Tensor4& x) const {
        const Shape4 in = x.shape();
        const Shape4 out_shape = output_shape(in);
        Tensor4 y(out_shape);
        const auto w = weight_matrix();
        const Eigen::Map<const Eigen::VectorXd> b(bias_.data(), spec_.out_channels);
        Columns cols(patch_size(), static_cast<Eigen::Index>(out_shape.plane()));
        for (std::size_t n = 0; n < in.n; ++n) {
            im2col(x, n, out_shape, cols);
            RowMap out(y.plane(n, 0), spec_.out_channels, cols.cols());
            out.noalias() = w * cols;
            out.colwise() += b;
        }
        return y;
    }

    /// Overwrites parameter gradients and returns the input gradient.
    Tensor4 backward(const Tensor4& upstream) {
        const Shape4 in = input_.shape();
        const Shape4 out_shape = output_shape(in);
        if (upstream.shape() != out_shape) {
            throw ShapeError("conv upstream gradient shape " + upstream.shape().str() + " != " + out_shape.str());
        }
        const auto w = weight_matrix();
        RowMap dw(weight_grad_.data(), spec_.out_channels, patch_size());
        Eigen::Map<Eigen::VectorXd> db(bias_grad_.data(), spec_.out_channels);
        dw.setZero();
        db.setZero();
        Tensor4 dx(in);
        Columns cols(patch_size(), static_cast<Eigen::Index>(out_shape.plane()));
        Columns dcols(cols.rows(), cols.cols());
        for (std::size_t n = 0; n < in.n; ++n) {
            im2col(input_, n, out_shape, cols);
            const ConstRowMap g(upstream.plane(n, 0), spec_.out_channels, cols.cols());
            dw.noalias() += g * cols.transpose();
            db += g.rowwise().sum();
            dcols.noalias() = w.transpose() * g;
            col2im(dcols, n, out_shape, dx);
        }
        return dx;
    }

    std::vector<ParamView> parameters() { return {{weight_, weight_grad_}, {bias_, bias_grad_}}; }

private:
    using Columns = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using RowMap = Eigen::Map<Columns>;
    using ConstRowMap = Eigen::Map<const Columns>;

    Eigen::Index patch_size() const noexcept {
        return static_cast<Eigen::Index>(spec_.in_channels) * spec_.kernel_h * spec_.kernel_w;
    }

    ConstRowMap weight_matrix() const { return {weight_.data(), spec_.out_channels, patch_size()}; }

    // Row (ic, ki, kj) of `cols` holds the input values under that tap for
    // every output position; out-of-range taps stay zero.
    void im2col(const Tensor4& x, std::size_t n, const Shape4& out, Columns& cols) const {
        cols.setZero();
        const Shape4 in = x.shape();
        for (int ic = 0; ic < spec_.in_channels; ++ic) {
            const double* src = x.plane(n, ic);
            for (int ki = 0; ki < spec_.kernel_h; ++ki) {
                for (int kj = 0; kj < spec_.kernel_w; ++kj) {
                    double* row = cols.row(static_cast<Eigen::Index>((ic * spec_.kernel_h + ki) * spec_.kernel_w + kj)).data();
                    for_each_tap(in, out, ki, kj, [&](std::size_t oh, std::size_t ih, std::size_t lo, std::size_t hi, long iw0) {
                        const double* irow = src + ih * in.w;
                        double* orow = row + oh * out.w;
                        for (std::size_t ow = lo; ow < hi; ++ow) {
                            orow[ow] = irow[iw0 + static_cast<long>(ow) * spec_.stride];
                        }
                    });
                }
            }
        }
    }

    void col2im(const Columns& cols, std::size_t n, const Shape4& out, Tensor4& dx) const {
        const Shape4 in = dx.shape();
        for (int ic = 0; ic < spec_.in_channels; ++ic) {
            double* dst = dx.plane(n, ic);
            for (int ki = 0; ki < spec_.kernel_h; ++ki) {
                for (int kj = 0; kj < spec_.kernel_w; ++kj) {
                    const double* row = cols.row(static_cast<Eigen::Index>((ic * spec_.kernel_h + ki) * spec_.kernel_w + kj)).data();
                    for_each_tap(in, out, ki, kj, [&](std::size_t oh, std::size_t ih, std::size_t lo, std::size_t hi, long iw0) {
                        double* drow = dst + ih * in.w;
                        const double* grow = row + oh * out.w;
                        for (std::size_t ow = lo; ow < hi; ++ow) {
                            drow[iw0 + static_cast<long>(ow) * spec_.stride] += grow[ow];
                        }
                    });
                }
            }
        }
    }

    std::size_t index(int oc, int ic, int kh, int kw) const noexcept {
        return ((static_cast<std::size_t>(oc) * spec_.in_channels + ic) * spec_.kernel_h + kh) * spec_.kernel_w + kw;
    }

    // Visits every output row whose tap (ki, kj) lands inside the input, with
    // the valid output-column range [ow_lo, ow_hi) and the input column of ow = 0.
    template <typename F>
    void for_each_tap(const Shape4& in, const Shape4& out, int ki, int kj, F&& f) const {
        const long s = spec_.stride;
        const long pad = spec_.padding;
        const long iw0 = kj - pad;
        // ow*s + iw0 in [0, in.w)
        long lo = iw0 >= 0 ? 0 : (-iw0 + s - 1) / s;
        long hi = (static_cast<long>(in.w) - 1 - iw0) >= 0 ? (static_cast<long>(in.w) - 1 - iw0) / s + 1 : 0;
        hi = std::min<long>(hi, static_cast<long>(out.w));
        if (lo >= hi) {
            return;
        }
        for (std::size_t oh = 0; oh < out.h; ++oh) {
            const long ih = static_cast<long>(oh) * s + ki - pad;
            if (ih < 0 || ih >= static_cast<long>(in.h)) {
                continue;
            }
            f(oh, static_cast<std::size_t>(ih), static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), iw0);
        }
    }

    ConvSpec spec_{};
    std::vector<double> weight_;
    std::vector<double> bias_;
    std::vector<double> weight_grad_;
    std::vector<double> bias_grad_;
    Tensor4 input_;
};

} // namespace csifp::nn
