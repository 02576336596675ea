#pragma once

#include <cmath>
#include <vector>

#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

/// Per-channel batch normalisation over (n, h, w). With h = w = 1 this is
/// the 1-D variant over a flattened feature vector.
///
/// Running statistics follow r <- (1 - momentum) r + momentum * batch_stat,
/// with the unbiased batch variance feeding the running variance.
class BatchNorm {
public:
    BatchNorm() = default;
    BatchNorm(std::size_t channels, double epsilon, double momentum)
        : epsilon_(epsilon),
          momentum_(momentum),
          gamma_(channels, 1.0),
          beta_(channels, 0.0),
          gamma_grad_(channels, 0.0),
          beta_grad_(channels, 0.0),
          running_mean_(channels, 0.0),
          running_var_(channels, 1.0) {}

    std::size_t channels() const noexcept { return gamma_.size(); }
    std::vector<double>& gamma() noexcept { return gamma_; }
    std::vector<double>& beta() noexcept { return beta_; }
    std::vector<double>& running_mean() noexcept { return running_mean_; }
    std::vector<double>& running_var() noexcept { return running_var_; }
    const std::vector<double>& gamma_grad() const noexcept { return gamma_grad_; }
    const std::vector<double>& beta_grad() const noexcept { return beta_grad_; }

    Tensor4 forward(const Tensor4& x, Mode mode) {
        check(x.shape());
        mode_ = mode;
        const Shape4 s = x.shape();
        const std::size_t pop = s.n * s.plane();
        if (mode == Mode::eval) {
            inv_std_.resize(channels());
            for (std::size_t c = 0; c < channels(); ++c) {
                inv_std_[c] = 1.0 / std::sqrt(running_var_[c] + epsilon_);
            }
            return apply(x);
        }
        if (pop < 2) {
            throw ShapeError("batch norm in train mode needs at least 2 values per channel");
        }
        xhat_ = Tensor4(s);
        inv_std_.assign(channels(), 0.0);
        Tensor4 y(s);
        for (std::size_t c = 0; c < channels(); ++c) {
            double mean = 0.0;
            for (std::size_t n = 0; n < s.n; ++n) {
                const double* p = x.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    mean += p[i];
                }
            }
            mean /= static_cast<double>(pop);
            double var = 0.0;
            for (std::size_t n = 0; n < s.n; ++n) {
                const double* p = x.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    const double d = p[i] - mean;
                    var += d * d;
                }
            }
            var /= static_cast<double>(pop);
            const double inv = 1.0 / std::sqrt(var + epsilon_);
            inv_std_[c] = inv;
            for (std::size_t n = 0; n < s.n; ++n) {
                const double* p = x.plane(n, c);
                double* h = xhat_.plane(n, c);
                double* o = y.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    h[i] = (p[i] - mean) * inv;
                    o[i] = gamma_[c] * h[i] + beta_[c];
                }
            }
            const double unbiased = var * static_cast<double>(pop) / static_cast<double>(pop - 1);
            running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
            running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
        }
        return y;
    }

    /// Eval-mode transform using running statistics, no caching.
    Tensor4 apply(const Tensor4& x) const {
        check(x.shape());
        const Shape4 s = x.shape();
        Tensor4 y(s);
        for (std::size_t c = 0; c < channels(); ++c) {
            const double inv = 1.0 / std::sqrt(running_var_[c] + epsilon_);
            const double scale = gamma_[c] * inv;
            const double shift = beta_[c] - running_mean_[c] * scale;
            for (std::size_t n = 0; n < s.n; ++n) {
                const double* p = x.plane(n, c);
                double* o = y.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    o[i] = p[i] * scale + shift;
                }
            }
        }
        return y;
    }

    Tensor4 backward(const Tensor4& upstream) {
        const Shape4 s = upstream.shape();
        check(s);
        Tensor4 dx(s);
        if (mode_ == Mode::eval) {
            for (std::size_t c = 0; c < channels(); ++c) {
                const double scale = gamma_[c] * inv_std_[c];
                for (std::size_t n = 0; n < s.n; ++n) {
                    const double* g = upstream.plane(n, c);
                    double* d = dx.plane(n, c);
                    for (std::size_t i = 0; i < s.plane(); ++i) {
                        d[i] = g[i] * scale;
                    }
                }
            }
            return dx;
        }
        if (xhat_.shape() != s) {
            throw ShapeError("batch norm backward without matching train-mode forward");
        }
        const double pop = static_cast<double>(s.n * s.plane());
        for (std::size_t c = 0; c < channels(); ++c) {
            double sum_g = 0.0;
            double sum_gx = 0.0;
            for (std::size_t n = 0; n < s.n; ++n) {
                const double* g = upstream.plane(n, c);
                const double* h = xhat_.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    sum_g += g[i];
                    sum_gx += g[i] * h[i];
                }
            }
            gamma_grad_[c] = sum_gx;
            beta_grad_[c] = sum_g;
            const double k = gamma_[c] * inv_std_[c] / pop;
            for (std::size_t n = 0; n < s.n; ++n) {
                const double* g = upstream.plane(n, c);
                const double* h = xhat_.plane(n, c);
                double* d = dx.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    d[i] = k * (pop * g[i] - sum_g - h[i] * sum_gx);
                }
            }
        }
        return dx;
    }

    std::vector<ParamView> parameters() { return {{gamma_, gamma_grad_}, {beta_, beta_grad_}}; }

    double epsilon() const noexcept { return epsilon_; }
    double momentum() const noexcept { return momentum_; }

private:
    void check(const Shape4& s) const {
        if (s.c != channels()) {
            throw ShapeError("batch norm expects " + std::to_string(channels()) + " channels, got " +
                             std::to_string(s.c));
        }
    }

    double epsilon_ = 1e-5;
    double momentum_ = 0.1;
    std::vector<double> gamma_;
    std::vector<double> beta_;
    std::vector<double> gamma_grad_;
    std::vector<double> beta_grad_;
    std::vector<double> running_mean_;
    std::vector<double> running_var_;
    Mode mode_ = Mode::eval;
    Tensor4 xhat_;
    std::vector<double> inv_std_;
};

} // namespace csifp::nn
