#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "csifp/nn/tensor4.hpp"

namespace csifp::nn {

struct AdamWHyper {
    double learning_rate = 1e-6;
    double weight_decay = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    friend bool operator==(const AdamWHyper&, const AdamWHyper&) = default;
};

struct AdamWState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    friend bool operator==(const AdamWState&, const AdamWState&) = default;
};

/// AdamW with decoupled weight decay:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta (1 - lr wd) - lr mhat / (sqrt(vhat) + eps)
class AdamW {
public:
    AdamW() = default;
    explicit AdamW(AdamWHyper hyper) : hyper_(hyper) {}

    const AdamWHyper& hyper() const noexcept { return hyper_; }
    AdamWHyper& hyper() noexcept { return hyper_; }
    const AdamWState& state() const noexcept { return state_; }
    void set_state(AdamWState s) { state_ = std::move(s); }

    void step(const std::vector<ParamView>& params) {
        std::size_t total = 0;
        for (const auto& p : params) {
            if (p.value.size() != p.grad.size()) {
                throw ShapeError("parameter and gradient sizes differ");
            }
            total += p.value.size();
        }
        if (state_.m.empty() && state_.t == 0) {
            state_.m.assign(total, 0.0);
            state_.v.assign(total, 0.0);
        }
        if (state_.m.size() != total || state_.v.size() != total) {
            throw ShapeError("optimizer state does not match parameter count");
        }
        ++state_.t;
        const auto& h = hyper_;
        const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state_.t));
        const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state_.t));
        const double decay = 1.0 - h.learning_rate * h.weight_decay;
        std::size_t k = 0;
        for (const auto& p : params) {
            for (std::size_t i = 0; i < p.value.size(); ++i, ++k) {
                const double g = p.grad[i];
                double& m = state_.m[k];
                double& v = state_.v[k];
                m = h.beta1 * m + (1.0 - h.beta1) * g;
                v = h.beta2 * v + (1.0 - h.beta2) * g * g;
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                p.value[i] = p.value[i] * decay - h.learning_rate * (mhat / (std::sqrt(vhat) + h.epsilon));
            }
        }
    }

private:
    AdamWHyper hyper_{};
    AdamWState state_{};
};

} // namespace csifp::nn
