#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "csifp/dataset/fingerprint_dataset.hpp"
#include "csifp/nn/loss.hpp"
#include "csifp/nn/network.hpp"
#include "support/oracles.hpp"

namespace csifp::testing {

/// 1x12x8 input, single-channel convolutions; pools keep 3x2 after two halvings.
inline nn::NetworkConfig tiny_network_config(int n_classes = 2, std::uint64_t seed = 1) {
    nn::NetworkConfig c;
    c.in_height = 12;
    c.in_width = 8;
    for (auto& s : c.conv) s.out_channels = 1;
    c.pool = {nn::PoolSpec{2, 2}, nn::PoolSpec{2, 2}, nn::PoolSpec{1, 1}, nn::PoolSpec{1, 1}};
    c.n_classes = n_classes;
    c.init_seed = seed;
    return c;
}

/// Two classes separated by the sign of a fixed template plus small noise.
inline std::vector<dataset::LabeledSample> separable_toy(std::size_t per_class, std::size_t rows, std::size_t cols,
                                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    dataset::FeatureMap pattern(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            pattern(r, c) = static_cast<float>(std::sin(0.7 * static_cast<double>(r) + 1.3 * static_cast<double>(c)));
    std::vector<dataset::LabeledSample> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::uint32_t cls = 0; cls < 2; ++cls) {
            dataset::FeatureMap t(rows, cols);
            const double sign = cls == 0 ? 1.0 : -1.0;
            for (std::size_t k = 0; k < t.size(); ++k)
                t.values()[k] = static_cast<float>(sign * pattern.values()[k] + g(rng));
            out.push_back({std::move(t), cls});
        }
    }
    return out;
}

struct GradientCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  ///< entries whose stencil straddles a ReLU/max-pool kink
};

/// Central differences of the mean train-mode NLL over every parameter and
/// input entry. An entry is treated as a kink and skipped when its forward
/// and backward one-sided slopes disagree by more than `kink_tol`.
inline GradientCheck whole_network_gradient_check(nn::Network& net, nn::Tensor4 x,
                                                  const std::vector<std::uint32_t>& labels, double eps = 1e-5,
                                                  double floor = 1e-6, double kink_tol = 1e-3) {
    auto loss = [&]() { return nn::softmax_nll_batch(net.forward(x, nn::Mode::train), labels).mean_loss; };
    const auto r = nn::softmax_nll_batch(net.forward(x, nn::Mode::train), labels);
    const double f0 = r.mean_loss;
    const auto dx = net.backward(r.logit_grad);
    const auto grads = net.flat_gradients();
    std::vector<double> analytic(grads.begin(), grads.end());
    analytic.insert(analytic.end(), dx.values().begin(), dx.values().end());

    std::vector<std::span<double>> blocks;
    for (auto& p : net.parameters()) blocks.push_back(p.value);
    blocks.push_back(x.values());

    GradientCheck out;
    std::size_t k = 0;
    for (auto block : blocks) {
        for (auto& v : block) {
            const double keep = v;
            v = keep + eps;
            const double up = loss();
            v = keep - eps;
            const double down = loss();
            v = keep;
            const double fwd = (up - f0) / eps, bwd = (f0 - down) / eps;
            const double central = (up - down) / (2 * eps);
            const double a = analytic[k++];
            if (rel_error(fwd, bwd, std::max(floor, 1e-2 * std::abs(central))) > kink_tol) {
                ++out.skipped;
                continue;
            }
            ++out.checked;
            out.max_rel_error = std::max(out.max_rel_error, rel_error(a, central, floor));
        }
    }
    return out;
}

/// Moves every parameter by U(-scale, scale) so zero-initialised biases do
/// not pin activations exactly on a kink.
inline void jitter_parameters(nn::Network& net, std::mt19937_64& rng, double scale = 0.1) {
    auto p = net.flat_parameters();
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto& v : p) v += u(rng);
    net.set_flat_parameters(p);
}

} // namespace csifp::testing
