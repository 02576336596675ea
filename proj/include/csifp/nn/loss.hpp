#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "csifp/core/error.hpp"
#include "csifp/core/matrix.hpp"

namespace csifp::nn {

/// Max-shifted softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw ShapeError("softmax of an empty vector");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - peak);
        total += p[i];
    }
    for (auto& v : p) {
        v /= total;
    }
    return p;
}

struct NllResult {
    double loss = 0.0;
    std::vector<double> logit_grad;
};

/// -log p_true for probabilities produced by softmax, and the gradient of the
/// composed softmax + NLL with respect to the logits, p - onehot(true_class).
inline NllResult nll_loss(std::span<const double> probs, std::size_t true_class) {
    if (true_class >= probs.size()) {
        throw ShapeError("true class " + std::to_string(true_class) + " out of range for " +
                         std::to_string(probs.size()) + " classes");
    }
    NllResult r;
    r.loss = -std::log(probs[true_class]);
    r.logit_grad.assign(probs.begin(), probs.end());
    r.logit_grad[true_class] -= 1.0;
    return r;
}

/// Log-sum-exp form of -log softmax(z)[true_class].
inline double nll_from_logits(std::span<const double> logits, std::size_t true_class) {
    if (true_class >= logits.size()) {
        throw ShapeError("true class out of range");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) {
        total += std::exp(z - peak);
    }
    return -(logits[true_class] - peak - std::log(total));
}

struct BatchLoss {
    double mean_loss = 0.0;
    std::size_t correct = 0;
    RealMatrix logit_grad;  ///< gradient of the mean loss
};

/// Mean NLL over a batch of logits (rows) and labels. Predicted class is the
/// first maximal logit.
inline BatchLoss softmax_nll_batch(const RealMatrix& logits, std::span<const std::uint32_t> labels) {
    if (labels.size() != logits.rows()) {
        throw ShapeError("label count does not match batch size");
    }
    BatchLoss out;
    out.logit_grad = RealMatrix(logits.rows(), logits.cols());
    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    double total = 0.0;
    for (std::size_t n = 0; n < logits.rows(); ++n) {
        const auto z = logits.row(n);
        const auto y = labels[n];
        total += nll_from_logits(z, y);
        const auto p = softmax(z);
        auto g = out.logit_grad.row(n);
        for (std::size_t k = 0; k < p.size(); ++k) {
            g[k] = (p[k] - (k == y ? 1.0 : 0.0)) * inv_n;
        }
        const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
        if (pred == y) {
            ++out.correct;
        }
    }
    out.mean_loss = total * inv_n;
    return out;
}

} // namespace csifp::nn
