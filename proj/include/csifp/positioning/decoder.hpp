#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "csifp/channel/scene.hpp"
#include "csifp/core/error.hpp"
#include "csifp/dataset/fingerprint_dataset.hpp"

namespace csifp::positioning {

using dataset::ReferenceMap;

struct PositionEstimate {
    double x = 0.0;
    double y = 0.0;
    std::vector<std::size_t> selected_classes;
    std::vector<double> selected_weights;
};

inline constexpr std::size_t kDefaultTopR = 4;

inline void validate_reference_map(const ReferenceMap& map) {
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i].class_id != i) {
            throw ConfigError("reference map class ids must be contiguous from 0");
        }
        if (!std::isfinite(map[i].x) || !std::isfinite(map[i].y)) {
            throw ConfigError("reference map coordinates must be finite");
        }
    }
}

/// Top-R weighted centroid: keep the R most probable reference points (ties
/// to the lower class id), renormalise their probabilities and average their
/// coordinates with those weights.
inline PositionEstimate predict_position(std::span<const double> probs, const ReferenceMap& ref_map,
                                         std::size_t top_r = kDefaultTopR) {
    if (probs.size() != ref_map.size()) {
        throw ShapeError("probability vector length does not match the reference map");
    }
    if (top_r < 1 || top_r > probs.size()) {
        throw ConfigError("R must lie in [1, N], got " + std::to_string(top_r));
    }
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_r), order.end(),
                      [&](std::size_t a, std::size_t b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });
    order.resize(top_r);

    double total = 0.0;
    for (auto k : order) {
        total += probs[k];
    }
    if (!(total > 0.0)) {
        throw NumericError("selected probabilities sum to zero");
    }
    PositionEstimate est;
    est.selected_classes = order;
    est.selected_weights.reserve(top_r);
    for (auto k : order) {
        const double w = probs[k] / total;
        est.selected_weights.push_back(w);
        est.x += w * ref_map[k].x;
        est.y += w * ref_map[k].y;
    }
    return est;
}

inline double euclidean_error(const PositionEstimate& estimate, channel::Point2 truth) {
    return std::hypot(estimate.x - truth.x, estimate.y - truth.y);
}

} // namespace csifp::positioning
