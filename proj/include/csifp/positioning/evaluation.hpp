#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "csifp/nn/checkpoint.hpp"
#include "csifp/nn/loss.hpp"
#include "csifp/nn/trainer.hpp"
#include "csifp/positioning/decoder.hpp"

namespace csifp::positioning {

struct SampleError {
    std::uint32_t test_point_id = 0;
    std::size_t sample_index = 0;  ///< index within its test point
    double error_m = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct PointSummary {
    std::uint32_t test_point_id = 0;
    channel::Point2 truth;
    std::size_t samples = 0;
    double mean_error_m = 0.0;
};

struct ErrorReport {
    std::vector<SampleError> samples;
    std::vector<PointSummary> points;  ///< ascending test_point_id
    double overall_mean_m = 0.0;
    double median_latency_s = 0.0;
    std::size_t top_r = kDefaultTopR;

    bool empty() const noexcept { return samples.empty(); }
};

/// Per-sample eval-mode inference and top-R decoding against the test set.
/// Latency is the median wall-clock time of a single-sample forward pass
/// plus decoding.
inline ErrorReport evaluate(const nn::Network& net, std::span<const dataset::TestRecord> test_set,
                            const ReferenceMap& ref_map, std::size_t top_r = kDefaultTopR) {
    validate_reference_map(ref_map);
    if (ref_map.size() != static_cast<std::size_t>(net.config().n_classes)) {
        throw ShapeError("reference map size does not match the network's class count");
    }
    ErrorReport report;
    report.top_r = top_r;
    if (test_set.empty()) {
        return report;
    }
    std::vector<double> latencies;
    latencies.reserve(test_set.size());
    std::map<std::uint32_t, std::size_t> seen;
    std::map<std::uint32_t, PointSummary> per_point;
    double total = 0.0;
    for (const auto& rec : test_set) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto logits = net.predict(nn::make_single(rec.tensor));
        const auto probs = nn::softmax(logits.row(0));
        const auto est = predict_position(probs, ref_map, top_r);
        const auto t1 = std::chrono::steady_clock::now();
        latencies.push_back(std::chrono::duration<double>(t1 - t0).count());

        const double err = euclidean_error(est, rec.true_position);
        report.samples.push_back({rec.test_point_id, seen[rec.test_point_id]++, err, est.x, est.y});
        auto& p = per_point[rec.test_point_id];
        p.test_point_id = rec.test_point_id;
        p.truth = rec.true_position;
        p.samples += 1;
        p.mean_error_m += err;
        total += err;
    }
    for (auto& [id, p] : per_point) {
        p.mean_error_m /= static_cast<double>(p.samples);
        report.points.push_back(p);
    }
    report.overall_mean_m = total / static_cast<double>(report.samples.size());
    std::sort(latencies.begin(), latencies.end());
    const std::size_t mid = latencies.size() / 2;
    report.median_latency_s =
        latencies.size() % 2 ? latencies[mid] : 0.5 * (latencies[mid - 1] + latencies[mid]);
    return report;
}

inline ErrorReport evaluate(const nn::Checkpoint& checkpoint, std::span<const dataset::TestRecord> test_set,
                            const ReferenceMap& ref_map, std::size_t top_r = kDefaultTopR) {
    const auto net = nn::network_from(checkpoint);
    if (!test_set.empty()) {
        const auto& t = test_set.front().tensor;
        if (t.rows() != static_cast<std::size_t>(net.config().in_height) ||
            t.cols() != static_cast<std::size_t>(net.config().in_width)) {
            throw ShapeError("test tensors do not match the checkpoint's input shape");
        }
    }
    return evaluate(net, test_set, ref_map, top_r);
}

struct MinMeanError {
    int epoch = -1;
    double mean_error_m = std::numeric_limits<double>::infinity();
};

/// Epoch with the lowest overall mean error (first one on ties).
inline MinMeanError track_min_mean_error(std::span<const double> mean_error_by_epoch) {
    if (mean_error_by_epoch.empty()) {
        throw ConfigError("minimum mean error needs a non-empty history");
    }
    MinMeanError best;
    for (std::size_t e = 0; e < mean_error_by_epoch.size(); ++e) {
        if (mean_error_by_epoch[e] < best.mean_error_m) {
            best = {static_cast<int>(e), mean_error_by_epoch[e]};
        }
    }
    return best;
}

inline MinMeanError track_min_mean_error(std::span<const ErrorReport> history) {
    std::vector<double> means;
    for (const auto& r : history) {
        means.push_back(r.overall_mean_m);
    }
    return track_min_mean_error(means);
}

} // namespace csifp::positioning
