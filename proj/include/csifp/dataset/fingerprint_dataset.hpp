#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "csifp/channel/codebook.hpp"
#include "csifp/channel/csi.hpp"
#include "csifp/channel/ray_tracer.hpp"
#include "csifp/channel/scene.hpp"
#include "csifp/core/hash.hpp"
#include "csifp/dataset/tensor_packing.hpp"

namespace csifp::dataset {

/// Stored sample tensors are single precision, matching the on-disk format.
using FeatureMap = Matrix<float>;

struct LabeledSample {
    FeatureMap tensor;
    std::uint32_t class_id = 0;
    friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct TestRecord {
    FeatureMap tensor;
    std::uint32_t test_point_id = 0;
    channel::Point2 true_position;
    friend bool operator==(const TestRecord&, const TestRecord&) = default;
};

struct ReferenceEntry {
    std::uint32_t class_id = 0;
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const ReferenceEntry&, const ReferenceEntry&) = default;
};

using ReferenceMap = std::vector<ReferenceEntry>;

struct Provenance {
    Digest scene_hash{};
    Digest config_hash{};
    std::uint64_t seed = 0;
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct FingerprintDataset {
    std::uint32_t n_subcarriers = 0;
    std::uint32_t n_beams = 0;
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> validation;
    std::vector<TestRecord> test;
    ReferenceMap reference_map;
    Provenance provenance;

    std::size_t n_classes() const noexcept { return reference_map.size(); }
    friend bool operator==(const FingerprintDataset&, const FingerprintDataset&) = default;
};

enum class StreamPurpose : std::uint32_t { reference = 1, test = 2, split = 3 };

/// Independent generator per (seed, purpose, point).
inline std::mt19937_64 stream_rng(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

inline FeatureMap to_feature_map(const CsiTensor& t) {
    FeatureMap out(t.rows(), t.cols());
    auto src = t.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<float>(src[i]);
    }
    return out;
}

inline ReferenceMap make_reference_map(const channel::Scene& scene) {
    ReferenceMap map;
    for (std::size_t i = 0; i < scene.reference_points.size(); ++i) {
        map.push_back({static_cast<std::uint32_t>(i), scene.reference_points[i].x, scene.reference_points[i].y});
    }
    return map;
}

namespace detail {

template <typename Emit>
void sample_location(const channel::Scene& scene, const channel::BeamCodebook& codebook, channel::Point2 where,
                     std::size_t samples, const channel::LinkBudget& budget, std::mt19937_64& rng, Emit&& emit) {
    const auto paths = channel::trace_paths(scene, where);
    const auto clean = channel::beamformed_csi(scene, paths, codebook);
    for (std::size_t s = 0; s < samples; ++s) {
        emit(to_feature_map(to_real_tensor(channel::add_noise(clean, budget, rng))));
    }
}

} // namespace detail

inline std::vector<LabeledSample> generate_reference_set(const channel::Scene& scene, std::size_t samples_per_point,
                                                         const channel::LinkBudget& budget, std::uint64_t seed) {
    if (scene.reference_points.empty()) {
        throw ConfigError("scene has no reference points");
    }
    const auto codebook = channel::build_codebook(scene.array, scene.n_az_beams, scene.n_el_beams);
    std::vector<LabeledSample> out;
    out.reserve(scene.reference_points.size() * samples_per_point);
    for (std::size_t i = 0; i < scene.reference_points.size(); ++i) {
        auto rng = stream_rng(seed, StreamPurpose::reference, i);
        detail::sample_location(scene, codebook, scene.reference_points[i], samples_per_point, budget, rng,
                                [&](FeatureMap t) {
                                    out.push_back({std::move(t), static_cast<std::uint32_t>(i)});
                                });
    }
    return out;
}

inline std::vector<TestRecord> generate_test_set(const channel::Scene& scene, std::size_t samples_per_point,
                                                 const channel::LinkBudget& budget, std::uint64_t seed) {
    const auto codebook = channel::build_codebook(scene.array, scene.n_az_beams, scene.n_el_beams);
    std::vector<TestRecord> out;
    out.reserve(scene.test_points.size() * samples_per_point);
    for (std::size_t i = 0; i < scene.test_points.size(); ++i) {
        auto rng = stream_rng(seed, StreamPurpose::test, i);
        const auto where = scene.test_points[i];
        detail::sample_location(scene, codebook, where, samples_per_point, budget, rng, [&](FeatureMap t) {
            out.push_back({std::move(t), static_cast<std::uint32_t>(i), where});
        });
    }
    return out;
}

/// Stratified random split: each class is shuffled on its own and
/// round(train_fraction * n_c) of its samples go to training, clamped so both
/// sides keep at least one sample. Relative order within each side follows
/// the input order.
inline std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
split(std::vector<LabeledSample> samples, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie strictly between 0 and 1");
    }
    std::uint32_t n_classes = 0;
    for (const auto& s : samples) {
        n_classes = std::max(n_classes, s.class_id + 1);
    }
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        by_class[samples[i].class_id].push_back(i);
    }
    std::vector<char> to_train(samples.size(), 0);
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) {
            continue;
        }
        if (idx.size() < 2) {
            throw ConfigError("class " + std::to_string(c) + " has fewer than 2 samples; cannot split");
        }
        auto rng = stream_rng(seed, StreamPurpose::split, c);
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t k = 0; k < n_train; ++k) {
            to_train[idx[k]] = 1;
        }
    }
    std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (to_train[i] ? out.first : out.second).push_back(std::move(samples[i]));
    }
    return out;
}

} // namespace csifp::dataset
