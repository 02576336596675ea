#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csifp/channel/scene.hpp"
#include "csifp/core/config.hpp"
#include "csifp/core/hash.hpp"
#include "csifp/nn/network.hpp"
#include "csifp/nn/trainer.hpp"
#include "csifp/nn/train_config.hpp"
#include "csifp/positioning/decoder.hpp"

namespace csifp::pipeline {

struct DatasetParams {
    std::size_t samples_per_point = 1000;
    std::size_t test_samples_per_point = 100;
    double train_fraction = 0.6;
    std::uint64_t seed = 1;
    double probe_distance = 100.0;  ///< calibration distance, metres
    double target_snr_db = 10.0;    ///< best-beam LOS SNR at the probe
};

struct EvalParams {
    std::size_t top_r = positioning::kDefaultTopR;
    std::size_t sweep_max_r = 8;
    bool use_best = true;  ///< evaluate the best-validation checkpoint, else the last one
};

/// Artifact locations inside the output directory.
struct ArtifactPaths {
    std::filesystem::path dir;
    std::filesystem::path scene() const { return dir / "scene.txt"; }
    std::filesystem::path scene_summary() const { return dir / "scene_summary.txt"; }
    std::filesystem::path dataset() const { return dir / "dataset.bin"; }
    std::filesystem::path dataset_report() const { return dir / "dataset_report.txt"; }
    std::filesystem::path best_checkpoint() const { return dir / "best.ckpt"; }
    std::filesystem::path last_checkpoint() const { return dir / "last.ckpt"; }
    std::filesystem::path diverged_checkpoint() const { return dir / "diverged.ckpt"; }
    std::filesystem::path metrics() const { return dir / "metrics.csv"; }
    std::filesystem::path test_error_by_epoch() const { return dir / "test_error_by_epoch.csv"; }
    std::filesystem::path train_summary() const { return dir / "train_summary.txt"; }
    std::filesystem::path errors() const { return dir / "errors.csv"; }
    std::filesystem::path summary() const { return dir / "summary.txt"; }
    std::filesystem::path sweep() const { return dir / "sweep.csv"; }
    std::filesystem::path timing() const { return dir / "timing.txt"; }
};

/// Everything one configuration file specifies. Sections:
///   [run]      output_dir
///   [scene]    see channel::scene_from_config
///   [dataset]  samples_per_point, test_samples_per_point, train_fraction, seed,
///              probe_distance, target_snr_db
///   [network]  conv_channels (5 ints), kernel, stride, padding, pool (4 window sizes),
///              pool_stride (4 ints), bn_epsilon, bn_momentum, init_seed
///   [train]    epochs, batch_size, learning_rate, weight_decay, beta1, beta2, epsilon,
///              shuffle_seed, track_test_error
///   [eval]     top_r, sweep_max_r, checkpoint (best | last)
struct RunConfig {
    ConfigFile source;
    channel::Scene scene;
    DatasetParams dataset;
    nn::NetworkConfig network;  ///< input shape and class count derived from the scene
    nn::TrainConfig train;
    bool track_test_error = true;
    EvalParams eval;
    ArtifactPaths paths;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"run", {"output_dir"}},
        {"scene",
         {"bs_position", "array", "array_orientation", "beams", "carrier_frequency", "subcarrier_spacing",
          "n_subcarriers", "ue_height", "tx_gain", "reflection_loss_db", "rng_seed", "building", "reference_grid",
          "reference_point", "test_point"}},
        {"dataset",
         {"samples_per_point", "test_samples_per_point", "train_fraction", "seed", "probe_distance", "target_snr_db"}},
        {"network",
         {"conv_channels", "kernel", "stride", "padding", "pool", "pool_stride", "bn_epsilon", "bn_momentum",
          "init_seed"}},
        {"train",
         {"epochs", "batch_size", "learning_rate", "weight_decay", "beta1", "beta2", "epsilon", "shuffle_seed",
          "track_test_error"}},
        {"eval", {"top_r", "sweep_max_r", "checkpoint"}},
        {"provenance", {"config_hash"}},
    };
    return keys;
}

inline void reject_unknown(const ConfigFile& cfg) {
    for (const auto& section : cfg.section_names()) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& e : cfg.entries(section)) {
            if (!it->second.count(e.key)) {
                throw ConfigError(cfg.origin() + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' in [" +
                                  section + "]");
            }
        }
    }
}

template <std::size_t N>
std::array<int, N> int_list(const ConfigFile& cfg, const std::string& section, const std::string& key,
                            std::array<int, N> fallback) {
    const auto v = cfg.get(section, key);
    if (!v) {
        return fallback;
    }
    const auto d = ConfigFile::split_doubles(*v, section + "." + key);
    if (d.size() != N) {
        throw ConfigError(section + "." + key + ": expected " + std::to_string(N) + " integers");
    }
    std::array<int, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (d[i] != static_cast<int>(d[i])) {
            throw ConfigError(section + "." + key + ": expected integers");
        }
        out[i] = static_cast<int>(d[i]);
    }
    return out;
}

template <typename T>
T positive_count(const ConfigFile& cfg, const std::string& section, const std::string& key, T fallback) {
    const auto v = cfg.get_int<long long>(section, key, static_cast<long long>(fallback));
    if (v < 1) {
        throw ConfigError(section + "." + key + " must be at least 1");
    }
    return static_cast<T>(v);
}

} // namespace detail

/// Network shape follows the scene: M x 2B inputs, one class per reference point.
inline nn::NetworkConfig network_from_config(const ConfigFile& cfg, const channel::Scene& scene) {
    nn::NetworkConfig n;
    n.in_channels = 1;
    n.in_height = scene.n_subcarriers;
    n.in_width = 2 * scene.beam_count();
    n.n_classes = static_cast<int>(scene.reference_points.size());
    std::array<int, nn::kConvStages> widths{};
    for (std::size_t i = 0; i < nn::kConvStages; ++i) widths[i] = n.conv[i].out_channels;
    widths = detail::int_list(cfg, "network", "conv_channels", widths);
    const int kernel = cfg.get_int<int>("network", "kernel", 3);
    const int stride = cfg.get_int<int>("network", "stride", 1);
    const int padding = cfg.get_int<int>("network", "padding", 1);
    for (std::size_t i = 0; i < nn::kConvStages; ++i) {
        n.conv[i] = {widths[i], kernel, kernel, stride, padding};
    }
    const auto windows = detail::int_list<nn::kPoolStages>(cfg, "network", "pool", {2, 2, 2, 2});
    const auto strides = detail::int_list<nn::kPoolStages>(cfg, "network", "pool_stride", windows);
    for (std::size_t i = 0; i < nn::kPoolStages; ++i) {
        n.pool[i] = {windows[i], strides[i]};
    }
    n.bn_epsilon = cfg.get_double("network", "bn_epsilon", n.bn_epsilon);
    n.bn_momentum = cfg.get_double("network", "bn_momentum", n.bn_momentum);
    n.init_seed = cfg.get_int<std::uint64_t>("network", "init_seed", n.init_seed);
    try {
        nn::Network probe(n);
    } catch (const ShapeError& e) {
        throw ConfigError(std::string("[network] does not fit the scene's input shape: ") + e.what());
    }
    return n;
}

inline nn::TrainConfig train_from_config(const ConfigFile& cfg) {
    nn::TrainConfig t;
    t.epochs = detail::positive_count(cfg, "train", "epochs", t.epochs);
    t.batch_size = detail::positive_count(cfg, "train", "batch_size", t.batch_size);
    t.learning_rate = cfg.get_double("train", "learning_rate", t.learning_rate);
    t.weight_decay = cfg.get_double("train", "weight_decay", t.weight_decay);
    t.beta1 = cfg.get_double("train", "beta1", t.beta1);
    t.beta2 = cfg.get_double("train", "beta2", t.beta2);
    t.epsilon = cfg.get_double("train", "epsilon", t.epsilon);
    t.shuffle_seed = cfg.get_int<std::uint64_t>("train", "shuffle_seed", t.shuffle_seed);
    return t;
}

/// Parses and validates a whole run configuration. `overrides` are
/// `section.key=value` assignments applied before validation.
inline RunConfig load_run_config(ConfigFile cfg, const std::vector<std::string>& overrides = {},
                                 const std::string& output_dir_override = "") {
    for (const auto& o : overrides) {
        cfg.apply_override(o);
    }
    detail::reject_unknown(cfg);
    RunConfig rc;
    rc.scene = channel::scene_from_config(cfg);

    auto& d = rc.dataset;
    d.samples_per_point = detail::positive_count(cfg, "dataset", "samples_per_point", d.samples_per_point);
    d.test_samples_per_point = detail::positive_count(cfg, "dataset", "test_samples_per_point", d.test_samples_per_point);
    d.train_fraction = cfg.get_double("dataset", "train_fraction", d.train_fraction);
    d.seed = cfg.get_int<std::uint64_t>("dataset", "seed", d.seed);
    d.probe_distance = cfg.get_double("dataset", "probe_distance", d.probe_distance);
    d.target_snr_db = cfg.get_double("dataset", "target_snr_db", d.target_snr_db);
    if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0)) {
        throw ConfigError("dataset.train_fraction must lie strictly between 0 and 1");
    }
    if (!(d.probe_distance > 0.0) || !std::isfinite(d.target_snr_db)) {
        throw ConfigError("dataset.probe_distance must be positive and target_snr_db finite");
    }

    rc.network = network_from_config(cfg, rc.scene);
    rc.train = train_from_config(cfg);
    nn::check_train_config(rc.train);
    rc.track_test_error = cfg.get_bool("train", "track_test_error", true);

    const auto n_classes = rc.scene.reference_points.size();
    rc.eval.top_r = detail::positive_count(cfg, "eval", "top_r", rc.eval.top_r);
    rc.eval.sweep_max_r = detail::positive_count(cfg, "eval", "sweep_max_r", rc.eval.sweep_max_r);
    if (rc.eval.top_r > n_classes) {
        throw ConfigError("eval.top_r = " + std::to_string(rc.eval.top_r) + " exceeds the " +
                          std::to_string(n_classes) + " reference points");
    }
    const auto which = cfg.get_string("eval", "checkpoint", "best");
    if (which != "best" && which != "last") {
        throw ConfigError("eval.checkpoint must be 'best' or 'last'");
    }
    rc.eval.use_best = which == "best";

    rc.paths.dir = output_dir_override.empty() ? cfg.get_string("run", "output_dir", "run") : output_dir_override;
    rc.source = std::move(cfg);
    return rc;
}

inline RunConfig load_run_config_file(const std::string& path, const std::vector<std::string>& overrides = {},
                                      const std::string& output_dir_override = "") {
    return load_run_config(ConfigFile::load(path), overrides, output_dir_override);
}

/// Hash of the canonical text of the given sections. Each pipeline stage
/// hashes exactly the sections that influence its artifact.
inline Digest config_hash(const RunConfig& rc, const std::vector<std::string>& sections) {
    return sha256(rc.source.canonical(sections));
}

inline const std::vector<std::string>& scene_sections() {
    static const std::vector<std::string> s{"scene"};
    return s;
}
inline const std::vector<std::string>& dataset_sections() {
    static const std::vector<std::string> s{"scene", "dataset"};
    return s;
}
inline const std::vector<std::string>& train_sections() {
    static const std::vector<std::string> s{"scene", "dataset", "network", "train"};
    return s;
}
inline const std::vector<std::string>& eval_sections() {
    static const std::vector<std::string> s{"scene", "dataset", "network", "train", "eval"};
    return s;
}

} // namespace csifp::pipeline
