#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "csifp/channel/ray_tracer.hpp"
#include "csifp/core/binary_io.hpp"
#include "csifp/core/hash.hpp"
#include "csifp/nn/train_config.hpp"
#include "csifp/pipeline/run_config.hpp"

namespace csifp::pipeline {

namespace fs = std::filesystem;

inline std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Short form for log lines.
inline std::string compact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
    io::write_file(path.string(), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string read_text(const fs::path& path) {
    const auto bytes = io::read_file(path.string());
    return {bytes.begin(), bytes.end()};
}

inline void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw FileError("missing artifact '" + path.string() + "'; run `csifp " + producer + "` first");
    }
}

// ---- scene ----------------------------------------------------------------

/// The scene artifact is itself a config file: a [provenance] block with the
/// hash of the [scene] section it came from, then the canonical scene.
inline std::string scene_artifact_text(const RunConfig& rc) {
    return "# csifp scene artifact\n[provenance]\nconfig_hash = " + to_hex(config_hash(rc, scene_sections())) +
           "\n\n" + channel::scene_to_text(rc.scene);
}

/// Config hash recorded in a scene artifact.
inline Digest recorded_scene_hash(const fs::path& path) {
    const auto cfg = ConfigFile::parse(read_text(path), path.string());
    const auto h = cfg.get("provenance", "config_hash");
    if (!h) {
        throw FormatVersionError("scene artifact '" + path.string() + "' has no provenance block");
    }
    return from_hex(*h);
}

struct PointStatus {
    bool is_test = false;
    std::uint32_t id = 0;
    channel::Point2 position;
    bool los = false;
    std::size_t paths = 0;
};

struct SceneReport {
    std::size_t n_reference = 0;
    std::size_t n_test = 0;
    std::size_t n_buildings = 0;
    std::size_t nlos_reference = 0;
    std::size_t nlos_test = 0;
    std::vector<PointStatus> points;
};

inline SceneReport analyze_scene(const channel::Scene& scene) {
    SceneReport r;
    r.n_reference = scene.reference_points.size();
    r.n_test = scene.test_points.size();
    r.n_buildings = scene.buildings.size();
    auto add = [&](bool is_test, std::size_t i, channel::Point2 p) {
        const auto paths = channel::trace_paths(scene, p);
        r.points.push_back({is_test, static_cast<std::uint32_t>(i), p, paths.has_los(), paths.paths.size()});
        if (!paths.has_los()) {
            ++(is_test ? r.nlos_test : r.nlos_reference);
        }
    };
    for (std::size_t i = 0; i < scene.reference_points.size(); ++i) add(false, i, scene.reference_points[i]);
    for (std::size_t i = 0; i < scene.test_points.size(); ++i) add(true, i, scene.test_points[i]);
    return r;
}

inline std::string scene_summary_text(const SceneReport& r, const Digest& cfg_hash, std::uint64_t seed) {
    std::ostringstream o;
    o << "config_hash = " << to_hex(cfg_hash) << "\n"
      << "rng_seed = " << seed << "\n"
      << "reference_points = " << r.n_reference << " (" << r.nlos_reference << " NLOS)\n"
      << "test_points = " << r.n_test << " (" << r.nlos_test << " NLOS)\n"
      << "buildings = " << r.n_buildings << "\n\n"
      << "kind,id,x,y,condition,paths\n";
    for (const auto& p : r.points) {
        o << (p.is_test ? "test" : "reference") << "," << p.id << "," << exact(p.position.x) << ","
          << exact(p.position.y) << "," << (p.los ? "LOS" : "NLOS") << "," << p.paths << "\n";
    }
    return o.str();
}

// ---- training -------------------------------------------------------------

inline std::string metrics_csv(const std::vector<nn::EpochMetrics>& history) {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& m : history) {
        out += std::to_string(m.epoch) + "," + exact(m.train_loss) + "," + exact(m.train_acc) + "," +
               exact(m.val_loss) + "," + exact(m.val_acc) + "\n";
    }
    return out;
}

struct EpochError {
    int epoch = 0;
    double mean_error_m = 0.0;
};

inline std::string epoch_error_csv(const std::vector<EpochError>& rows) {
    std::string out = "epoch,mean_error_m\n";
    for (const auto& r : rows) {
        out += std::to_string(r.epoch) + "," + exact(r.mean_error_m) + "\n";
    }
    return out;
}

inline std::vector<EpochError> read_epoch_error_csv(const fs::path& path) {
    std::vector<EpochError> rows;
    if (!fs::exists(path)) {
        return rows;
    }
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatVersionError("malformed row in '" + path.string() + "'");
        }
        rows.push_back({ConfigFile::to_int<int>(line.substr(0, comma), path.string()),
                        ConfigFile::to_double(line.substr(comma + 1), path.string())});
    }
    return rows;
}

/// `key = value` lines of a text report; other lines are ignored.
inline std::string report_value(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    const std::string prefix = key + " = ";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) {
            return line.substr(prefix.size());
        }
    }
    return {};
}

} // namespace csifp::pipeline
