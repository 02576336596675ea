#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "csifp/core/config.hpp"
#include "csifp/core/error.hpp"

namespace csifp::channel {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = 3.14159265358979323846;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Point3&, const Point3&) = default;
};

/// Uniform rectangular array. Elements sit on an n_azimuth x n_elevation grid
/// with `element_spacing` wavelengths between neighbours. The boresight points
/// along (orientation_azimuth, orientation_elevation) in the scene frame.
struct ArrayGeometry {
    int n_azimuth = 16;
    int n_elevation = 8;
    double element_spacing = 0.5;
    double orientation_azimuth = 0.0;
    double orientation_elevation = 0.0;

    std::size_t element_count() const noexcept {
        return static_cast<std::size_t>(n_azimuth) * static_cast<std::size_t>(n_elevation);
    }

    void validate() const {
        if (n_azimuth < 1 || n_elevation < 1) {
            throw ConfigError("array needs at least one element per axis");
        }
        if (!(element_spacing > 0.0) || !std::isfinite(element_spacing)) {
            throw ConfigError("array element spacing must be positive");
        }
        if (!std::isfinite(orientation_azimuth) || !std::isfinite(orientation_elevation)) {
            throw ConfigError("array orientation must be finite");
        }
    }

    friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;
};

/// Axis-aligned building footprint extruded to `height`.
struct Building {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    double height = 0.0;

    /// Closed footprint: points on a wall count as inside.
    bool contains(Point2 p) const noexcept {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }

    friend bool operator==(const Building&, const Building&) = default;
};

struct Scene {
    Point3 bs_position{0.0, 0.0, 10.0};
    ArrayGeometry array{};
    int n_az_beams = 8;
    int n_el_beams = 4;
    double carrier_frequency = 30e9;
    double subcarrier_spacing = 60e3;
    int n_subcarriers = 240;
    double ue_height = 1.5;
    double tx_gain = 1e4;
    double reflection_loss_db = 6.0;
    std::vector<Building> buildings;
    std::vector<Point2> reference_points;
    std::vector<Point2> test_points;
    std::uint64_t rng_seed = 1;

    double wavelength() const noexcept { return kSpeedOfLight / carrier_frequency; }

    std::size_t beam_count() const noexcept {
        return static_cast<std::size_t>(n_az_beams) * static_cast<std::size_t>(n_el_beams);
    }

    /// Frequency offset of subcarrier m from the carrier, centred on the band.
    double subcarrier_offset(int m) const noexcept {
        return (static_cast<double>(m) - static_cast<double>(n_subcarriers) / 2.0) * subcarrier_spacing;
    }

    bool inside_building(Point2 p) const noexcept {
        for (const auto& b : buildings) {
            if (b.contains(p)) {
                return true;
            }
        }
        return false;
    }

    void validate() const {
        array.validate();
        if (n_subcarriers < 1) {
            throw ConfigError("scene needs at least one subcarrier");
        }
        if (n_az_beams < 1 || n_el_beams < 1) {
            throw ConfigError("beam grid counts must be >= 1");
        }
        if (!(carrier_frequency > 0.0) || !(subcarrier_spacing > 0.0)) {
            throw ConfigError("carrier frequency and subcarrier spacing must be positive");
        }
        if (!(tx_gain > 0.0) || !std::isfinite(tx_gain)) {
            throw ConfigError("tx_gain must be positive");
        }
        if (!std::isfinite(reflection_loss_db)) {
            throw ConfigError("reflection loss must be finite");
        }
        for (const auto& b : buildings) {
            if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min) || !(b.height > 0.0)) {
                throw GeometryError("building footprint must have positive extent and height");
            }
        }
        if (inside_building({bs_position.x, bs_position.y})) {
            throw GeometryError("base station lies inside a building footprint");
        }
        auto check = [&](const std::vector<Point2>& pts, const char* what) {
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y)) {
                    throw GeometryError(std::string(what) + " " + std::to_string(i) + " is not finite");
                }
                if (inside_building(pts[i])) {
                    throw GeometryError(std::string(what) + " " + std::to_string(i) + " lies inside a building");
                }
            }
        };
        check(reference_points, "reference point");
        check(test_points, "test point");
    }

    friend bool operator==(const Scene&, const Scene&) = default;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<double> expect_count(const std::string& section, const std::string& key, const std::string& value,
                                        std::size_t n) {
    auto v = ConfigFile::split_doubles(value, section + "." + key);
    if (v.size() != n) {
        throw ConfigError(section + "." + key + ": expected " + std::to_string(n) + " numbers, got " +
                          std::to_string(v.size()));
    }
    return v;
}

} // namespace detail

/// Reads a scene from the `[scene]` section of a config file. Keys:
///   bs_position = x y z
///   array = n_azimuth n_elevation spacing_wavelengths
///   array_orientation = azimuth_rad elevation_rad
///   beams = n_az_beams n_el_beams
///   carrier_frequency, subcarrier_spacing (Hz), n_subcarriers
///   ue_height, tx_gain, reflection_loss_db, rng_seed
///   building = x_min y_min x_max y_max height      (repeatable)
///   reference_grid = x0 y0 nx ny spacing            (repeatable, row-major in y then x)
///   reference_point = x y                           (repeatable)
///   test_point = x y                                (repeatable)
inline Scene scene_from_config(const ConfigFile& cfg, const std::string& section = "scene") {
    if (!cfg.has_section(section)) {
        throw ConfigError("missing [" + section + "] section");
    }
    Scene s;
    if (auto v = cfg.get(section, "bs_position")) {
        auto p = detail::expect_count(section, "bs_position", *v, 3);
        s.bs_position = {p[0], p[1], p[2]};
    }
    if (auto v = cfg.get(section, "array")) {
        auto a = detail::expect_count(section, "array", *v, 3);
        s.array.n_azimuth = static_cast<int>(a[0]);
        s.array.n_elevation = static_cast<int>(a[1]);
        s.array.element_spacing = a[2];
        if (a[0] != std::floor(a[0]) || a[1] != std::floor(a[1])) {
            throw ConfigError(section + ".array: element counts must be integers");
        }
    }
    if (auto v = cfg.get(section, "array_orientation")) {
        auto o = detail::expect_count(section, "array_orientation", *v, 2);
        s.array.orientation_azimuth = o[0];
        s.array.orientation_elevation = o[1];
    }
    if (auto v = cfg.get(section, "beams")) {
        auto b = detail::expect_count(section, "beams", *v, 2);
        if (b[0] != std::floor(b[0]) || b[1] != std::floor(b[1])) {
            throw ConfigError(section + ".beams: counts must be integers");
        }
        s.n_az_beams = static_cast<int>(b[0]);
        s.n_el_beams = static_cast<int>(b[1]);
    }
    s.carrier_frequency = cfg.get_double(section, "carrier_frequency", s.carrier_frequency);
    s.subcarrier_spacing = cfg.get_double(section, "subcarrier_spacing", s.subcarrier_spacing);
    s.n_subcarriers = cfg.get_int<int>(section, "n_subcarriers", s.n_subcarriers);
    s.ue_height = cfg.get_double(section, "ue_height", s.ue_height);
    s.tx_gain = cfg.get_double(section, "tx_gain", s.tx_gain);
    s.reflection_loss_db = cfg.get_double(section, "reflection_loss_db", s.reflection_loss_db);
    s.rng_seed = cfg.get_int<std::uint64_t>(section, "rng_seed", s.rng_seed);

    for (const auto& v : cfg.get_all(section, "building")) {
        auto b = detail::expect_count(section, "building", v, 5);
        s.buildings.push_back({b[0], b[1], b[2], b[3], b[4]});
    }
    for (const auto& v : cfg.get_all(section, "reference_grid")) {
        auto g = detail::expect_count(section, "reference_grid", v, 5);
        const int nx = static_cast<int>(g[2]);
        const int ny = static_cast<int>(g[3]);
        if (nx < 1 || ny < 1 || !(g[4] > 0.0)) {
            throw ConfigError(section + ".reference_grid: need nx, ny >= 1 and positive spacing");
        }
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                s.reference_points.push_back({g[0] + ix * g[4], g[1] + iy * g[4]});
            }
        }
    }
    for (const auto& v : cfg.get_all(section, "reference_point")) {
        auto p = detail::expect_count(section, "reference_point", v, 2);
        s.reference_points.push_back({p[0], p[1]});
    }
    for (const auto& v : cfg.get_all(section, "test_point")) {
        auto p = detail::expect_count(section, "test_point", v, 2);
        s.test_points.push_back({p[0], p[1]});
    }
    s.validate();
    return s;
}

/// Canonical scene text: every value explicit, grids expanded, doubles
/// printed round-trip exact.
inline std::string scene_to_text(const Scene& s) {
    using detail::fmt_double;
    std::string out = "[scene]\n";
    auto line = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    line("bs_position", fmt_double(s.bs_position.x) + " " + fmt_double(s.bs_position.y) + " " +
                            fmt_double(s.bs_position.z));
    line("array", std::to_string(s.array.n_azimuth) + " " + std::to_string(s.array.n_elevation) + " " +
                      fmt_double(s.array.element_spacing));
    line("array_orientation", fmt_double(s.array.orientation_azimuth) + " " +
                                  fmt_double(s.array.orientation_elevation));
    line("beams", std::to_string(s.n_az_beams) + " " + std::to_string(s.n_el_beams));
    line("carrier_frequency", fmt_double(s.carrier_frequency));
    line("subcarrier_spacing", fmt_double(s.subcarrier_spacing));
    line("n_subcarriers", std::to_string(s.n_subcarriers));
    line("ue_height", fmt_double(s.ue_height));
    line("tx_gain", fmt_double(s.tx_gain));
    line("reflection_loss_db", fmt_double(s.reflection_loss_db));
    line("rng_seed", std::to_string(s.rng_seed));
    for (const auto& b : s.buildings) {
        line("building", fmt_double(b.x_min) + " " + fmt_double(b.y_min) + " " + fmt_double(b.x_max) + " " +
                             fmt_double(b.y_max) + " " + fmt_double(b.height));
    }
    for (const auto& p : s.reference_points) {
        line("reference_point", fmt_double(p.x) + " " + fmt_double(p.y));
    }
    for (const auto& p : s.test_points) {
        line("test_point", fmt_double(p.x) + " " + fmt_double(p.y));
    }
    return out;
}

} // namespace csifp::channel
