#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "csifp/channel/scene.hpp"
#include "csifp/core/matrix.hpp"

namespace csifp::channel {

struct Path {
    Complex complex_gain{};
    double delay = 0.0;
    double azimuth_departure = 0.0;
    double elevation_departure = 0.0;
    bool is_los = false;
    /// -1 for the direct path, otherwise the reflecting building.
    int building_index = -1;
};

struct PathSet {
    std::vector<Path> paths;

    bool has_los() const noexcept {
        for (const auto& p : paths) {
            if (p.is_los) {
                return true;
            }
        }
        return false;
    }
};

namespace geometry {

/// Length of the part of segment a->b that lies inside the closed rectangle,
/// as a fraction of the segment (Liang-Barsky clipping).
inline double overlap_fraction(Point2 a, Point2 b, const Building& r) noexcept {
    double t0 = 0.0;
    double t1 = 1.0;
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const std::array<double, 4> p{-dx, dx, -dy, dy};
    const std::array<double, 4> q{a.x - r.x_min, r.x_max - a.x, a.y - r.y_min, r.y_max - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) {
                return 0.0;
            }
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0) {
            t0 = std::max(t0, t);
        } else {
            t1 = std::min(t1, t);
        }
        if (t0 > t1) {
            return 0.0;
        }
    }
    return t1 - t0;
}

// Tolerance below which a segment only grazes a footprint (touching a wall at
// an endpoint, e.g. a reflection point).
inline constexpr double kGrazeTolerance = 1e-9;

inline bool segment_blocked(const Scene& scene, Point2 a, Point2 b) noexcept {
    for (const auto& bld : scene.buildings) {
        if (overlap_fraction(a, b, bld) > kGrazeTolerance) {
            return true;
        }
    }
    return false;
}

inline double distance(Point2 a, Point2 b) noexcept { return std::hypot(b.x - a.x, b.y - a.y); }

struct Wall {
    bool vertical;   // wall lies on x = coord, else y = coord
    double coord;
    double lo, hi;   // extent along the wall
    int outward;     // -1 or +1 along the wall normal axis
};

inline std::array<Wall, 4> walls(const Building& b) noexcept {
    return {Wall{true, b.x_min, b.y_min, b.y_max, -1}, Wall{true, b.x_max, b.y_min, b.y_max, +1},
            Wall{false, b.y_min, b.x_min, b.x_max, -1}, Wall{false, b.y_max, b.x_min, b.x_max, +1}};
}

/// Specular point on a wall by mirror-image construction, if both endpoints
/// face the wall's outer side and the point falls within the wall extent.
inline std::optional<Point2> specular_point(const Wall& w, Point2 tx, Point2 rx) noexcept {
    const double tx_n = w.vertical ? tx.x : tx.y;
    const double rx_n = w.vertical ? rx.x : rx.y;
    const double tx_t = w.vertical ? tx.y : tx.x;
    const double rx_t = w.vertical ? rx.y : rx.x;
    if ((tx_n - w.coord) * w.outward <= 0.0 || (rx_n - w.coord) * w.outward <= 0.0) {
        return std::nullopt;
    }
    const double mirror_n = 2.0 * w.coord - tx_n;
    const double t = (w.coord - mirror_n) / (rx_n - mirror_n);
    const double along = tx_t + t * (rx_t - tx_t);
    if (along < w.lo || along > w.hi) {
        return std::nullopt;
    }
    return w.vertical ? Point2{w.coord, along} : Point2{along, w.coord};
}

} // namespace geometry

/// Geometric multipath: the direct path when the 2-D BS-UE segment clears every
/// footprint, plus one specular single-bounce path per wall whose two legs are
/// unobstructed and whose bounce height is below the building roof.
inline PathSet trace_paths(const Scene& scene, Point2 location) {
    using namespace geometry;
    if (scene.inside_building(location)) {
        throw GeometryError("location lies inside a building footprint");
    }
    const Point2 bs{scene.bs_position.x, scene.bs_position.y};
    const double dz = scene.ue_height - scene.bs_position.z;
    const double lambda = scene.wavelength();
    const double amplitude_scale = scene.tx_gain * lambda / (4.0 * kPi);
    const double reflection_factor = std::pow(10.0, -scene.reflection_loss_db / 20.0);

    PathSet out;
    if (!segment_blocked(scene, bs, location)) {
        const double horizontal = distance(bs, location);
        const double d = std::hypot(horizontal, dz);
        Path p;
        p.complex_gain = amplitude_scale / d;
        p.delay = d / kSpeedOfLight;
        p.azimuth_departure = std::atan2(location.y - bs.y, location.x - bs.x);
        p.elevation_departure = std::atan2(dz, horizontal);
        p.is_los = true;
        out.paths.push_back(p);
    }
    for (std::size_t bi = 0; bi < scene.buildings.size(); ++bi) {
        const auto& bld = scene.buildings[bi];
        for (const auto& wall : walls(bld)) {
            const auto hit = specular_point(wall, bs, location);
            if (!hit) {
                continue;
            }
            const double leg1 = distance(bs, *hit);
            const double unfolded = leg1 + distance(*hit, location);
            const double bounce_z = scene.bs_position.z + dz * (leg1 / unfolded);
            if (bounce_z > bld.height || bounce_z < 0.0) {
                continue;
            }
            if (segment_blocked(scene, bs, *hit) || segment_blocked(scene, *hit, location)) {
                continue;
            }
            const double d = std::hypot(unfolded, dz);
            Path p;
            p.complex_gain = amplitude_scale / d * reflection_factor;
            p.delay = d / kSpeedOfLight;
            p.azimuth_departure = std::atan2(hit->y - bs.y, hit->x - bs.x);
            p.elevation_departure = std::atan2(dz, unfolded);
            p.building_index = static_cast<int>(bi);
            out.paths.push_back(p);
        }
    }
    return out;
}

} // namespace csifp::channel
