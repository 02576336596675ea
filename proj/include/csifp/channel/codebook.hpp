#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "csifp/channel/scene.hpp"
#include "csifp/core/matrix.hpp"

namespace csifp::channel {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

/// Unit vector for a scene-frame azimuth (from +x toward +y) and elevation
/// (above the horizontal plane).
inline Vec3 direction(double azimuth, double elevation) noexcept {
    return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

/// Orthonormal array frame: boresight, horizontal (azimuth) axis, vertical axis.
struct ArrayFrame {
    Vec3 boresight;
    Vec3 horizontal;
    Vec3 vertical;

    explicit ArrayFrame(const ArrayGeometry& a) {
        const double az = a.orientation_azimuth;
        const double el = a.orientation_elevation;
        boresight = direction(az, el);
        horizontal = {-std::sin(az), std::cos(az), 0.0};
        // boresight x horizontal
        vertical = {-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az), std::cos(el)};
    }
};

/// Direction cosines (u, v) of a scene-frame direction along the array's
/// horizontal and vertical element axes.
struct DirectionCosines {
    double u = 0.0;
    double v = 0.0;
};

inline DirectionCosines direction_cosines(const ArrayGeometry& array, double azimuth, double elevation) noexcept {
    const ArrayFrame frame(array);
    const Vec3 d = direction(azimuth, elevation);
    return {dot(d, frame.horizontal), dot(d, frame.vertical)};
}

/// Steering vector of the URA, phase-referenced to the array centre (the
/// scene's BS position). Element (p, q), stored at index p * n_elevation + q,
/// has phase 2*pi*spacing*(p'*u + q'*v) with p' = p - (n_azimuth - 1)/2 and
/// q' = q - (n_elevation - 1)/2.
inline std::vector<Complex> array_response(const ArrayGeometry& array, double azimuth, double elevation) {
    const auto [u, v] = direction_cosines(array, azimuth, elevation);
    std::vector<Complex> out(array.element_count());
    const double k = 2.0 * kPi * array.element_spacing;
    const double pc = 0.5 * (array.n_azimuth - 1);
    const double qc = 0.5 * (array.n_elevation - 1);
    for (int p = 0; p < array.n_azimuth; ++p) {
        for (int q = 0; q < array.n_elevation; ++q) {
            const double phase = k * ((p - pc) * u + (q - qc) * v);
            out[static_cast<std::size_t>(p) * array.n_elevation + q] = std::polar(1.0, phase);
        }
    }
    return out;
}

struct BeamDirection {
    double azimuth = 0.0;
    double elevation = 0.0;
};

/// Fixed grid of beams. beams(b, k) is the weight of element k for beam b.
struct BeamCodebook {
    ComplexMatrix beams;
    std::vector<BeamDirection> beam_grid;

    std::size_t size() const noexcept { return beam_grid.size(); }
    std::size_t element_count() const noexcept { return beams.cols(); }
};

/// Beams point at the centres of a uniform n_az x n_el grid of angles relative
/// to boresight over (-pi/2, pi/2) in each axis. Beam index = ia * n_el + ie.
inline BeamCodebook build_codebook(const ArrayGeometry& array, int n_az_beams, int n_el_beams) {
    if (n_az_beams < 1 || n_el_beams < 1) {
        throw ConfigError("codebook needs at least one beam per axis");
    }
    array.validate();
    const ArrayFrame frame(array);
    BeamCodebook cb;
    const std::size_t n_beams = static_cast<std::size_t>(n_az_beams) * static_cast<std::size_t>(n_el_beams);
    cb.beams = ComplexMatrix(n_beams, array.element_count());
    cb.beam_grid.reserve(n_beams);
    const double norm = 1.0 / std::sqrt(static_cast<double>(array.element_count()));
    for (int ia = 0; ia < n_az_beams; ++ia) {
        const double rel_az = -kPi / 2.0 + (ia + 0.5) * kPi / n_az_beams;
        for (int ie = 0; ie < n_el_beams; ++ie) {
            const double rel_el = -kPi / 2.0 + (ie + 0.5) * kPi / n_el_beams;
            const double c = std::cos(rel_az) * std::cos(rel_el);
            const double h = std::sin(rel_az) * std::cos(rel_el);
            const double w = std::sin(rel_el);
            const Vec3 d{c * frame.boresight.x + h * frame.horizontal.x + w * frame.vertical.x,
                         c * frame.boresight.y + h * frame.horizontal.y + w * frame.vertical.y,
                         c * frame.boresight.z + h * frame.horizontal.z + w * frame.vertical.z};
            const BeamDirection dir{std::atan2(d.y, d.x), std::asin(std::clamp(d.z, -1.0, 1.0))};
            const auto response = array_response(array, dir.azimuth, dir.elevation);
            auto row = cb.beams.row(cb.beam_grid.size());
            for (std::size_t k = 0; k < response.size(); ++k) {
                row[k] = response[k] * norm;
            }
            cb.beam_grid.push_back(dir);
        }
    }
    return cb;
}

} // namespace csifp::channel
