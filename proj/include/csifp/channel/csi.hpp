#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <span>

#include "csifp/channel/codebook.hpp"
#include "csifp/channel/ray_tracer.hpp"
#include "csifp/channel/scene.hpp"
#include "csifp/core/matrix.hpp"

namespace csifp::channel {

/// Noise power per complex CSI entry and the transmit gain it was solved for.
struct LinkBudget {
    double noise_power = 1.0;
    double tx_gain = 1.0;

    void validate() const {
        if (!(noise_power > 0.0) || !std::isfinite(noise_power)) {
            throw ConfigError("noise power must be positive and finite");
        }
    }
};

/// Noiseless effective CSI, rows = subcarriers, cols = beams. The reference
/// symbol is 1, so entry (m, b) is the channel row times beam b.
inline ComplexMatrix beamformed_csi(const Scene& scene, const PathSet& pathset, const BeamCodebook& codebook) {
    if (codebook.element_count() != scene.array.element_count()) {
        throw ShapeError("codebook element count does not match the scene array");
    }
    if (codebook.beams.rows() != codebook.size()) {
        throw ShapeError("codebook beam matrix and grid disagree");
    }
    const std::size_t n_sub = static_cast<std::size_t>(scene.n_subcarriers);
    const std::size_t n_beams = codebook.size();
    ComplexMatrix csi(n_sub, n_beams);
    std::vector<Complex> beam_gain(n_beams);
    for (const auto& path : pathset.paths) {
        const auto a = array_response(scene.array, path.azimuth_departure, path.elevation_departure);
        for (std::size_t b = 0; b < n_beams; ++b) {
            Complex acc{};
            const auto w = codebook.beams.row(b);
            for (std::size_t k = 0; k < a.size(); ++k) {
                acc += std::conj(a[k]) * w[k];
            }
            beam_gain[b] = acc * path.complex_gain;
        }
        for (std::size_t m = 0; m < n_sub; ++m) {
            const double phase = -2.0 * kPi * scene.subcarrier_offset(static_cast<int>(m)) * path.delay;
            const Complex rot = std::polar(1.0, phase);
            auto row = csi.row(m);
            for (std::size_t b = 0; b < n_beams; ++b) {
                row[b] += rot * beam_gain[b];
            }
        }
    }
    return csi;
}

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `budget.noise_power` to every entry.
template <typename Rng>
ComplexMatrix add_noise(const ComplexMatrix& csi, const LinkBudget& budget, Rng& rng) {
    budget.validate();
    std::normal_distribution<double> gauss(0.0, std::sqrt(budget.noise_power / 2.0));
    ComplexMatrix out = csi;
    for (auto& v : out.values()) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += Complex(re, im);
    }
    return out;
}

/// Per-beam SNR in dB of a received vector over subcarriers. An all-zero
/// vector yields -infinity.
inline double snr_per_beam(std::span<const Complex> received, double noise_power) {
    if (!(noise_power > 0.0)) {
        throw ConfigError("noise power must be positive");
    }
    if (received.empty()) {
        throw ShapeError("received vector is empty");
    }
    double energy = 0.0;
    for (const auto& r : received) {
        energy += std::norm(r);
    }
    if (energy == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(energy / (static_cast<double>(received.size()) * noise_power));
}

inline std::vector<Complex> beam_column(const ComplexMatrix& csi, std::size_t beam) {
    std::vector<Complex> col(csi.rows());
    for (std::size_t m = 0; m < csi.rows(); ++m) {
        col[m] = csi(m, beam);
    }
    return col;
}

/// Largest per-beam received energy divided by M, i.e. the signal term of the
/// best beam's SNR.
inline double best_beam_signal_power(const ComplexMatrix& csi) {
    double best = 0.0;
    for (std::size_t b = 0; b < csi.cols(); ++b) {
        double e = 0.0;
        for (std::size_t m = 0; m < csi.rows(); ++m) {
            e += std::norm(csi(m, b));
        }
        best = std::max(best, e);
    }
    return best / static_cast<double>(csi.rows());
}

inline double best_beam_snr(const ComplexMatrix& csi, double noise_power) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < csi.cols(); ++b) {
        const auto col = beam_column(csi, b);
        best = std::max(best, snr_per_beam(col, noise_power));
    }
    return best;
}

/// Probe location `distance` metres (3-D) from the BS along the boresight azimuth.
inline Point2 calibration_probe(const Scene& scene, double probe_distance) {
    const double dz = scene.ue_height - scene.bs_position.z;
    if (probe_distance <= std::abs(dz)) {
        throw GeometryError("probe distance does not exceed the BS/UE height difference");
    }
    const double horizontal = std::sqrt(probe_distance * probe_distance - dz * dz);
    const double az = scene.array.orientation_azimuth;
    return {scene.bs_position.x + horizontal * std::cos(az), scene.bs_position.y + horizontal * std::sin(az)};
}

/// Solves for the noise power that puts the best beam's noiseless LOS SNR at
/// the probe exactly at `target_snr_db`. Reflections are excluded so the
/// budget depends only on free-space loss.
inline LinkBudget calibrate_noise(const Scene& scene, const BeamCodebook& codebook, double probe_distance = 100.0,
                                  double target_snr_db = 10.0) {
    const Point2 probe = calibration_probe(scene, probe_distance);
    if (scene.inside_building(probe)) {
        throw GeometryError("calibration probe lies inside a building");
    }
    PathSet paths = trace_paths(scene, probe);
    std::erase_if(paths.paths, [](const Path& p) { return !p.is_los; });
    if (paths.paths.empty()) {
        throw GeometryError("calibration probe has no line of sight to the BS");
    }
    const auto csi = beamformed_csi(scene, paths, codebook);
    const double signal = best_beam_signal_power(csi);
    if (!(signal > 0.0)) {
        throw GeometryError("calibration probe receives no signal");
    }
    return {signal / std::pow(10.0, target_snr_db / 10.0), scene.tx_gain};
}

} // namespace csifp::channel
