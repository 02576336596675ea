#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "csifp/channel/codebook.hpp"
#include "csifp/channel/csi.hpp"
#include "csifp/channel/ray_tracer.hpp"
#include "csifp/channel/scene.hpp"

using namespace csifp;
using namespace csifp::channel;

namespace {

Scene open_scene() {
    Scene s;
    s.bs_position = {0.0, 0.0, 1.5};
    s.ue_height = 1.5;
    s.n_subcarriers = 24;
    return s;
}

// Fermat's principle: the specular route minimises total length over points on
// the wall line. Golden-section search on the convex length function.
double shortest_bounce_length(Point2 a, Point2 b, double wall_y, double lo, double hi) {
    auto f = [&](double s) { return std::hypot(s - a.x, wall_y - a.y) + std::hypot(b.x - s, b.y - wall_y); };
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    for (int i = 0; i < 200; ++i) {
        if (f(x1) < f(x2)) {
            hi = x2;
        } else {
            lo = x1;
        }
        x1 = hi - phi * (hi - lo);
        x2 = lo + phi * (hi - lo);
    }
    return f(0.5 * (lo + hi));
}

std::size_t best_beam(const ComplexMatrix& csi) {
    std::size_t best = 0;
    double best_e = -1;
    for (std::size_t b = 0; b < csi.cols(); ++b) {
        double e = 0;
        for (std::size_t m = 0; m < csi.rows(); ++m) e += std::norm(csi(m, b));
        if (e > best_e) {
            best_e = e;
            best = b;
        }
    }
    return best;
}

} // namespace

TEST(Codebook, SingletonArray) {
    ArrayGeometry a{1, 1, 0.5, 0.0, 0.0};
    const auto cb = build_codebook(a, 1, 1);
    ASSERT_EQ(cb.size(), 1u);
    ASSERT_EQ(cb.element_count(), 1u);
    EXPECT_NEAR(std::abs(cb.beams(0, 0) - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Codebook, DefaultArrayShapeAndUnitNorm) {
    ArrayGeometry a{16, 8, 0.5, 0.3, 0.0};
    const auto cb = build_codebook(a, 8, 4);
    EXPECT_EQ(cb.size(), 32u);
    EXPECT_EQ(cb.element_count(), 128u);
    for (std::size_t b = 0; b < cb.size(); ++b) {
        double n2 = 0;
        for (const auto& w : cb.beams.row(b)) n2 += std::norm(w);
        EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-12);
        // beam weights equal the normalised response at the beam's grid angle
        const auto r = array_response(a, cb.beam_grid[b].azimuth, cb.beam_grid[b].elevation);
        for (std::size_t k = 0; k < r.size(); ++k) {
            EXPECT_NEAR(std::abs(cb.beams(b, k) - r[k] / std::sqrt(128.0)), 0.0, 1e-12);
        }
    }
}

TEST(Codebook, RejectsZeroBeams) {
    ArrayGeometry a;
    EXPECT_THROW(build_codebook(a, 0, 4), ConfigError);
    EXPECT_THROW(build_codebook(a, 8, 0), ConfigError);
}

TEST(ArrayResponse, BoresightIsAllOnes) {
    ArrayGeometry a{16, 8, 0.5, 0.7, 0.1};
    for (const auto& v : array_response(a, 0.7, 0.1)) {
        EXPECT_NEAR(v.real(), 1.0, 1e-12);
        EXPECT_NEAR(v.imag(), 0.0, 1e-12);
    }
}

TEST(ArrayResponse, UnitMagnitudeAndHalfWavePhaseStep) {
    ArrayGeometry a{2, 1, 0.5, 0.0, 0.0};
    const auto r = array_response(a, kPi / 2, 0.0);  // u = 1
    EXPECT_NEAR(std::abs(r[0]), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(r[1]), 1.0, 1e-15);
    // phase difference 2*pi*0.5*1 = pi
    EXPECT_NEAR(std::abs(std::arg(r[1] / r[0])), kPi, 1e-12);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ang(-1.5, 1.5);
    ArrayGeometry big{16, 8, 0.5, 0.2, -0.1};
    for (int t = 0; t < 10; ++t) {
        for (const auto& v : array_response(big, ang(rng), ang(rng))) EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
    }
}

TEST(TracePaths, EmptySceneHasOnlyLos) {
    auto s = open_scene();
    const auto ps = trace_paths(s, {30.0, 4.0});
    ASSERT_EQ(ps.paths.size(), 1u);
    EXPECT_TRUE(ps.paths[0].is_los);
    EXPECT_NEAR(ps.paths[0].delay, std::hypot(30.0, 4.0) / kSpeedOfLight, 1e-20);
}

TEST(TracePaths, WallBlocksLineOfSight) {
    auto s = open_scene();
    s.buildings.push_back({10.0, -20.0, 12.0, 20.0, 30.0});
    const auto ps = trace_paths(s, {30.0, 0.0});
    EXPECT_FALSE(ps.has_los());
    for (const auto& p : ps.paths) EXPECT_FALSE(p.is_los);
}

TEST(TracePaths, SingleReflectorDelaysMatchFermatRoute) {
    auto s = open_scene();
    s.bs_position = {0.0, 0.0, 10.0};
    s.buildings.push_back({-50.0, 20.0, 50.0, 30.0, 40.0});
    const Point2 ue{30.0, 5.0};
    const auto ps = trace_paths(s, ue);
    ASSERT_EQ(ps.paths.size(), 2u);
    const double dz = 10.0 - 1.5;
    EXPECT_TRUE(ps.paths[0].is_los);
    EXPECT_NEAR(ps.paths[0].delay * kSpeedOfLight, std::sqrt(30.0 * 30 + 25 + dz * dz), 1e-9);
    EXPECT_FALSE(ps.paths[1].is_los);
    const double unfolded = shortest_bounce_length({0, 0}, ue, 20.0, -50.0, 50.0);
    EXPECT_NEAR(ps.paths[1].delay * kSpeedOfLight, std::hypot(unfolded, dz), 1e-7);
    // reflected amplitude carries the extra -6 dB
    const double lambda = s.wavelength();
    const double d = ps.paths[1].delay * kSpeedOfLight;
    EXPECT_NEAR(std::abs(ps.paths[1].complex_gain), s.tx_gain * lambda / (4 * kPi * d) * std::pow(10.0, -6.0 / 20.0),
                1e-15);
}

TEST(TracePaths, RejectsLocationInsideBuilding) {
    auto s = open_scene();
    s.buildings.push_back({10.0, -5.0, 20.0, 5.0, 10.0});
    EXPECT_THROW(trace_paths(s, {15.0, 0.0}), GeometryError);
}

TEST(TracePaths, LosFlagIsReciprocal) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coord(-40, 40);
    Scene s = open_scene();
    s.buildings = {{-5, 5, 5, 15, 20}, {10, -30, 14, -2, 20}, {-30, -20, -20, -10, 20}};
    int checked = 0;
    while (checked < 200) {
        const Point2 a{coord(rng), coord(rng)}, b{coord(rng), coord(rng)};
        if (s.inside_building(a) || s.inside_building(b)) continue;
        Scene fwd = s, rev = s;
        fwd.bs_position = {a.x, a.y, 1.5};
        rev.bs_position = {b.x, b.y, 1.5};
        EXPECT_EQ(trace_paths(fwd, b).has_los(), trace_paths(rev, a).has_los());
        ++checked;
    }
}

TEST(BeamformedCsi, EmptyPathSetIsZero) {
    auto s = open_scene();
    const auto cb = build_codebook(s.array, 8, 4);
    const auto csi = beamformed_csi(s, PathSet{}, cb);
    EXPECT_EQ(csi.rows(), 24u);
    EXPECT_EQ(csi.cols(), 32u);
    for (const auto& v : csi.values()) EXPECT_EQ(v, Complex{});
}

TEST(BeamformedCsi, ZeroDelayIsFlatAcrossSubcarriers) {
    auto s = open_scene();
    const auto cb = build_codebook(s.array, 8, 4);
    PathSet ps;
    ps.paths.push_back({Complex(0.3, -0.2), 0.0, 0.4, 0.1, true});
    const auto csi = beamformed_csi(s, ps, cb);
    for (std::size_t m = 1; m < csi.rows(); ++m)
        for (std::size_t b = 0; b < csi.cols(); ++b) EXPECT_EQ(csi(m, b), csi(0, b));
}

TEST(BeamformedCsi, AlignedPathPeaksAtItsBeam) {
    auto s = open_scene();
    s.array.orientation_azimuth = 0.25;
    const auto cb = build_codebook(s.array, 8, 4);
    std::mt19937_64 rng(5);
    for (std::size_t target = 0; target < cb.size(); ++target) {
        PathSet ps;
        ps.paths.push_back({Complex(1e-3, 0.0), 2e-7, cb.beam_grid[target].azimuth, cb.beam_grid[target].elevation});
        const auto csi = beamformed_csi(s, ps, cb);
        // brute force over every beam
        EXPECT_EQ(best_beam(csi), target);
    }
}

TEST(BeamformedCsi, LinearInPathGains) {
    auto s = open_scene();
    s.buildings.push_back({-50.0, 20.0, 50.0, 30.0, 40.0});
    const auto cb = build_codebook(s.array, 8, 4);
    auto ps = trace_paths(s, {25.0, 3.0});
    ASSERT_EQ(ps.paths.size(), 2u);
    const auto base = beamformed_csi(s, ps, cb);
    for (auto& p : ps.paths) p.complex_gain *= 2.0;
    const auto twice = beamformed_csi(s, ps, cb);
    for (std::size_t i = 0; i < base.size(); ++i) {
        const auto a = base.values()[i], b = twice.values()[i];
        EXPECT_LE(std::abs(b - 2.0 * a), 1e-12 * std::max(std::abs(b), 1e-300));
    }
}

TEST(BeamformedCsi, DimensionMismatch) {
    auto s = open_scene();
    ArrayGeometry other{4, 4, 0.5, 0, 0};
    EXPECT_THROW(beamformed_csi(s, PathSet{}, build_codebook(other, 2, 2)), ShapeError);
}

TEST(AddNoise, VanishingNoiseLeavesInput) {
    ComplexMatrix csi(4, 3, Complex(0.5, -0.25));
    std::mt19937_64 rng(1);
    const auto out = add_noise(csi, {1e-300, 1.0}, rng);
    EXPECT_EQ(out, csi);
    EXPECT_THROW(add_noise(csi, {0.0, 1.0}, rng), ConfigError);
}

TEST(AddNoise, SeededDeterminism) {
    ComplexMatrix csi(10, 4, Complex(1.0, 1.0));
    std::mt19937_64 a(42), b(42);
    EXPECT_EQ(add_noise(csi, {0.3, 1.0}, a), add_noise(csi, {0.3, 1.0}, b));
}

TEST(AddNoise, EmpiricalVariance) {
    ComplexMatrix csi(1000, 100, Complex(0.2, 0.1));
    std::mt19937_64 rng(2024);
    const double sigma2 = 0.37;
    const auto out = add_noise(csi, {sigma2, 1.0}, rng);
    double acc = 0;
    for (std::size_t i = 0; i < csi.size(); ++i) acc += std::norm(out.values()[i] - csi.values()[i]);
    EXPECT_NEAR(acc / csi.size() / sigma2, 1.0, 0.02);
}

TEST(Snr, Examples) {
    std::vector<Complex> r(8, Complex(std::sqrt(0.5), 0.0));
    EXPECT_NEAR(snr_per_beam(r, 0.5), 0.0, 1e-12);
    std::vector<Complex> r2{Complex(1, 0), Complex(1, 0)};
    EXPECT_NEAR(snr_per_beam(r2, 0.5), 3.0103, 1e-4);
    EXPECT_NEAR(snr_per_beam(r2, 0.5), 10 * std::log10(2.0), 1e-12);
}

TEST(Snr, ScalingLawAndZeroSentinel) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> c(0.01, 100.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<Complex> r(60);
        for (auto& v : r) v = Complex(g(rng), g(rng));
        const double k = c(rng);
        auto scaled = r;
        for (auto& v : scaled) v *= k;
        EXPECT_NEAR(snr_per_beam(scaled, 0.2) - snr_per_beam(r, 0.2), 20 * std::log10(k), 1e-9);
    }
    std::vector<Complex> zero(5);
    EXPECT_TRUE(std::isinf(snr_per_beam(zero, 1.0)));
    EXPECT_LT(snr_per_beam(zero, 1.0), 0.0);
    EXPECT_THROW(snr_per_beam(zero, 0.0), ConfigError);
}

TEST(CalibrateNoise, HitsTargetAtProbe) {
    Scene s;  // default radio parameters
    const auto cb = build_codebook(s.array, s.n_az_beams, s.n_el_beams);
    const auto budget = calibrate_noise(s, cb);
    PathSet ps = trace_paths(s, calibration_probe(s, 100.0));
    const auto csi = beamformed_csi(s, ps, cb);
    EXPECT_NEAR(best_beam_snr(csi, budget.noise_power), 10.0, 0.01);
}

TEST(CalibrateNoise, TxGainQuadruplesNoisePower) {
    Scene s;
    const auto cb = build_codebook(s.array, 8, 4);
    const auto a = calibrate_noise(s, cb);
    s.tx_gain *= 2;
    const auto b = calibrate_noise(s, cb);
    EXPECT_NEAR(b.noise_power / a.noise_power, 4.0, 1e-12);
    EXPECT_EQ(b.tx_gain, s.tx_gain);
}

TEST(CalibrateNoise, InverseSquareAtTwiceTheDistance) {
    Scene s;
    s.bs_position.z = s.ue_height;  // keep the probe on the same beam elevation
    const auto cb = build_codebook(s.array, 8, 4);
    const auto budget = calibrate_noise(s, cb);
    const auto csi = beamformed_csi(s, trace_paths(s, calibration_probe(s, 200.0)), cb);
    EXPECT_NEAR(best_beam_snr(csi, budget.noise_power), 10.0 - 20.0 * std::log10(2.0), 1e-9);
    EXPECT_NEAR(best_beam_snr(csi, budget.noise_power), 3.98, 0.01);
}

TEST(CalibrateNoise, BlockedProbeFails) {
    Scene s;
    s.buildings.push_back({40.0, -10.0, 50.0, 10.0, 20.0});
    const auto cb = build_codebook(s.array, 8, 4);
    EXPECT_THROW(calibrate_noise(s, cb), GeometryError);
}

TEST(SceneConfig, ParsesAndRoundTrips) {
    const auto cfg = ConfigFile::parse(R"(
[scene]
bs_position = 0 0 10
array = 16 8 0.5
beams = 4 4
n_subcarriers = 60
building = 15 -30 25 -12 20
reference_grid = 30 -10 4 3 10
test_point = 33 2
)");
    const auto s = scene_from_config(cfg);
    EXPECT_EQ(s.reference_points.size(), 12u);
    EXPECT_EQ(s.reference_points[5].x, 40.0);
    EXPECT_EQ(s.reference_points[5].y, 0.0);
    EXPECT_EQ(s.beam_count(), 16u);
    const auto again = scene_from_config(ConfigFile::parse(scene_to_text(s)));
    EXPECT_EQ(again, s);
}

TEST(SceneConfig, RejectsPointInsideBuilding) {
    const auto cfg = ConfigFile::parse("[scene]\nbuilding = 0 0 10 10 5\nreference_point = 5 5\n");
    EXPECT_THROW(scene_from_config(cfg), GeometryError);
    EXPECT_THROW(scene_from_config(ConfigFile::parse("[scene]\narray = 0 8 0.5\n")), ConfigError);
}
