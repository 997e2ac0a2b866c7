#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "radmat/config.hpp"
#include "radmat/sim.hpp"

using namespace radmat;

namespace {

// Independent O(N^2) DFT oracle, written against the definition.
std::vector<std::complex<double>> dft_oracle(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n, {0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                                 static_cast<double>(j) / static_cast<double>(n);
            out[k] += x[j] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
    }
    return out;
}

RadarConfig quiet_config() {
    RadarConfig cfg;
    cfg.noise_sigma = 0.0;
    return cfg;
}

GeometryConfig pose(double height, double tilt) {
    GeometryConfig g;
    g.height_m = height;
    g.tilt_deg = tilt;
    return g;
}

MaterialSpec iron_like() {
    return {"iron", 0, 0.95, 0.95, 3.0, 0.0};
}

}  // namespace

TEST_CASE("slant_range nadir identity and closed form") {
    CHECK(slant_range(pose(0.45, 0.0)) == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(slant_range(pose(0.55, 0.0)) == doctest::Approx(0.55).epsilon(1e-15));
    // oracle: 0.45 / cos(10 deg)
    const double expected = 0.45 / std::cos(10.0 * std::numbers::pi / 180.0);
    CHECK(slant_range(pose(0.45, 10.0)) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(slant_range(pose(0.45, 10.0)) - 0.45694) < 1e-5);
    CHECK(slant_range(pose(0.45, -25.0)) >= 0.45);
}

TEST_CASE("slant_range rejects out-of-domain tilt") {
    CHECK_THROWS_AS(slant_range(pose(0.45, 90.0)), SimError);
    CHECK_THROWS_AS(slant_range(pose(0.45, std::nan(""))), SimError);
    CHECK_THROWS_AS(slant_range(pose(-0.1, 0.0)), SimError);
}

TEST_CASE("angular_response lobe values") {
    MaterialSpec m = iron_like();
    CHECK(angular_response(m, 0.0) == doctest::Approx(1.0));

    m.specular_fraction = 0.95;
    m.lobe_width_deg = 3.0;
    const double specular = 0.05 + 0.95 * std::exp(-100.0 / 18.0);
    CHECK(angular_response(m, 10.0) == doctest::Approx(specular).epsilon(1e-12));
    CHECK(std::abs(angular_response(m, 10.0) - 0.05367) < 1e-4);

    m.specular_fraction = 0.20;
    m.lobe_width_deg = 20.0;
    const double diffuse = 0.80 + 0.20 * std::exp(-100.0 / 800.0);
    CHECK(angular_response(m, 10.0) == doctest::Approx(diffuse).epsilon(1e-12));
    CHECK(std::abs(angular_response(m, 10.0) - 0.97650) < 1e-4);
}

TEST_CASE("angular_response symmetry and floor") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> tilt(-80.0, 80.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        MaterialSpec m = iron_like();
        m.specular_fraction = unit(rng);
        m.lobe_width_deg = 0.5 + 30.0 * unit(rng);
        const double t = tilt(rng);
        const double left = angular_response(m, t);
        CHECK(left == doctest::Approx(angular_response(m, -t)).epsilon(1e-15));
        CHECK(left >= 1.0 - m.specular_fraction);
        CHECK(left <= 1.0);
        // monotone non-increasing in |t|
        CHECK(angular_response(m, std::abs(t)) <= angular_response(m, std::abs(t) * 0.5) + 1e-15);
    }
}

TEST_CASE("received amplitude reference conditions") {
    const RadarConfig cfg = quiet_config();
    MaterialSpec perfect{"ref", 0, 1.0, 0.0, 1.0, 0.0};
    CHECK(received_amplitude(cfg, pose(0.45, 0.0), perfect, 1.0) == doctest::Approx(1.0));
    CHECK(received_amplitude(cfg, pose(0.90, 0.0), perfect, 1.0) == doctest::Approx(0.25));

    MaterialSpec quarter = perfect;
    quarter.reflectivity = 0.25;
    CHECK(received_amplitude(cfg, pose(0.45, 0.0), quarter, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("radar equation R^-4 power law is exact") {
    const RadarConfig cfg = quiet_config();
    const MaterialSpec m{"m", 0, 0.7, 0.3, 5.0, 0.0};
    for (const double r : {0.3, 0.45, 0.61, 1.7}) {
        const double p1 = received_power(cfg, pose(r, 0.0), m, 1.0);
        const double p2 = received_power(cfg, pose(2.0 * r, 0.0), m, 1.0);
        CHECK(p2 * 16.0 == p1);  // exact in floating point
        const double a1 = received_amplitude(cfg, pose(r, 0.0), m, 1.0);
        const double a2 = received_amplitude(cfg, pose(2.0 * r, 0.0), m, 1.0);
        CHECK(a2 * 4.0 == a1);
    }
}

TEST_CASE("received amplitude strictly decreasing in range") {
    const RadarConfig cfg = quiet_config();
    const MaterialSpec m = iron_like();
    double prev = received_amplitude(cfg, pose(0.2, 0.0), m, 1.0);
    for (double h = 0.25; h < 1.2; h += 0.05) {
        const double a = received_amplitude(cfg, pose(h, 0.0), m, 1.0);
        CHECK(a < prev);
        prev = a;
    }
}

TEST_CASE("synthesize_frame noiseless tone has constant magnitude") {
    const RadarConfig cfg = quiet_config();
    const auto frame = synthesize_frame(cfg, pose(0.45, 0.0), 0.8, 1);
    REQUIRE(frame.size() == 64);
    for (const auto& s : frame) CHECK(std::abs(s) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("synthesize_frame zero amplitude gives zero vector") {
    const auto frame = synthesize_frame(quiet_config(), pose(0.45, 0.0), 0.0, 7);
    for (const auto& s : frame) CHECK(std::abs(s) == 0.0);
}

TEST_CASE("synthesize_frame deterministic per seed") {
    RadarConfig cfg;
    cfg.noise_sigma = 0.05;
    const auto a = synthesize_frame(cfg, pose(0.45, 0.0), 1.0, 1234);
    const auto b = synthesize_frame(cfg, pose(0.45, 0.0), 1.0, 1234);
    const auto c = synthesize_frame(cfg, pose(0.45, 0.0), 1.0, 1235);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("synthesize_frame rejects targets beyond the retained spectrum") {
    RadarConfig cfg = quiet_config();
    // bin position = R / 0.0375 >= 32  <=>  R >= 1.2
    CHECK_THROWS_AS(synthesize_frame(cfg, pose(1.25, 0.0), 1.0, 1), TargetOutOfWindow);
    CHECK_NOTHROW(synthesize_frame(cfg, pose(1.19, 0.0), 1.0, 1));
}

TEST_CASE("range_profile of integer-bin tone is a delta") {
    const RadarConfig cfg = quiet_config();
    // bin 12 = 0.45 m at 0.0375 m/bin
    const auto frame = synthesize_frame(cfg, pose(0.45, 0.0), 1.0, 1);
    const auto mags = range_profile(frame, cfg);
    REQUIRE(static_cast<int>(mags.size()) == cfg.num_range_bins);
    CHECK(mags[12] == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 0; k < cfg.num_range_bins; ++k) {
        if (k != 12) CHECK(mags[static_cast<std::size_t>(k)] < 1e-9);
    }
}

TEST_CASE("range_profile zero input gives zero profile") {
    const RadarConfig cfg = quiet_config();
    std::vector<std::complex<double>> zeros(64, {0.0, 0.0});
    for (const double m : range_profile(zeros, cfg)) CHECK(m == 0.0);
}

TEST_CASE("range_profile rejects length mismatch") {
    std::vector<std::complex<double>> frame(63, {0.0, 0.0});
    CHECK_THROWS_AS(range_profile(frame, quiet_config()), SimError);
}

TEST_CASE("dft matches direct-summation oracle") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const std::size_t n : {std::size_t{8}, std::size_t{64}}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::complex<double>> x(n);
            for (auto& v : x) v = {gauss(rng), gauss(rng)};
            const auto fast = dft(x);
            const auto slow = dft_oracle(x);
            double max_err = 0.0;
            for (std::size_t k = 0; k < n; ++k) max_err = std::max(max_err, std::abs(fast[k] - slow[k]));
            CHECK(max_err < 1e-9);
        }
    }
}

TEST_CASE("dft handles non-power-of-two lengths") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::complex<double>> x(12);
    for (auto& v : x) v = {gauss(rng), gauss(rng)};
    const auto fast = dft(x);
    const auto slow = dft_oracle(x);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-9);
}

TEST_CASE("Parseval identity on the full spectrum") {
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::complex<double>> x(64);
        for (auto& v : x) v = {gauss(rng), gauss(rng)};
        const auto spectrum = dft(x);
        double time_energy = 0.0;
        for (const auto& v : x) time_energy += std::norm(v);
        double freq_energy = 0.0;
        for (const auto& v : spectrum) freq_energy += std::norm(v);
        freq_energy /= static_cast<double>(x.size());
        CHECK(std::abs(time_energy - freq_energy) / time_energy < 1e-9);
    }
}

TEST_CASE("integrate_sequence identity, mean, errors") {
    RangeProfile a;
    a.magnitudes.assign(32, 0.0);
    RangeProfile b;
    b.magnitudes.assign(32, 2.0);

    const std::vector<RangeProfile> identical = {b, b, b};
    const RangeProfile same = integrate_sequence(identical);
    for (const double m : same.magnitudes) CHECK(m == doctest::Approx(2.0));

    const std::vector<RangeProfile> pair = {a, b};
    const RangeProfile mean = integrate_sequence(pair);
    for (const double m : mean.magnitudes) CHECK(m == doctest::Approx(1.0));

    CHECK_THROWS_AS(integrate_sequence(std::vector<RangeProfile>{}), SimError);
    RangeProfile shorter;
    shorter.magnitudes.assign(16, 0.0);
    const std::vector<RangeProfile> mismatched = {a, shorter};
    CHECK_THROWS_AS(integrate_sequence(mismatched), SimError);
}

TEST_CASE("integrate_sequence is linear in its inputs") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<RangeProfile> xs(4), ys(4), sums(4);
    for (int i = 0; i < 4; ++i) {
        xs[i].magnitudes.resize(8);
        ys[i].magnitudes.resize(8);
        sums[i].magnitudes.resize(8);
        for (int b = 0; b < 8; ++b) {
            xs[i].magnitudes[b] = unit(rng);
            ys[i].magnitudes[b] = unit(rng);
            sums[i].magnitudes[b] = xs[i].magnitudes[b] + 2.0 * ys[i].magnitudes[b];
        }
    }
    const auto ix = integrate_sequence(xs);
    const auto iy = integrate_sequence(ys);
    const auto isum = integrate_sequence(sums);
    for (int b = 0; b < 8; ++b) {
        CHECK(isum.magnitudes[b] ==
              doctest::Approx(ix.magnitudes[b] + 2.0 * iy.magnitudes[b]).epsilon(1e-12));
    }
}

TEST_CASE("frame integration shrinks noise std by 1/sqrt(F)") {
    // Monte Carlo: noise-only sequences, F = 16 vs single frames.
    RadarConfig cfg;
    cfg.noise_sigma = 0.02;
    const GeometryConfig geom = pose(0.45, 0.0);
    constexpr int kTrials = 10000;
    constexpr int kBin = 5;

    double sum1 = 0.0, sq1 = 0.0, sum16 = 0.0, sq16 = 0.0;
    for (int t = 0; t < kTrials; ++t) {
        const auto frame = synthesize_frame(cfg, geom, 0.0, seed_mix(777, t));
        const double v1 = range_profile(frame, cfg)[kBin];
        sum1 += v1;
        sq1 += v1 * v1;

        std::vector<RangeProfile> frames(16);
        for (int f = 0; f < 16; ++f) {
            RangeProfile p;
            p.magnitudes = range_profile(
                synthesize_frame(cfg, geom, 0.0, seed_mix(888, t, f)), cfg);
            frames[static_cast<std::size_t>(f)] = std::move(p);
        }
        const double v16 = integrate_sequence(frames).magnitudes[kBin];
        sum16 += v16;
        sq16 += v16 * v16;
    }
    const double std1 = std::sqrt(sq1 / kTrials - (sum1 / kTrials) * (sum1 / kTrials));
    const double std16 = std::sqrt(sq16 / kTrials - (sum16 / kTrials) * (sum16 / kTrials));
    CHECK(std16 / std1 == doctest::Approx(0.25).epsilon(0.10));
}

TEST_CASE("peak localization matches rounding, half-up at ties") {
    RadarConfig cfg = quiet_config();
    for (const double bin_pos : {9.2, 9.33, 11.9, 12.49, 14.67, 21.7}) {
        const double height = bin_pos * cfg.range_resolution_m;
        const auto mags = range_profile(synthesize_frame(cfg, pose(height, 0.0), 1.0, 1), cfg);
        CHECK(peak_bin(mags) == static_cast<int>(std::floor(bin_pos + 0.5)));
    }
    // exactly half-integer: 11.5 -> 12 by round-half-up
    const auto mags =
        range_profile(synthesize_frame(cfg, pose(11.5 * cfg.range_resolution_m, 0.0), 1.0, 1), cfg);
    CHECK(peak_bin(mags) == 12);
}

TEST_CASE("session gains: reference session is exactly zero") {
    CHECK(session_gain_db(104, 0) == 0.0);
    CHECK(session_gain_db(104, 3) == session_gain_db(104, 3));
    CHECK(session_gain_db(104, 3) != session_gain_db(104, 4));
    CHECK(session_gain_db(104, 3) != session_gain_db(105, 3));
}

TEST_CASE("generate_dataset counts and nominal metadata") {
    const AppConfig app = default_config();
    const Dataset ds = generate_dataset(app.radar, app.materials, Scenario::nominal(), 10, 7);
    REQUIRE(ds.profiles.size() == 50);
    for (const auto& p : ds.profiles) {
        CHECK(p.geometry.height_m == 0.45);
        CHECK(p.geometry.tilt_deg == 0.0);
        CHECK(p.geometry.session_id == 0);
        CHECK(p.magnitudes.size() == 32);
        CHECK(p.material_class >= 0);
        CHECK(p.material_class <= 4);
    }
}

TEST_CASE("generate_dataset deterministic per base seed") {
    const AppConfig app = default_config();
    const Dataset a = generate_dataset(app.radar, app.materials, Scenario::tilt(10.0), 5, 42);
    const Dataset b = generate_dataset(app.radar, app.materials, Scenario::tilt(10.0), 5, 42);
    const Dataset c = generate_dataset(app.radar, app.materials, Scenario::tilt(10.0), 5, 43);
    REQUIRE(a.profiles.size() == b.profiles.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.profiles.size(); ++i) {
        identical = identical && a.profiles[i].magnitudes == b.profiles[i].magnitudes;
    }
    CHECK(identical);
    bool differs = false;
    for (std::size_t i = 0; i < a.profiles.size(); ++i) {
        differs = differs || a.profiles[i].magnitudes != c.profiles[i].magnitudes;
    }
    CHECK(differs);
}

TEST_CASE("generate_dataset equals per-sequence simulation in any order") {
    const AppConfig app = default_config();
    const Dataset ds = generate_dataset(app.radar, app.materials, Scenario::nominal(), 4, 99);
    // rebuild each profile independently, iterating in reverse
    for (int c = 4; c >= 0; --c) {
        for (int i = 3; i >= 0; --i) {
            const std::uint64_t seq_seed = seed_mix(99, static_cast<std::uint64_t>(c),
                                                    static_cast<std::uint64_t>(i));
            GeometryConfig geom;
            const RangeProfile p =
                simulate_sequence(app.radar, app.materials[static_cast<std::size_t>(c)], geom,
                                  seq_seed);
            CHECK(p.magnitudes == ds.profiles[static_cast<std::size_t>(c * 4 + i)].magnitudes);
        }
    }
}

TEST_CASE("tilted metals return less in-window energy than nominal") {
    const AppConfig app = default_config();
    const Dataset nominal = generate_dataset(app.radar, app.materials, Scenario::nominal(), 10, 5);
    const Dataset tilted = generate_dataset(app.radar, app.materials, Scenario::tilt(10.0), 10, 5);

    auto metal_peak_mean = [](const Dataset& ds) {
        double sum = 0.0;
        int count = 0;
        for (const auto& p : ds.profiles) {
            if (p.material_class > 1) continue;
            double peak = 0.0;
            for (const double m : p.magnitudes) peak = std::max(peak, m);
            sum += peak;
            ++count;
        }
        return sum / count;
    };
    CHECK(metal_peak_mean(tilted) < metal_peak_mean(nominal));
}

TEST_CASE("session scenario varies only session identity") {
    const AppConfig app = default_config();
    const Dataset ds = generate_dataset(app.radar, app.materials, Scenario::session(4), 8, 77);
    bool saw_gain = false;
    for (const auto& p : ds.profiles) {
        CHECK(p.geometry.height_m == 0.45);
        CHECK(p.geometry.tilt_deg == 0.0);
        CHECK(p.geometry.session_id >= 1);
        CHECK(p.geometry.session_id <= 4);
        saw_gain = saw_gain || p.geometry.session_gain_db != 0.0;
    }
    CHECK(saw_gain);
}

TEST_CASE("profiles csv round trip") {
    const AppConfig app = default_config();
    const Dataset ds = generate_dataset(app.radar, app.materials, Scenario::height(0.55), 3, 21);
    std::ostringstream os;
    write_profiles_csv(os, ds, app.radar.num_range_bins);
    const std::string bytes = os.str();
    CHECK(bytes.rfind("class_id,height_m,tilt_deg,session_id,bin00,", 0) == 0);

    std::istringstream is(bytes);
    const Dataset back = read_profiles_csv(is);
    REQUIRE(back.profiles.size() == ds.profiles.size());
    for (std::size_t i = 0; i < ds.profiles.size(); ++i) {
        CHECK(back.profiles[i].material_class == ds.profiles[i].material_class);
        CHECK(back.profiles[i].geometry.session_id == ds.profiles[i].geometry.session_id);
        for (std::size_t b = 0; b < 32; ++b) {
            CHECK(back.profiles[i].magnitudes[b] ==
                  doctest::Approx(ds.profiles[i].magnitudes[b]).epsilon(1e-8));
        }
    }
    // rewriting parsed data reproduces the 9-significant-digit rendering
    std::ostringstream os2;
    write_profiles_csv(os2, back, app.radar.num_range_bins);
    CHECK(os2.str() == bytes);
}

TEST_CASE("scenario name strings") {
    CHECK(Scenario::nominal().name() == "nominal");
    CHECK(Scenario::height(0.35).name() == "height(0.35)");
    CHECK(Scenario::tilt(-10.0).name() == "tilt(-10)");
    CHECK(Scenario::session(4).name() == "session(4)");
}
