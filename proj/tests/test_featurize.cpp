#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "radmat/config.hpp"
#include "radmat/featurize.hpp"
#include "radmat/sim.hpp"

using namespace radmat;

namespace {

RangeProfile make_profile(std::vector<double> mags, int label = 0) {
    RangeProfile p;
    p.magnitudes = std::move(mags);
    p.material_class = label;
    return p;
}

// |DFT of a unit tone at fractional bin offset delta| with 1/N scaling;
// closed-form Dirichlet kernel, independent of the simulator's FFT.
double dirichlet(double delta, int n) {
    if (std::abs(delta) < 1e-15) return 1.0;
    return std::abs(std::sin(std::numbers::pi * delta)) /
           (n * std::abs(std::sin(std::numbers::pi * delta / n)));
}

}  // namespace

TEST_CASE("select_window recovers bins 6..17 on nominal training data") {
    const AppConfig app = default_config();
    const Dataset train = generate_dataset(app.radar, app.materials, Scenario::nominal(), 50,
                                           seed_mix(app.radar.master_seed, 0xE0000001));
    const BinWindow w = select_window(train.profiles, kFeatureDim);
    CHECK(w.start_bin == 6);
    CHECK(w.width == 12);
}

TEST_CASE("select_window trivial cases") {
    SUBCASE("all energy in bin 0") {
        std::vector<double> mags(32, 0.0);
        mags[0] = 5.0;
        const std::vector<RangeProfile> one = {make_profile(mags)};
        CHECK(select_window(one, 12).start_bin == 0);
    }
    SUBCASE("flat constant profiles tie to start 0") {
        const std::vector<RangeProfile> flat = {make_profile(std::vector<double>(32, 1.0)),
                                                make_profile(std::vector<double>(32, 1.0))};
        CHECK(select_window(flat, 12).start_bin == 0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(select_window(std::vector<RangeProfile>{}, 12), FeaturizeError);
        const std::vector<RangeProfile> tiny = {make_profile(std::vector<double>(8, 1.0))};
        CHECK_THROWS_AS(select_window(tiny, 12), FeaturizeError);
    }
}

TEST_CASE("select_window invariant under uniform positive scaling") {
    const AppConfig app = default_config();
    Dataset train = generate_dataset(app.radar, app.materials, Scenario::nominal(), 20, 31);
    const BinWindow before = select_window(train.profiles, kFeatureDim);
    for (auto& p : train.profiles) {
        for (auto& m : p.magnitudes) m *= 37.5;
    }
    CHECK(select_window(train.profiles, kFeatureDim).start_bin == before.start_bin);
}

TEST_CASE("extract_features slices and copies metadata") {
    std::vector<double> mags(32, 0.0);
    for (int b = 6; b <= 17; ++b) mags[static_cast<std::size_t>(b)] = b - 5;  // 1..12
    RangeProfile p = make_profile(mags, 3);
    p.geometry.height_m = 0.55;
    p.geometry.session_id = 2;

    const FeatureVector fv = extract_features(p, BinWindow{6, 12});
    REQUIRE(fv.values.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(fv.values[static_cast<std::size_t>(i)] == i + 1);
    CHECK(fv.label == 3);
    CHECK(fv.geometry.height_m == 0.55);
    CHECK(fv.geometry.session_id == 2);
}

TEST_CASE("extract_features zero profile and window bounds") {
    const RangeProfile zero = make_profile(std::vector<double>(32, 0.0));
    const FeatureVector fv = extract_features(zero, BinWindow{6, 12});
    for (const double v : fv.values) CHECK(v == 0.0);

    CHECK_THROWS_AS(extract_features(zero, BinWindow{21, 12}), FeaturizeError);
    CHECK_THROWS_AS(extract_features(zero, BinWindow{-1, 12}), FeaturizeError);
    CHECK_THROWS_AS(extract_features(zero, BinWindow{6, 11}), FeaturizeError);
}

TEST_CASE("noiseless nominal metal peaks at window index 6") {
    AppConfig app = default_config();
    app.radar.noise_sigma = 0.0;
    app.radar.placement_sigma_m = 0.0;
    const auto frame = synthesize_frame(app.radar, GeometryConfig{}, 1.0, 1);
    RangeProfile p;
    p.magnitudes = range_profile(frame, app.radar);
    const FeatureVector fv = extract_features(p, BinWindow{6, 12});
    CHECK(peak_bin(fv.values) == 6);  // bin 12 - start 6
}

TEST_CASE("normalize none is the identity") {
    FeatureVector fv;
    fv.values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    const FeatureVector out = normalize(fv, Normalization{}, BinWindow{6, 12});
    CHECK(out.values == fv.values);
}

TEST_CASE("normalize max_unit") {
    FeatureVector fv;
    fv.values = {0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 3, 4};
    Normalization norm;
    norm.mode = NormMode::MaxUnit;
    const FeatureVector out = normalize(fv, norm, BinWindow{6, 12});
    CHECK(out.values.back() == doctest::Approx(1.0));
    CHECK(out.values[8] == doctest::Approx(0.25));

    FeatureVector zeros;
    zeros.values.assign(12, 0.0);
    CHECK_THROWS_AS(normalize(zeros, norm, BinWindow{6, 12}), DegenerateFeature);
}

TEST_CASE("normalize log_magnitude applies the documented floor") {
    FeatureVector fv;
    fv.values.assign(12, 0.0);
    fv.values[3] = 1.0;
    Normalization norm;
    norm.mode = NormMode::LogMagnitude;
    const FeatureVector out = normalize(fv, norm, BinWindow{6, 12});
    CHECK(out.values[3] == doctest::Approx(std::log(1.0 + 1e-9)));
    CHECK(out.values[0] == doctest::Approx(std::log(1e-9)));
}

TEST_CASE("range_r4 restoration at shifted heights matches the closed-form oracle") {
    // Oracle chain for the noiseless pipeline: amplitude (R_ref/R)^2, DFT
    // scalloping at the fractional bin, then the (R_hat/R_ref)^2 correction
    // with R_hat at the rounded peak bin.
    AppConfig app = default_config();
    app.radar.noise_sigma = 0.0;
    app.radar.placement_sigma_m = 0.0;
    const int n = app.radar.num_adc_samples;
    const BinWindow window{6, 12};
    Normalization norm;
    norm.mode = NormMode::RangeR4;
    norm.reference_range_m = app.radar.reference_range_m;
    norm.range_resolution_m = app.radar.range_resolution_m;

    auto restored_peak = [&](double height) {
        GeometryConfig geom;
        geom.height_m = height;
        const MaterialSpec& iron = app.materials[0];
        const double amp = received_amplitude(app.radar, geom, iron, 1.0);
        RangeProfile p;
        p.magnitudes = range_profile(synthesize_frame(app.radar, geom, amp, 1), app.radar);
        p.material_class = 0;
        const FeatureVector fv = normalize(extract_features(p, window), norm, window);
        return *std::max_element(fv.values.begin(), fv.values.end());
    };
    const double nominal_peak = restored_peak(0.45);

    for (const double height : {0.55, 0.35}) {
        const double bin_pos = height / app.radar.range_resolution_m;
        const int rounded = static_cast<int>(std::floor(bin_pos + 0.5));
        const double expected_ratio =
            std::pow(0.45 / height, 2.0) * dirichlet(bin_pos - rounded, n) *
            std::pow(rounded * app.radar.range_resolution_m / 0.45, 2.0);
        CHECK(restored_peak(height) / nominal_peak ==
              doctest::Approx(expected_ratio).epsilon(1e-9));
    }
    // frozen oracle values: scalloping + bin quantization bound the recovery
    CHECK(restored_peak(0.55) / nominal_peak == doctest::Approx(0.86505).epsilon(1e-4));
    CHECK(restored_peak(0.35) / nominal_peak == doctest::Approx(0.76901).epsilon(1e-4));
    // and r4 moves the shifted peak much closer to nominal than raw does
    CHECK(std::abs(restored_peak(0.55) / nominal_peak - 1.0) < 0.14);
}

TEST_CASE("range_r4 populates the estimated range") {
    AppConfig app = default_config();
    app.radar.noise_sigma = 0.0;
    app.radar.placement_sigma_m = 0.0;
    GeometryConfig geom;
    geom.height_m = 0.55;
    RangeProfile p;
    p.magnitudes = range_profile(synthesize_frame(app.radar, geom, 1.0, 1), app.radar);
    Normalization norm;
    norm.mode = NormMode::RangeR4;
    const FeatureVector fv = normalize(extract_features(p, BinWindow{6, 12}), norm,
                                       BinWindow{6, 12});
    CHECK(fv.estimated_range_m == doctest::Approx(15 * 0.0375));
}

TEST_CASE("argmax index invariant under range_r4 and max_unit") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        FeatureVector fv;
        fv.values.resize(12);
        for (auto& v : fv.values) v = unit(rng);
        const int before = peak_bin(fv.values);

        Normalization r4;
        r4.mode = NormMode::RangeR4;
        CHECK(peak_bin(normalize(fv, r4, BinWindow{6, 12}).values) == before);

        Normalization mx;
        mx.mode = NormMode::MaxUnit;
        CHECK(peak_bin(normalize(fv, mx, BinWindow{6, 12}).values) == before);
    }
}

TEST_CASE("norm mode parsing round trips") {
    for (const auto mode : {NormMode::None, NormMode::RangeR4, NormMode::LogMagnitude,
                            NormMode::MaxUnit}) {
        CHECK(parse_norm_mode(to_string(mode)) == mode);
    }
    CHECK_THROWS_AS(parse_norm_mode("zscore"), FeaturizeError);
}

TEST_CASE("features csv header carries absolute bin indices") {
    const AppConfig app = default_config();
    const Dataset ds = generate_dataset(app.radar, app.materials, Scenario::nominal(), 2, 8);
    const FeatureDataset feats = featurize(ds, BinWindow{6, 12}, Normalization{}, app.materials);
    std::ostringstream os;
    write_features_csv(os, feats);
    const std::string bytes = os.str();
    CHECK(bytes.rfind("label,class_name,height_m,tilt_deg,session_id,b06,b07", 0) == 0);
    CHECK(bytes.find(",b17\n") != std::string::npos);

    std::istringstream is(bytes);
    const FeatureDataset back = read_features_csv(is);
    CHECK(back.window.start_bin == 6);
    REQUIRE(back.items.size() == feats.items.size());
    CHECK(back.class_names[0] == "iron");
    CHECK(back.class_names[4] == "limestone");
    for (std::size_t i = 0; i < feats.items.size(); ++i) {
        CHECK(back.items[i].label == feats.items[i].label);
        for (int b = 0; b < 12; ++b) {
            CHECK(back.items[i].values[static_cast<std::size_t>(b)] ==
                  doctest::Approx(feats.items[i].values[static_cast<std::size_t>(b)]).epsilon(1e-8));
        }
    }
    // deterministic bytes on rewrite
    std::ostringstream os2;
    write_features_csv(os2, back);
    CHECK(os2.str() == bytes);
}
