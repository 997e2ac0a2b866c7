#include "radmat/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace radmat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;

// Salts for independent per-purpose RNG streams.
constexpr std::uint64_t kFrameSalt = 0xF7A3E001;
constexpr std::uint64_t kJitterSalt = 0xF7A3E002;
constexpr std::uint64_t kGeometrySalt = 0xF7A3E003;
constexpr std::uint64_t kSessionSalt = 0xF7A3E004;
constexpr std::uint64_t kPlacementSalt = 0xF7A3E005;

[[noreturn]] void fail(const std::string& msg) { throw SimError(msg); }

void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

}  // namespace

void RadarConfig::validate() const {
    require(num_adc_samples >= 1, "radar: num_adc_samples must be positive");
    require(num_range_bins >= 1 && num_range_bins <= num_adc_samples,
            "radar: num_range_bins must be in [1, num_adc_samples]");
    require(std::isfinite(range_resolution_m) && range_resolution_m > 0.0,
            "radar: range_resolution_m must be > 0");
    require(frames_per_sequence >= 1, "radar: frames_per_sequence must be >= 1");
    require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "radar: noise_sigma must be >= 0");
    require(std::isfinite(amplitude_ref) && amplitude_ref >= 0.0,
            "radar: amplitude_ref must be >= 0");
    require(std::isfinite(reference_range_m) && reference_range_m > 0.0,
            "radar: reference_range_m must be > 0");
    require(std::isfinite(placement_sigma_m) && placement_sigma_m >= 0.0,
            "radar: placement_sigma_m must be >= 0");
}

void GeometryConfig::validate() const {
    require(std::isfinite(height_m) && height_m > 0.0, "geometry: height_m must be > 0");
    require(std::isfinite(tilt_deg) && std::abs(tilt_deg) < 90.0,
            "geometry: |tilt_deg| must be < 90");
    require(session_id >= 0, "geometry: session_id must be >= 0");
    require(std::isfinite(session_gain_db), "geometry: session_gain_db must be finite");
}

void MaterialSpec::validate() const {
    require(!name.empty(), "material: name must be non-empty");
    require(class_id >= 0 && class_id <= 4, "material: class_id must be in [0,4]");
    require(std::isfinite(reflectivity) && reflectivity > 0.0 && reflectivity <= 1.0,
            "material '" + name + "': reflectivity must be in (0,1]");
    require(std::isfinite(specular_fraction) && specular_fraction >= 0.0 &&
                specular_fraction <= 1.0,
            "material '" + name + "': specular_fraction must be in [0,1]");
    require(std::isfinite(lobe_width_deg) && lobe_width_deg > 0.0,
            "material '" + name + "': lobe_width_deg must be > 0");
    require(std::isfinite(texture_sigma) && texture_sigma >= 0.0,
            "material '" + name + "': texture_sigma must be >= 0");
}

Scenario Scenario::nominal() { return Scenario{}; }

Scenario Scenario::height(double h_m) {
    Scenario s;
    s.kind = Kind::Height;
    s.height_m = h_m;
    return s;
}

Scenario Scenario::tilt(double t_deg) {
    Scenario s;
    s.kind = Kind::Tilt;
    s.tilt_deg = t_deg;
    return s;
}

Scenario Scenario::session(int num_sessions) {
    Scenario s;
    s.kind = Kind::Session;
    s.num_sessions = num_sessions;
    return s;
}

Scenario Scenario::augmented(double h_min, double h_max, double t_min, double t_max) {
    Scenario s;
    s.kind = Kind::Augmented;
    s.height_min_m = h_min;
    s.height_max_m = h_max;
    s.tilt_min_deg = t_min;
    s.tilt_max_deg = t_max;
    return s;
}

std::string Scenario::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Nominal: return "nominal";
        case Kind::Height:
            os << "height(" << fmt_g(height_m, 9) << ")";
            return os.str();
        case Kind::Tilt:
            os << "tilt(" << fmt_g(tilt_deg, 9) << ")";
            return os.str();
        case Kind::Session:
            os << "session(" << num_sessions << ")";
            return os.str();
        case Kind::Augmented:
            os << "augmented(h=[" << fmt_g(height_min_m, 9) << "," << fmt_g(height_max_m, 9)
               << "],t=[" << fmt_g(tilt_min_deg, 9) << "," << fmt_g(tilt_max_deg, 9) << "])";
            return os.str();
    }
    return "unknown";
}

void Scenario::validate() const {
    switch (kind) {
        case Kind::Nominal:
        case Kind::Tilt:
        case Kind::Height:
            require(std::isfinite(height_m) && height_m > 0.0, "scenario: height must be > 0");
            require(std::isfinite(tilt_deg) && std::abs(tilt_deg) < 90.0,
                    "scenario: |tilt| must be < 90");
            break;
        case Kind::Session:
            require(num_sessions >= 1, "scenario: num_sessions must be >= 1");
            break;
        case Kind::Augmented:
            require(height_min_m > 0.0 && height_max_m >= height_min_m,
                    "scenario: bad augmented height range");
            require(std::abs(tilt_min_deg) < 90.0 && std::abs(tilt_max_deg) < 90.0 &&
                        tilt_max_deg >= tilt_min_deg,
                    "scenario: bad augmented tilt range");
            break;
    }
}

double slant_range(const GeometryConfig& geom) {
    geom.validate();
    return geom.height_m / std::cos(geom.tilt_deg * kDegToRad);
}

double angular_response(const MaterialSpec& mat, double tilt_deg) {
    mat.validate();
    require(std::isfinite(tilt_deg), "angular_response: tilt must be finite");
    const double s = mat.specular_fraction;
    const double w = mat.lobe_width_deg;
    return (1.0 - s) + s * std::exp(-(tilt_deg * tilt_deg) / (2.0 * w * w));
}

double received_power(const RadarConfig& cfg, const GeometryConfig& geom,
                      const MaterialSpec& mat, double sequence_jitter) {
    cfg.validate();
    require(std::isfinite(sequence_jitter) && sequence_jitter > 0.0,
            "received_power: sequence_jitter must be > 0");
    const double range = slant_range(geom);
    const double lobe = angular_response(mat, geom.tilt_deg);
    const double session_gain = std::pow(10.0, geom.session_gain_db / 10.0);
    // q kept as an explicit quotient so halving the range scales power by
    // exactly 1/16 in floating point as well.
    const double q = cfg.reference_range_m / range;
    const double q2 = q * q;
    const double q4 = q2 * q2;
    return mat.reflectivity * lobe * session_gain * sequence_jitter * q4;
}

double received_amplitude(const RadarConfig& cfg, const GeometryConfig& geom,
                          const MaterialSpec& mat, double sequence_jitter) {
    return cfg.amplitude_ref * std::sqrt(received_power(cfg, geom, mat, sequence_jitter));
}

std::vector<std::complex<double>> synthesize_frame(const RadarConfig& cfg,
                                                   const GeometryConfig& geom,
                                                   double amplitude,
                                                   std::uint64_t frame_seed) {
    cfg.validate();
    require(std::isfinite(amplitude) && amplitude >= 0.0,
            "synthesize_frame: amplitude must be >= 0");
    const double bin_position = slant_range(geom) / cfg.range_resolution_m;
    if (bin_position >= static_cast<double>(cfg.num_range_bins)) {
        throw TargetOutOfWindow("target at bin " + fmt_g(bin_position, 6) +
                                " beyond retained spectrum (" +
                                std::to_string(cfg.num_range_bins) + " bins)");
    }

    const int n = cfg.num_adc_samples;
    std::vector<std::complex<double>> frame(static_cast<std::size_t>(n));
    const double w = 2.0 * kPi * bin_position / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        frame[static_cast<std::size_t>(i)] = std::polar(amplitude, w * static_cast<double>(i));
    }
    if (cfg.noise_sigma > 0.0) {
        std::mt19937_64 rng(frame_seed);
        std::normal_distribution<double> gauss(0.0, cfg.noise_sigma);
        for (int i = 0; i < n; ++i) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            frame[static_cast<std::size_t>(i)] += std::complex<double>(re, im);
        }
    }
    return frame;
}

namespace {

std::vector<std::complex<double>> dft_direct(std::span<const std::complex<double>> x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            const double angle = -2.0 * kPi * static_cast<double>(k * j % n) /
                                 static_cast<double>(n);
            acc += x[j] * std::polar(1.0, angle);
        }
        out[k] = acc;
    }
    return out;
}

std::vector<std::complex<double>> fft_radix2(std::span<const std::complex<double>> x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> a(x.begin(), x.end());
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * kPi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto w = std::polar(1.0, angle * static_cast<double>(k));
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    return a;
}

}  // namespace

std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    if ((n & (n - 1)) == 0) return fft_radix2(x);
    return dft_direct(x);
}

std::vector<double> range_profile(std::span<const std::complex<double>> frame,
                                  const RadarConfig& cfg) {
    cfg.validate();
    require(frame.size() == static_cast<std::size_t>(cfg.num_adc_samples),
            "range_profile: frame length != num_adc_samples");
    const auto spectrum = dft(frame);
    const double scale = 1.0 / static_cast<double>(cfg.num_adc_samples);
    std::vector<double> mags(static_cast<std::size_t>(cfg.num_range_bins));
    for (int k = 0; k < cfg.num_range_bins; ++k) {
        mags[static_cast<std::size_t>(k)] = std::abs(spectrum[static_cast<std::size_t>(k)]) * scale;
    }
    return mags;
}

RangeProfile integrate_sequence(std::span<const RangeProfile> profiles) {
    require(!profiles.empty(), "integrate_sequence: empty profile list");
    const std::size_t bins = profiles.front().magnitudes.size();
    RangeProfile out;
    out.magnitudes.assign(bins, 0.0);
    out.geometry = profiles.front().geometry;
    out.material_class = profiles.front().material_class;
    for (const auto& p : profiles) {
        require(p.magnitudes.size() == bins, "integrate_sequence: profile length mismatch");
        for (std::size_t b = 0; b < bins; ++b) out.magnitudes[b] += p.magnitudes[b];
    }
    const double inv = 1.0 / static_cast<double>(profiles.size());
    for (auto& m : out.magnitudes) m *= inv;
    return out;
}

int peak_bin(std::span<const double> magnitudes) {
    require(!magnitudes.empty(), "peak_bin: empty profile");
    double best = magnitudes[0];
    for (const double m : magnitudes) best = std::max(best, m);
    const double threshold = best - 1e-9 * std::abs(best);
    int idx = 0;
    for (int b = 0; b < static_cast<int>(magnitudes.size()); ++b) {
        if (magnitudes[static_cast<std::size_t>(b)] >= threshold) idx = b;
    }
    return idx;
}

double session_gain_db(std::uint64_t master_seed, int session_id) {
    require(session_id >= 0, "session_gain_db: session_id must be >= 0");
    if (session_id == 0) return 0.0;
    std::mt19937_64 rng(seed_mix(master_seed, kSessionSalt, static_cast<std::uint64_t>(session_id)));
    std::normal_distribution<double> gauss(0.0, 1.0);  // dB
    return gauss(rng);
}

RangeProfile simulate_sequence(const RadarConfig& cfg, const MaterialSpec& mat,
                               const GeometryConfig& geom, std::uint64_t sequence_seed) {
    mat.validate();
    double jitter = 1.0;
    if (mat.texture_sigma > 0.0) {
        std::mt19937_64 rng(seed_mix(sequence_seed, kJitterSalt));
        std::normal_distribution<double> gauss(0.0, 1.0);
        jitter = std::exp(mat.texture_sigma * gauss(rng));
    }
    const double amplitude = received_amplitude(cfg, geom, mat, jitter);

    std::vector<RangeProfile> frames;
    frames.reserve(static_cast<std::size_t>(cfg.frames_per_sequence));
    // Specimens never sit at exactly the configured height; per-sequence
    // placement tolerance moves the true surface range a little, which is
    // what spreads target energy into neighboring bins across the set. The
    // received amplitude keeps the configured pose: a few mm shift the beat
    // frequency by a visible bin fraction but change power by well under 1%.
    GeometryConfig true_geom = geom;
    if (cfg.placement_sigma_m > 0.0) {
        std::mt19937_64 prng(seed_mix(sequence_seed, kPlacementSalt));
        std::normal_distribution<double> pg(0.0, 1.0);
        true_geom.height_m = geom.height_m + cfg.placement_sigma_m * pg(prng);
    }
    for (int f = 0; f < cfg.frames_per_sequence; ++f) {
        const std::uint64_t frame_seed =
            seed_mix(sequence_seed, kFrameSalt, static_cast<std::uint64_t>(f));
        const auto adc = synthesize_frame(cfg, true_geom, amplitude, frame_seed);
        RangeProfile p;
        p.magnitudes = range_profile(adc, cfg);
        p.geometry = geom;
        p.material_class = mat.class_id;
        frames.push_back(std::move(p));
    }
    return integrate_sequence(frames);
}

namespace {

GeometryConfig scenario_geometry(const RadarConfig& cfg, const Scenario& scenario,
                                 int sequence_index, std::uint64_t sequence_seed) {
    GeometryConfig geom;
    switch (scenario.kind) {
        case Scenario::Kind::Nominal:
            geom.height_m = scenario.height_m;
            geom.tilt_deg = 0.0;
            break;
        case Scenario::Kind::Height:
            geom.height_m = scenario.height_m;
            geom.tilt_deg = 0.0;
            break;
        case Scenario::Kind::Tilt:
            geom.height_m = scenario.height_m;
            geom.tilt_deg = scenario.tilt_deg;
            break;
        case Scenario::Kind::Session: {
            geom.height_m = scenario.height_m;
            geom.tilt_deg = 0.0;
            geom.session_id = 1 + sequence_index % scenario.num_sessions;
            geom.session_gain_db = session_gain_db(cfg.master_seed, geom.session_id);
            break;
        }
        case Scenario::Kind::Augmented: {
            std::mt19937_64 rng(seed_mix(sequence_seed, kGeometrySalt));
            std::uniform_real_distribution<double> h(scenario.height_min_m, scenario.height_max_m);
            std::uniform_real_distribution<double> t(scenario.tilt_min_deg, scenario.tilt_max_deg);
            geom.height_m = h(rng);
            geom.tilt_deg = t(rng);
            break;
        }
    }
    return geom;
}

}  // namespace

Dataset generate_dataset(const RadarConfig& cfg, std::span<const MaterialSpec> materials,
                         const Scenario& scenario, int n_sequences_per_class,
                         std::uint64_t base_seed) {
    cfg.validate();
    scenario.validate();
    require(n_sequences_per_class >= 1, "generate_dataset: n_sequences_per_class must be >= 1");
    require(materials.size() == 5, "generate_dataset: expected 5 material classes");

    Dataset ds;
    ds.profiles.reserve(materials.size() * static_cast<std::size_t>(n_sequences_per_class));
    for (const auto& mat : materials) {
        mat.validate();
        for (int i = 0; i < n_sequences_per_class; ++i) {
            const std::uint64_t seq_seed = seed_mix(
                base_seed, static_cast<std::uint64_t>(mat.class_id), static_cast<std::uint64_t>(i));
            const GeometryConfig geom = scenario_geometry(cfg, scenario, i, seq_seed);
            ds.profiles.push_back(simulate_sequence(cfg, mat, geom, seq_seed));
        }
    }
    return ds;
}

void write_profiles_csv(std::ostream& os, const Dataset& ds, int num_range_bins) {
    os << "class_id,height_m,tilt_deg,session_id";
    for (int b = 0; b < num_range_bins; ++b) {
        char col[16];
        std::snprintf(col, sizeof(col), "bin%02d", b);
        os << ',' << col;
    }
    os << '\n';
    for (const auto& p : ds.profiles) {
        require(p.magnitudes.size() == static_cast<std::size_t>(num_range_bins),
                "write_profiles_csv: profile length mismatch");
        os << p.material_class << ',' << fmt_g(p.geometry.height_m, 9) << ','
           << fmt_g(p.geometry.tilt_deg, 9) << ',' << p.geometry.session_id;
        for (const double m : p.magnitudes) os << ',' << fmt_g(m, 9);
        os << '\n';
    }
}

Dataset read_profiles_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "profiles csv: missing header");
    require(line.rfind("class_id,height_m,tilt_deg,session_id,bin00", 0) == 0,
            "profiles csv: unexpected header");
    const std::size_t bins = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 3;

    Dataset ds;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        RangeProfile p;
        auto next = [&]() {
            require(static_cast<bool>(std::getline(row, cell, ',')), "profiles csv: short row");
            return cell;
        };
        p.material_class = std::stoi(next());
        p.geometry.height_m = std::stod(next());
        p.geometry.tilt_deg = std::stod(next());
        p.geometry.session_id = std::stoi(next());
        p.magnitudes.reserve(bins);
        for (std::size_t b = 0; b < bins; ++b) p.magnitudes.push_back(std::stod(next()));
        ds.profiles.push_back(std::move(p));
    }
    return ds;
}

}  // namespace radmat
