#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radmat/common.hpp"

namespace radmat {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Target beat frequency falls beyond the retained part of the spectrum.
struct TargetOutOfWindow : SimError {
    using SimError::SimError;
};

// Sweep and acquisition parameters of the simulated sensor.
struct RadarConfig {
    int num_adc_samples = 64;
    int num_range_bins = 32;        // lower half of the spectrum is kept
    double range_resolution_m = 0.0375;
    int frames_per_sequence = 16;
    double noise_sigma = 0.02;      // per complex component, linear amplitude
    double amplitude_ref = 1.0;     // perfect reflector at reference_range_m
    double reference_range_m = 0.45;
    double placement_sigma_m = 0.0025;  // per-sequence sample placement tolerance (std)
    std::uint64_t master_seed = 104;

    void validate() const;
};

// Sensor pose and recording-session identity for one sequence.
struct GeometryConfig {
    double height_m = 0.45;
    double tilt_deg = 0.0;          // 0 = nadir
    int session_id = 0;             // 0 = reference (training) session
    double session_gain_db = 0.0;   // power gain perturbation of the session

    void validate() const;
};

// Scattering model of one material class.
struct MaterialSpec {
    std::string name;
    int class_id = 0;
    double reflectivity = 1.0;       // power ratio, (0,1]
    double specular_fraction = 0.0;  // 1 = mirror-like
    double lobe_width_deg = 1.0;     // angular std-dev of the specular lobe
    double texture_sigma = 0.0;      // lognormal sigma of per-sequence power jitter

    void validate() const;
};

// Magnitude spectrum over the retained range bins for one (integrated) frame.
struct RangeProfile {
    std::vector<double> magnitudes;
    GeometryConfig geometry;
    int material_class = -1;
};

struct Dataset {
    std::vector<RangeProfile> profiles;
};

// Geometry/material plan for one generated dataset.
struct Scenario {
    enum class Kind { Nominal, Height, Tilt, Session, Augmented };

    Kind kind = Kind::Nominal;
    double height_m = 0.45;          // Height scenarios; also nominal pose
    double tilt_deg = 0.0;           // Tilt scenarios
    int num_sessions = 4;            // Session scenarios: fresh sessions 1..num_sessions
    double height_min_m = 0.35;      // Augmented ranges
    double height_max_m = 0.55;
    double tilt_min_deg = -10.0;
    double tilt_max_deg = 10.0;

    static Scenario nominal();
    static Scenario height(double h_m);
    static Scenario tilt(double t_deg);
    static Scenario session(int num_sessions);
    static Scenario augmented(double h_min, double h_max, double t_min, double t_max);

    std::string name() const;
    void validate() const;
};

// Line-of-sight distance to the surface: height / cos(tilt).
double slant_range(const GeometryConfig& geom);

// Specular-lobe attenuation L(t) = (1-s) + s*exp(-t^2 / (2 w^2)), in (0,1].
double angular_response(const MaterialSpec& mat, double tilt_deg);

// Radar-equation received power: Gamma * L(tilt) * g_session * jitter * (R_ref/R)^4.
double received_power(const RadarConfig& cfg, const GeometryConfig& geom,
                      const MaterialSpec& mat, double sequence_jitter);

// amplitude_ref * sqrt(received_power); strictly decreasing in slant range.
double received_amplitude(const RadarConfig& cfg, const GeometryConfig& geom,
                          const MaterialSpec& mat, double sequence_jitter);

// One beat-signal frame: complex tone at bin position R/dR plus complex
// Gaussian noise with per-component std noise_sigma. Deterministic per seed.
std::vector<std::complex<double>> synthesize_frame(const RadarConfig& cfg,
                                                   const GeometryConfig& geom,
                                                   double amplitude,
                                                   std::uint64_t frame_seed);

// Unnormalized forward DFT. Radix-2 FFT for power-of-two sizes, direct
// summation otherwise.
std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x);

// 1/N-scaled magnitudes of the first num_range_bins DFT bins.
std::vector<double> range_profile(std::span<const std::complex<double>> frame,
                                  const RadarConfig& cfg);

// Per-bin arithmetic mean over frames.
RangeProfile integrate_sequence(std::span<const RangeProfile> profiles);

// Index of the largest magnitude. Bins within 1e-9 relative of the maximum
// count as tied and the highest tied index wins, which realizes round-half-up
// localization for targets sitting exactly between two bins.
int peak_bin(std::span<const double> magnitudes);

// Power gain of a recording session in dB; session 0 is the reference
// session and has gain exactly 0.
double session_gain_db(std::uint64_t master_seed, int session_id);

// One integrated sequence for a fully resolved geometry. Draw order per
// sequence seed: texture jitter first, then per-frame noise via derived
// frame seeds.
RangeProfile simulate_sequence(const RadarConfig& cfg, const MaterialSpec& mat,
                               const GeometryConfig& geom, std::uint64_t sequence_seed);

// 5 * n_sequences_per_class integrated profiles. Per-sequence seeds are
// derived as seed_mix(base_seed, class_id, sequence_index), so the result is
// a pure function of (cfg, materials, scenario, n, base_seed) regardless of
// generation order.
Dataset generate_dataset(const RadarConfig& cfg, std::span<const MaterialSpec> materials,
                         const Scenario& scenario, int n_sequences_per_class,
                         std::uint64_t base_seed);

// Debug profile dump: class_id,height_m,tilt_deg,session_id,bin00,...  Floats
// carry 9 significant digits.
void write_profiles_csv(std::ostream& os, const Dataset& ds, int num_range_bins);
Dataset read_profiles_csv(std::istream& is);

}  // namespace radmat
