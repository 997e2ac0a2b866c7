#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radmat/sim.hpp"

namespace radmat {

struct FeaturizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All-zero input where a normalization mode needs a nonzero reference.
struct DegenerateFeature : FeaturizeError {
    using FeaturizeError::FeaturizeError;
};

inline constexpr int kFeatureDim = 12;

struct BinWindow {
    int start_bin = 0;
    int width = kFeatureDim;
};

struct FeatureVector {
    std::vector<double> values;  // kFeatureDim linear magnitudes (pre-normalization)
    int label = -1;
    GeometryConfig geometry;
    double estimated_range_m = 0.0;  // populated by range-aware normalization
};

enum class NormMode { None, RangeR4, LogMagnitude, MaxUnit };

NormMode parse_norm_mode(const std::string& name);
std::string to_string(NormMode mode);

struct Normalization {
    NormMode mode = NormMode::None;
    double reference_range_m = 0.45;   // RangeR4
    double range_resolution_m = 0.0375;
};

// Contiguous window of `width` bins maximizing total summed magnitude over
// the training profiles. Windows within 0.1% relative of the best score are
// treated as tied; among tied windows the one centering the dominant bin
// (peak at index width/2) is preferred, then the smallest start_bin.
// The tolerance matters because a target sitting exactly on one bin leaves
// every window containing that bin equal up to noise.
BinWindow select_window(std::span<const RangeProfile> training_profiles, int width);

// values[i] = magnitudes[start_bin + i]; label and geometry copied through.
FeatureVector extract_features(const RangeProfile& profile, const BinWindow& window);

// None: identity. RangeR4: scale by (R_hat / reference_range)^2 where
// R_hat = (start_bin + in-window peak index) * range_resolution.
// LogMagnitude: ln(v + 1e-9). MaxUnit: divide by the max entry.
FeatureVector normalize(const FeatureVector& fv, const Normalization& norm,
                        const BinWindow& window);

struct FeatureDataset {
    BinWindow window;
    std::vector<std::string> class_names;  // index = label
    std::vector<FeatureVector> items;
};

FeatureDataset featurize(const Dataset& ds, const BinWindow& window,
                         const Normalization& norm, std::span<const MaterialSpec> materials);

// Dataset file shared with the classifier:
// label,class_name,height_m,tilt_deg,session_id,b<start>,...,b<start+11>
// Column names carry the window's absolute bin indices; floats use 9
// significant digits.
void write_features_csv(std::ostream& os, const FeatureDataset& ds);
FeatureDataset read_features_csv(std::istream& is);

}  // namespace radmat
