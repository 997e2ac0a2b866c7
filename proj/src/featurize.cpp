#include "radmat/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace radmat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw FeaturizeError(msg);
}

constexpr double kWindowTieTolerance = 1e-3;  // relative
constexpr double kLogFloor = 1e-9;

}  // namespace

NormMode parse_norm_mode(const std::string& name) {
    if (name == "none") return NormMode::None;
    if (name == "range_r4") return NormMode::RangeR4;
    if (name == "log_magnitude") return NormMode::LogMagnitude;
    if (name == "max_unit") return NormMode::MaxUnit;
    throw FeaturizeError("unknown normalization mode '" + name + "'");
}

std::string to_string(NormMode mode) {
    switch (mode) {
        case NormMode::None: return "none";
        case NormMode::RangeR4: return "range_r4";
        case NormMode::LogMagnitude: return "log_magnitude";
        case NormMode::MaxUnit: return "max_unit";
    }
    return "none";
}

BinWindow select_window(std::span<const RangeProfile> training_profiles, int width) {
    require(!training_profiles.empty(), "select_window: empty training set");
    require(width >= 1, "select_window: width must be >= 1");
    const int bins = static_cast<int>(training_profiles.front().magnitudes.size());
    require(width <= bins, "select_window: width exceeds profile length");

    std::vector<double> total(static_cast<std::size_t>(bins), 0.0);
    for (const auto& p : training_profiles) {
        require(static_cast<int>(p.magnitudes.size()) == bins,
                "select_window: profile length mismatch");
        for (int b = 0; b < bins; ++b) total[static_cast<std::size_t>(b)] += p.magnitudes[static_cast<std::size_t>(b)];
    }

    const int num_candidates = bins - width + 1;
    std::vector<double> window_sum(static_cast<std::size_t>(num_candidates), 0.0);
    double acc = 0.0;
    for (int b = 0; b < width; ++b) acc += total[static_cast<std::size_t>(b)];
    window_sum[0] = acc;
    for (int s = 1; s < num_candidates; ++s) {
        acc += total[static_cast<std::size_t>(s + width - 1)] - total[static_cast<std::size_t>(s - 1)];
        window_sum[static_cast<std::size_t>(s)] = acc;
    }

    const double best = *std::max_element(window_sum.begin(), window_sum.end());
    const double threshold = best - kWindowTieTolerance * std::abs(best);

    // Dominant bin of the summed profile (first maximum).
    int dominant = 0;
    for (int b = 1; b < bins; ++b) {
        if (total[static_cast<std::size_t>(b)] > total[static_cast<std::size_t>(dominant)]) dominant = b;
    }
    const int centered = std::clamp(dominant - width / 2, 0, num_candidates - 1);
    if (window_sum[static_cast<std::size_t>(centered)] >= threshold) {
        return BinWindow{centered, width};
    }
    for (int s = 0; s < num_candidates; ++s) {
        if (window_sum[static_cast<std::size_t>(s)] >= threshold) return BinWindow{s, width};
    }
    return BinWindow{0, width};  // unreachable
}

FeatureVector extract_features(const RangeProfile& profile, const BinWindow& window) {
    require(window.width == kFeatureDim, "extract_features: window width must be 12");
    require(window.start_bin >= 0 &&
                window.start_bin + window.width <= static_cast<int>(profile.magnitudes.size()),
            "extract_features: window out of profile bounds");
    FeatureVector fv;
    fv.values.assign(profile.magnitudes.begin() + window.start_bin,
                     profile.magnitudes.begin() + window.start_bin + window.width);
    fv.label = profile.material_class;
    fv.geometry = profile.geometry;
    return fv;
}

FeatureVector normalize(const FeatureVector& fv, const Normalization& norm,
                        const BinWindow& window) {
    require(static_cast<int>(fv.values.size()) == kFeatureDim,
            "normalize: feature vector must have 12 values");
    FeatureVector out = fv;
    switch (norm.mode) {
        case NormMode::None:
            break;
        case NormMode::RangeR4: {
            const int idx = peak_bin(out.values);
            const double r_hat =
                static_cast<double>(window.start_bin + idx) * norm.range_resolution_m;
            const double ratio = r_hat / norm.reference_range_m;
            const double scale = ratio * ratio;  // amplitude ~ R^-2, power ~ R^-4
            for (auto& v : out.values) v *= scale;
            out.estimated_range_m = r_hat;
            break;
        }
        case NormMode::LogMagnitude:
            for (auto& v : out.values) v = std::log(v + kLogFloor);
            break;
        case NormMode::MaxUnit: {
            const double mx = *std::max_element(out.values.begin(), out.values.end());
            if (mx <= 0.0) throw DegenerateFeature("max_unit normalization of all-zero vector");
            for (auto& v : out.values) v /= mx;
            break;
        }
    }
    return out;
}

FeatureDataset featurize(const Dataset& ds, const BinWindow& window,
                         const Normalization& norm, std::span<const MaterialSpec> materials) {
    FeatureDataset out;
    out.window = window;
    out.class_names.assign(5, "");
    for (const auto& m : materials) {
        require(m.class_id >= 0 && m.class_id < 5, "featurize: bad class id");
        out.class_names[static_cast<std::size_t>(m.class_id)] = m.name;
    }
    out.items.reserve(ds.profiles.size());
    for (const auto& p : ds.profiles) {
        out.items.push_back(normalize(extract_features(p, window), norm, window));
    }
    return out;
}

void write_features_csv(std::ostream& os, const FeatureDataset& ds) {
    os << "label,class_name,height_m,tilt_deg,session_id";
    for (int i = 0; i < ds.window.width; ++i) {
        char col[16];
        std::snprintf(col, sizeof(col), "b%02d", ds.window.start_bin + i);
        os << ',' << col;
    }
    os << '\n';
    for (const auto& fv : ds.items) {
        require(fv.label >= 0 && fv.label < static_cast<int>(ds.class_names.size()),
                "write_features_csv: label out of range");
        os << fv.label << ',' << ds.class_names[static_cast<std::size_t>(fv.label)] << ','
           << fmt_g(fv.geometry.height_m, 9) << ',' << fmt_g(fv.geometry.tilt_deg, 9) << ','
           << fv.geometry.session_id;
        for (const double v : fv.values) os << ',' << fmt_g(v, 9);
        os << '\n';
    }
}

FeatureDataset read_features_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "features csv: missing header");
    std::istringstream header(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(header, cell, ',')) cols.push_back(cell);
    require(cols.size() == 5 + kFeatureDim, "features csv: unexpected column count");
    require(cols[0] == "label" && cols[1] == "class_name" && cols[2] == "height_m" &&
                cols[3] == "tilt_deg" && cols[4] == "session_id",
            "features csv: unexpected header");
    require(cols[5].size() >= 2 && cols[5][0] == 'b', "features csv: bad feature column name");

    FeatureDataset ds;
    ds.window.start_bin = std::stoi(cols[5].substr(1));
    ds.window.width = kFeatureDim;
    ds.class_names.assign(5, "");

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        auto next = [&]() {
            require(static_cast<bool>(std::getline(row, cell, ',')), "features csv: short row");
            return cell;
        };
        FeatureVector fv;
        fv.label = std::stoi(next());
        require(fv.label >= 0 && fv.label < 5, "features csv: label out of range");
        const std::string name = next();
        if (ds.class_names[static_cast<std::size_t>(fv.label)].empty()) {
            ds.class_names[static_cast<std::size_t>(fv.label)] = name;
        }
        fv.geometry.height_m = std::stod(next());
        fv.geometry.tilt_deg = std::stod(next());
        fv.geometry.session_id = std::stoi(next());
        fv.values.reserve(kFeatureDim);
        for (int i = 0; i < kFeatureDim; ++i) fv.values.push_back(std::stod(next()));
        ds.items.push_back(std::move(fv));
    }
    return ds;
}

}  // namespace radmat
