#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace radmat {

struct MetricsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kClasses = 5;

// Rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kClasses>, kClasses> counts{};

    std::int64_t total() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Per-class precision/recall/F1 with 0/0 ratios resolved to 0, so classes
// with zero support and zero predictions contribute F1 = 0.
std::array<ClassScores, kClasses> per_class_scores(const ConfusionMatrix& cm);

// Unweighted mean of the per-class F1 scores.
double macro_f1(const ConfusionMatrix& cm);

struct PredictionRecord {
    int label = 0;
    int predicted = 0;
    double confidence = 0.0;  // max softmax probability
};

// 20 uniform bins over [0,1], right-inclusive top bin; correct and incorrect
// predictions are kept as separate series.
struct ConfidenceHistogram {
    static constexpr int kBins = 20;
    std::array<std::int64_t, kBins> correct{};
    std::array<std::int64_t, kBins> incorrect{};

    static std::array<double, kBins + 1> edges();
    std::int64_t total() const;
};

ConfidenceHistogram confidence_histogram(std::span<const PredictionRecord> records);

// Everything reported for one experiment condition.
struct EvalReport {
    std::string condition;
    ConfusionMatrix confusion;
    std::array<ClassScores, kClasses> per_class{};
    double macro_f1 = 0.0;
    ConfidenceHistogram histogram;
    std::int64_t n = 0;
    std::string fingerprint;

    // Exact confidence summaries for the shift analysis; condition-level
    // companions of the histogram, not part of the serialized schema.
    double mean_confidence = 0.0;
    double mean_confidence_correct = 0.0;
    double mean_confidence_incorrect = 0.0;
};

EvalReport make_report(const std::string& condition, std::span<const PredictionRecord> records,
                       const std::string& fingerprint);

// Element-wise sum of confusion matrices and histograms, metrics recomputed.
// All inputs must share one fingerprint.
EvalReport pool_reports(const std::string& condition, std::span<const EvalReport> reports);

}  // namespace radmat
