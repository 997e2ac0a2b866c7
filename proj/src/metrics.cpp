#include "radmat/metrics.hpp"

#include <cmath>

namespace radmat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw MetricsError(msg);
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (const auto& row : counts) {
        for (const auto c : row) n += c;
    }
    return n;
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels) {
    require(predictions.size() == labels.size(), "confusion_matrix: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int t = labels[i];
        const int p = predictions[i];
        require(t >= 0 && t < kClasses, "confusion_matrix: label out of range");
        require(p >= 0 && p < kClasses, "confusion_matrix: prediction out of range");
        cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1;
    }
    return cm;
}

std::array<ClassScores, kClasses> per_class_scores(const ConfusionMatrix& cm) {
    std::array<ClassScores, kClasses> scores{};
    for (int c = 0; c < kClasses; ++c) {
        std::int64_t tp = cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        std::int64_t fp = 0;
        std::int64_t fn = 0;
        for (int o = 0; o < kClasses; ++o) {
            if (o == c) continue;
            fp += cm.counts[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
            fn += cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
        }
        ClassScores& s = scores[static_cast<std::size_t>(c)];
        s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
    }
    return scores;
}

double macro_f1(const ConfusionMatrix& cm) {
    const auto scores = per_class_scores(cm);
    double sum = 0.0;
    for (const auto& s : scores) sum += s.f1;
    return sum / static_cast<double>(kClasses);
}

std::array<double, ConfidenceHistogram::kBins + 1> ConfidenceHistogram::edges() {
    std::array<double, kBins + 1> e{};
    for (int i = 0; i <= kBins; ++i) e[static_cast<std::size_t>(i)] = static_cast<double>(i) / kBins;
    return e;
}

std::int64_t ConfidenceHistogram::total() const {
    std::int64_t n = 0;
    for (const auto c : correct) n += c;
    for (const auto c : incorrect) n += c;
    return n;
}

ConfidenceHistogram confidence_histogram(std::span<const PredictionRecord> records) {
    ConfidenceHistogram h;
    for (const auto& r : records) {
        require(std::isfinite(r.confidence) && r.confidence >= 0.0 && r.confidence <= 1.0,
                "confidence_histogram: confidence outside [0,1]");
        int bin = static_cast<int>(r.confidence * ConfidenceHistogram::kBins);
        if (bin == ConfidenceHistogram::kBins) bin = ConfidenceHistogram::kBins - 1;
        if (r.predicted == r.label) {
            h.correct[static_cast<std::size_t>(bin)] += 1;
        } else {
            h.incorrect[static_cast<std::size_t>(bin)] += 1;
        }
    }
    return h;
}

EvalReport make_report(const std::string& condition, std::span<const PredictionRecord> records,
                       const std::string& fingerprint) {
    require(!records.empty(), "make_report: no prediction records");
    EvalReport rep;
    rep.condition = condition;
    rep.fingerprint = fingerprint;
    rep.n = static_cast<std::int64_t>(records.size());

    std::vector<int> preds;
    std::vector<int> labels;
    preds.reserve(records.size());
    labels.reserve(records.size());
    double conf_sum = 0.0;
    double conf_correct = 0.0;
    double conf_incorrect = 0.0;
    std::int64_t n_correct = 0;
    for (const auto& r : records) {
        preds.push_back(r.predicted);
        labels.push_back(r.label);
        conf_sum += r.confidence;
        if (r.predicted == r.label) {
            conf_correct += r.confidence;
            ++n_correct;
        } else {
            conf_incorrect += r.confidence;
        }
    }
    rep.confusion = confusion_matrix(preds, labels);
    rep.per_class = per_class_scores(rep.confusion);
    rep.macro_f1 = macro_f1(rep.confusion);
    rep.histogram = confidence_histogram(records);
    rep.mean_confidence = conf_sum / static_cast<double>(records.size());
    rep.mean_confidence_correct = n_correct > 0 ? conf_correct / static_cast<double>(n_correct) : 0.0;
    const std::int64_t n_wrong = rep.n - n_correct;
    rep.mean_confidence_incorrect = n_wrong > 0 ? conf_incorrect / static_cast<double>(n_wrong) : 0.0;
    return rep;
}

EvalReport pool_reports(const std::string& condition, std::span<const EvalReport> reports) {
    require(!reports.empty(), "pool_reports: nothing to pool");
    EvalReport rep;
    rep.condition = condition;
    rep.fingerprint = reports.front().fingerprint;
    double conf_sum = 0.0;
    double conf_correct_sum = 0.0;
    double conf_incorrect_sum = 0.0;
    std::int64_t n_correct = 0;
    for (const auto& r : reports) {
        require(r.fingerprint == rep.fingerprint, "pool_reports: fingerprint mismatch");
        for (int t = 0; t < kClasses; ++t) {
            for (int p = 0; p < kClasses; ++p) {
                rep.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] +=
                    r.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
            }
        }
        for (int b = 0; b < ConfidenceHistogram::kBins; ++b) {
            rep.histogram.correct[static_cast<std::size_t>(b)] += r.histogram.correct[static_cast<std::size_t>(b)];
            rep.histogram.incorrect[static_cast<std::size_t>(b)] += r.histogram.incorrect[static_cast<std::size_t>(b)];
        }
        std::int64_t rc = 0;
        for (int c = 0; c < kClasses; ++c) rc += r.confusion.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        conf_sum += r.mean_confidence * static_cast<double>(r.n);
        conf_correct_sum += r.mean_confidence_correct * static_cast<double>(rc);
        conf_incorrect_sum += r.mean_confidence_incorrect * static_cast<double>(r.n - rc);
        n_correct += rc;
    }
    rep.n = rep.confusion.total();
    rep.per_class = per_class_scores(rep.confusion);
    rep.macro_f1 = macro_f1(rep.confusion);
    rep.mean_confidence = conf_sum / static_cast<double>(rep.n);
    rep.mean_confidence_correct =
        n_correct > 0 ? conf_correct_sum / static_cast<double>(n_correct) : 0.0;
    rep.mean_confidence_incorrect =
        (rep.n - n_correct) > 0 ? conf_incorrect_sum / static_cast<double>(rep.n - n_correct) : 0.0;
    return rep;
}

}  // namespace radmat
