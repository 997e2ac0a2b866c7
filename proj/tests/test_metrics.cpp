#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "radmat/metrics.hpp"

using namespace radmat;

namespace {

// Brute-force recount, independent of confusion_matrix's implementation.
ConfusionMatrix tally_oracle(const std::vector<int>& preds, const std::vector<int>& labels) {
    ConfusionMatrix cm;
    for (int t = 0; t < kClasses; ++t) {
        for (int p = 0; p < kClasses; ++p) {
            std::int64_t n = 0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] == t && preds[i] == p) ++n;
            }
            cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = n;
        }
    }
    return cm;
}

// Macro-F1 straight from the prediction lists, never touching ConfusionMatrix.
double macro_f1_oracle(const std::vector<int>& preds, const std::vector<int>& labels) {
    double sum = 0.0;
    for (int c = 0; c < kClasses; ++c) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool is_c = labels[i] == c;
            const bool said_c = preds[i] == c;
            if (is_c && said_c) ++tp;
            if (!is_c && said_c) ++fp;
            if (is_c && !said_c) ++fn;
        }
        const double precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
        sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return sum / kClasses;
}

}  // namespace

TEST_CASE("confusion_matrix direct example") {
    const std::vector<int> preds = {0, 0, 1};
    const std::vector<int> labels = {0, 1, 1};
    const ConfusionMatrix cm = confusion_matrix(preds, labels);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[1][0] == 1);
    CHECK(cm.counts[1][1] == 1);
    CHECK(cm.total() == 3);
    std::int64_t others = 0;
    for (int t = 0; t < kClasses; ++t) {
        for (int p = 0; p < kClasses; ++p) {
            if (!((t == 0 && p == 0) || (t == 1 && p == 0) || (t == 1 && p == 1))) {
                others += cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
            }
        }
    }
    CHECK(others == 0);
}

TEST_CASE("perfect predictions give a diagonal matrix and macro 1") {
    std::vector<int> labels;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < 7; ++i) labels.push_back(c);
    }
    const ConfusionMatrix cm = confusion_matrix(labels, labels);
    for (int t = 0; t < kClasses; ++t) {
        for (int p = 0; p < kClasses; ++p) {
            CHECK(cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] ==
                  (t == p ? 7 : 0));
        }
    }
    CHECK(macro_f1(cm) == doctest::Approx(1.0));
}

TEST_CASE("confusion_matrix input validation") {
    const std::vector<int> preds = {0, 1};
    const std::vector<int> labels = {0};
    CHECK_THROWS_AS(confusion_matrix(preds, labels), MetricsError);
    const std::vector<int> bad = {7};
    const std::vector<int> one = {0};
    CHECK_THROWS_AS(confusion_matrix(bad, one), MetricsError);
    CHECK_THROWS_AS(confusion_matrix(one, bad), MetricsError);
}

TEST_CASE("everything predicted as class 0 on a balanced set") {
    std::vector<int> labels, preds;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < 10; ++i) {
            labels.push_back(c);
            preds.push_back(0);
        }
    }
    const ConfusionMatrix cm = confusion_matrix(preds, labels);
    // class 0: P = 0.2, R = 1 -> F1 = 1/3; all other classes 0
    CHECK(macro_f1(cm) == doctest::Approx((1.0 / 3.0) / 5.0).epsilon(1e-12));
    const auto scores = per_class_scores(cm);
    CHECK(scores[0].precision == doctest::Approx(0.2));
    CHECK(scores[0].recall == doctest::Approx(1.0));
    CHECK(scores[1].f1 == 0.0);
}

TEST_CASE("metrics match brute-force oracles on random cases") {
    std::mt19937_64 rng(1001);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 1000);
        std::vector<int> labels(static_cast<std::size_t>(n)), preds(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % kClasses);
            // skewed predictions so zero-support/zero-prediction classes occur
            preds[static_cast<std::size_t>(i)] = static_cast<int>(rng() % (1 + rng() % kClasses));
        }
        const ConfusionMatrix cm = confusion_matrix(preds, labels);
        const ConfusionMatrix oracle = tally_oracle(preds, labels);
        CHECK(cm.counts == oracle.counts);
        CHECK(std::abs(macro_f1(cm) - macro_f1_oracle(preds, labels)) < 1e-12);
    }
}

TEST_CASE("macro_f1 invariant under uniform scaling of all counts") {
    std::mt19937_64 rng(2002);
    for (int trial = 0; trial < 50; ++trial) {
        ConfusionMatrix cm;
        for (auto& row : cm.counts) {
            for (auto& c : row) c = static_cast<std::int64_t>(rng() % 40);
        }
        ConfusionMatrix scaled = cm;
        for (auto& row : scaled.counts) {
            for (auto& c : row) c *= 9;
        }
        CHECK(macro_f1(cm) == doctest::Approx(macro_f1(scaled)).epsilon(1e-12));
    }
}

TEST_CASE("confidence histogram placement") {
    SUBCASE("all confident and correct lands in the top bin") {
        std::vector<PredictionRecord> records(25, PredictionRecord{2, 2, 1.0});
        const ConfidenceHistogram h = confidence_histogram(records);
        CHECK(h.correct[19] == 25);
        CHECK(h.total() == 25);
        std::int64_t rest = 0;
        for (int b = 0; b < 19; ++b) rest += h.correct[static_cast<std::size_t>(b)];
        for (const auto c : h.incorrect) rest += c;
        CHECK(rest == 0);
    }
    SUBCASE("uniform softmax confidence lands in the 0.2 bin") {
        std::vector<PredictionRecord> records(10, PredictionRecord{1, 0, 0.2});
        const ConfidenceHistogram h = confidence_histogram(records);
        CHECK(h.incorrect[4] == 10);  // [0.20, 0.25)
    }
    SUBCASE("edges are the 21 uniform cut points") {
        const auto edges = ConfidenceHistogram::edges();
        CHECK(edges.front() == 0.0);
        CHECK(edges.back() == 1.0);
        CHECK(edges[1] == doctest::Approx(0.05));
    }
    SUBCASE("confidence outside [0,1] is rejected") {
        const std::vector<PredictionRecord> bad = {{0, 0, 1.2}};
        CHECK_THROWS_AS(confidence_histogram(bad), MetricsError);
        const std::vector<PredictionRecord> nan = {{0, 0, std::nan("")}};
        CHECK_THROWS_AS(confidence_histogram(nan), MetricsError);
    }
}

TEST_CASE("make_report aggregates counts, scores, and confidences") {
    std::vector<PredictionRecord> records;
    for (int c = 0; c < kClasses; ++c) {
        for (int i = 0; i < 4; ++i) records.push_back({c, c, 0.9});
    }
    records.push_back({0, 1, 0.5});
    const EvalReport rep = make_report("demo", records, "fp");
    CHECK(rep.n == 21);
    CHECK(rep.confusion.total() == 21);
    CHECK(rep.histogram.total() == 21);
    CHECK(rep.macro_f1 == doctest::Approx(macro_f1(rep.confusion)));
    CHECK(rep.mean_confidence == doctest::Approx((20 * 0.9 + 0.5) / 21.0));
    CHECK(rep.mean_confidence_correct == doctest::Approx(0.9));
    CHECK(rep.mean_confidence_incorrect == doctest::Approx(0.5));
    CHECK(rep.fingerprint == "fp");
}

TEST_CASE("pool_reports sums counts and recomputes metrics") {
    std::vector<PredictionRecord> a(10, PredictionRecord{0, 0, 1.0});
    std::vector<PredictionRecord> b(30, PredictionRecord{1, 2, 0.5});
    const EvalReport ra = make_report("a", a, "fp");
    const EvalReport rb = make_report("b", b, "fp");
    const std::vector<EvalReport> parts = {ra, rb};
    const EvalReport pooled = pool_reports("ab", parts);
    CHECK(pooled.n == 40);
    CHECK(pooled.confusion.counts[0][0] == 10);
    CHECK(pooled.confusion.counts[1][2] == 30);
    CHECK(pooled.histogram.total() == 40);
    CHECK(pooled.mean_confidence == doctest::Approx((10 * 1.0 + 30 * 0.5) / 40.0));
    CHECK(pooled.macro_f1 == doctest::Approx(macro_f1(pooled.confusion)));

    EvalReport other = rb;
    other.fingerprint = "different";
    const std::vector<EvalReport> mismatched = {ra, other};
    CHECK_THROWS_AS(pool_reports("bad", mismatched), MetricsError);
}
