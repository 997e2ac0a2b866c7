#include "radmat/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <vector>

#include "radmat/common.hpp"

namespace radmat {

namespace {

using Clock = std::chrono::steady_clock;

LatencyStats summarize(std::vector<double>& samples_us) {
    LatencyStats stats;
    stats.iterations = static_cast<long>(samples_us.size());
    const std::size_t mid = samples_us.size() / 2;
    std::nth_element(samples_us.begin(), samples_us.begin() + mid, samples_us.end());
    stats.median_us = samples_us[mid];
    const std::size_t p99 = std::min(samples_us.size() - 1,
                                     static_cast<std::size_t>(samples_us.size() * 0.99));
    std::nth_element(samples_us.begin(), samples_us.begin() + p99, samples_us.end());
    stats.p99_us = samples_us[p99];
    return stats;
}

}  // namespace

LatencyStats bench_fused_inference(const FusedMlp& net, long iterations, std::uint64_t seed,
                                   long (*alloc_counter)()) {
    // Pre-generate a pool of inputs so the timed loop touches no RNG and
    // allocates nothing.
    constexpr int kPool = 256;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> inputs(static_cast<std::size_t>(kPool) * kInputDim);
    for (auto& v : inputs) v = uniform(rng);

    auto scratch = net.make_scratch();
    double probs[kNumClasses];
    std::vector<double> samples_us(static_cast<std::size_t>(iterations), 0.0);

    // warmup
    for (int i = 0; i < 1000; ++i) {
        net.infer(&inputs[static_cast<std::size_t>(i % kPool) * kInputDim], probs, scratch);
    }

    const long allocs_before = alloc_counter != nullptr ? alloc_counter() : 0;
    volatile double sink = 0.0;
    for (long i = 0; i < iterations; ++i) {
        const double* x = &inputs[static_cast<std::size_t>(i % kPool) * kInputDim];
        const auto t0 = Clock::now();
        net.infer(x, probs, scratch);
        const auto t1 = Clock::now();
        sink = sink + probs[0];
        samples_us[static_cast<std::size_t>(i)] =
            std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    (void)sink;
    const long allocs_after = alloc_counter != nullptr ? alloc_counter() : 0;

    LatencyStats stats = summarize(samples_us);
    stats.allocations_in_loop = alloc_counter != nullptr ? allocs_after - allocs_before : -1;
    return stats;
}

LatencyStats bench_feature_extraction(const RangeProfile& profile, const BinWindow& window,
                                      const Normalization& norm, long iterations) {
    std::vector<double> samples_us(static_cast<std::size_t>(iterations), 0.0);
    volatile double sink = 0.0;
    FeatureVector fv;
    for (int i = 0; i < 1000; ++i) {
        fv = normalize(extract_features(profile, window), norm, window);
    }
    for (long i = 0; i < iterations; ++i) {
        const auto t0 = Clock::now();
        fv = normalize(extract_features(profile, window), norm, window);
        const auto t1 = Clock::now();
        sink = sink + fv.values[0];
        samples_us[static_cast<std::size_t>(i)] =
            std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    (void)sink;
    return summarize(samples_us);
}

std::string format_us(double us) { return fmt_g(us, 3); }

}  // namespace radmat
