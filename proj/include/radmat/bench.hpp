#pragma once

#include <cstdint>
#include <string>

#include "radmat/featurize.hpp"
#include "radmat/mlp.hpp"
#include "radmat/sim.hpp"

namespace radmat {

struct LatencyStats {
    double median_us = 0.0;
    double p99_us = 0.0;
    long iterations = 0;
    long allocations_in_loop = -1;  // -1 when no allocation counter was supplied
};

// Median/p99 of single-call fused inference over `iterations` warm calls on
// seeded random inputs. The timed loop performs no allocation; when an
// allocation counter is supplied (the CLI wires in its global operator-new
// probe) the observed in-loop allocation count is reported.
LatencyStats bench_fused_inference(const FusedMlp& net, long iterations, std::uint64_t seed,
                                   long (*alloc_counter)() = nullptr);

// Same measurement for feature extraction (window slice + normalization) on
// one integrated profile.
LatencyStats bench_feature_extraction(const RangeProfile& profile, const BinWindow& window,
                                      const Normalization& norm, long iterations);

std::string format_us(double us);  // 3 significant digits

}  // namespace radmat
