#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "seqreg/error.hpp"

namespace seqreg {

// Relative-position bucketing as used by text-to-text transformer attention:
// offsets below max_exact keep their exact value, larger ones share
// logarithmically widening buckets up to half - 1.
struct BucketConfig {
    std::size_t num_buckets = 32;
    std::size_t max_distance = 128;
    bool bidirectional = true;
};

inline void validate_bucket_config(const BucketConfig& cfg) {
    if (cfg.num_buckets == 0) raise(ErrorCategory::Input, "num_buckets must be >= 1");
    if (cfg.bidirectional && cfg.num_buckets % 2 != 0)
        raise(ErrorCategory::Input, "num_buckets must be even when bidirectional");
    if (cfg.max_distance <= cfg.num_buckets / 2)
        raise(ErrorCategory::Input, "max_distance must exceed num_buckets / 2");
}

struct BucketResult {
    std::size_t bucket;    // signed bucket index (positive offsets shifted by half)
    std::size_t magnitude; // unsigned compressed distance
};

inline BucketResult compress(std::int64_t offset, const BucketConfig& cfg = {}) {
    validate_bucket_config(cfg);
    const std::size_t half = cfg.bidirectional ? cfg.num_buckets / 2 : cfg.num_buckets;
    const std::size_t max_exact = half / 2;
    const std::uint64_t dist = offset < 0 ? static_cast<std::uint64_t>(-offset)
                                          : static_cast<std::uint64_t>(offset);
    std::size_t magnitude;
    if (dist < max_exact) {
        magnitude = static_cast<std::size_t>(dist);
    } else {
        const double scaled =
            std::log(static_cast<double>(dist) / static_cast<double>(max_exact)) /
            std::log(static_cast<double>(cfg.max_distance) / static_cast<double>(max_exact)) *
            static_cast<double>(half - max_exact);
        const std::size_t log_part = static_cast<std::size_t>(scaled);
        magnitude = max_exact + log_part;
        if (magnitude > half - 1) magnitude = half - 1;
    }
    std::size_t bucket = magnitude;
    if (cfg.bidirectional && offset > 0) bucket += half;
    return {bucket, magnitude};
}

// Per-offset magnitudes for 0..max_offset plus how many distinct buckets the
// range occupies and how wide each one is.
struct CompressionReport {
    std::vector<std::size_t> magnitude; // index = offset
    std::size_t distinct = 0;
    std::vector<std::size_t> width; // width[m] = #offsets in range with magnitude m
};

inline CompressionReport compression_report(std::size_t max_offset,
                                            const BucketConfig& cfg = {}) {
    if (max_offset == 0) raise(ErrorCategory::Input, "max_offset must be >= 1");
    CompressionReport rep;
    rep.magnitude.resize(max_offset + 1);
    const std::size_t half = cfg.bidirectional ? cfg.num_buckets / 2 : cfg.num_buckets;
    rep.width.assign(half, 0);
    for (std::size_t off = 0; off <= max_offset; ++off) {
        const std::size_t m = compress(static_cast<std::int64_t>(off), cfg).magnitude;
        rep.magnitude[off] = m;
        if (rep.width[m]++ == 0) ++rep.distinct;
    }
    return rep;
}

} // namespace seqreg
