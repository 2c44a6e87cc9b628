#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "seqreg/bucketizer.hpp"

using namespace seqreg;

namespace {

// Independent transcription of the bucketing formula, kept separate from the
// implementation so frozen expectations have a second source.
std::size_t oracle_magnitude(long long offset, std::size_t num_buckets, std::size_t max_distance,
                             bool bidirectional) {
    const std::size_t half = bidirectional ? num_buckets / 2 : num_buckets;
    const std::size_t max_exact = half / 2;
    const double dist = std::abs(static_cast<double>(offset));
    if (dist < static_cast<double>(max_exact)) return static_cast<std::size_t>(dist);
    const double val = static_cast<double>(max_exact) +
                       std::floor(std::log(dist / static_cast<double>(max_exact)) /
                                  std::log(static_cast<double>(max_distance) /
                                           static_cast<double>(max_exact)) *
                                  static_cast<double>(half - max_exact));
    return std::min(half - 1, static_cast<std::size_t>(val));
}

} // namespace

TEST_CASE("offset 15 compresses to magnitude 9 under defaults") {
    const auto r = compress(15);
    CHECK(r.magnitude == 9);
    CHECK(r.bucket == 16 + 9); // positive side of the bidirectional split
    CHECK(compress(-15).bucket == 9);
}

TEST_CASE("offset 0 stays at bucket 0") {
    const auto r = compress(0);
    CHECK(r.magnitude == 0);
    CHECK(r.bucket == 0);
}

TEST_CASE("log-region magnitudes match the direct formula") {
    // Frozen from the oracle: 14 collides with 15; 200 clips to half-1.
    CHECK(compress(14).magnitude == 9);
    CHECK(compress(200).magnitude == 15);
    for (long long off : {8LL, 9LL, 14LL, 15LL, 16LL, 31LL, 64LL, 127LL, 128LL, 200LL, 5000LL})
        CHECK(compress(off).magnitude == oracle_magnitude(off, 32, 128, true));
}

TEST_CASE("compression_report widths") {
    SECTION("exact region: one offset per bucket") {
        const auto rep = compression_report(7);
        CHECK(rep.distinct == 8);
        for (std::size_t m = 0; m <= 7; ++m) CHECK(rep.width[m] == 1);
    }
    SECTION("offsets 0..19 cover 11 distinct magnitudes") {
        const auto rep = compression_report(19);
        std::set<std::size_t> seen(rep.magnitude.begin(), rep.magnitude.end());
        CHECK(seen.size() == 11); // oracle: enumerate compress over 0..19
        CHECK(rep.distinct == 11);
    }
    SECTION("widths are non-decreasing across completed log-region buckets") {
        const auto rep = compression_report(127);
        const std::size_t top = rep.magnitude.back();
        for (std::size_t m = 9; m < top; ++m) // m = top may be truncated by the range end
            CHECK(rep.width[m] >= rep.width[m - 1]);
    }
}

TEST_CASE("compress properties") {
    SECTION("monotone non-decreasing in |offset| and capped at half-1") {
        std::size_t prev = 0;
        for (long long off = 0; off <= 4000; ++off) {
            const auto m = compress(off).magnitude;
            CHECK(m >= prev);
            CHECK(m <= 15);
            prev = m;
        }
    }
    SECTION("injective below max_exact") {
        std::set<std::size_t> seen;
        for (long long off = 0; off < 8; ++off)
            CHECK(seen.insert(compress(off).magnitude).second);
    }
    SECTION("sign symmetry of the magnitude") {
        for (long long off = 0; off <= 300; ++off)
            CHECK(compress(off).magnitude == compress(-off).magnitude);
    }
}

TEST_CASE("bucket config validation") {
    BucketConfig odd{31, 128, true};
    CHECK_THROWS_AS(compress(1, odd), Error);
    BucketConfig tight{32, 16, true};
    CHECK_THROWS_AS(compress(1, tight), Error);
    BucketConfig unidir{31, 128, false}; // odd is fine without the sign split
    CHECK_NOTHROW(compress(1, unidir));
    CHECK_THROWS_AS(compression_report(0), Error);
}

TEST_CASE("non-default configs follow the same formula") {
    BucketConfig cfg{16, 64, true};
    for (long long off = 0; off <= 200; ++off)
        CHECK(compress(off, cfg).magnitude == oracle_magnitude(off, 16, 64, true));
}
