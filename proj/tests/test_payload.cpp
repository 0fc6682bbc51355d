#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "nanprop/payload.hpp"

using namespace nanprop;
using payload::Decoded;

TEST_CASE("encoded values are quiet positive NaNs") {
    for (std::uint64_t k : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{12345}, payload::kCapacity - 1}) {
        const double v = payload::encode(k);
        CHECK(std::isnan(v));
        CHECK_FALSE(std::isinf(v));
        const auto bits = to_bits(v);
        CHECK((bits & payload::kSignBit) == 0);
        CHECK((bits & payload::kQuietBit) != 0);
        CHECK((bits & payload::kExponentMask) == payload::kExponentMask);
        CHECK((bits & payload::kPayloadMask) == k);
    }
    CHECK(to_bits(payload::encode(0)) == 0x7FF8000000000000ULL);
}

TEST_CASE("decode inverts encode exhaustively below 2^20") {
    std::size_t bad = 0;
    for (std::uint64_t k = 0; k < (1u << 20); ++k) {
        const auto d = payload::decode(payload::encode(k));
        bad += d.kind != Decoded::Kind::Recognized || d.index != k;
    }
    CHECK(bad == 0);
}

TEST_CASE("decode inverts encode on sampled indices") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 100000; ++t) {
        const std::uint64_t k = rng() & (payload::kCapacity - 1);
        const auto d = payload::decode(payload::encode(k));
        REQUIRE(d.kind == Decoded::Kind::Recognized);
        REQUIRE(d.index == k);
    }
}

TEST_CASE("capacity is 2^51") {
    CHECK(payload::kCapacity == (std::uint64_t{1} << 51));
    CHECK_THROWS_AS(payload::encode(payload::kCapacity), std::out_of_range);
}

TEST_CASE("non-NaN and foreign NaN values") {
    for (double v : {0.0, -0.0, 1.5, -3.0, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::denorm_min()}) {
        CHECK(payload::decode(v).kind == Decoded::Kind::NotNan);
    }
    // signaling: quiet bit clear, payload nonzero
    CHECK(payload::decode(from_bits(0x7FF0000000000001ULL)).kind == Decoded::Kind::Foreign);
    // negative quiet NaN
    CHECK(payload::decode(from_bits(0xFFF8000000000005ULL)).kind == Decoded::Kind::Foreign);
    CHECK(payload::decode(-payload::encode(3)).kind == Decoded::Kind::Foreign);
}

TEST_CASE("payloads survive basic arithmetic on this platform") {
    volatile double one = 1.0;
    const double a = payload::encode(42);
    for (double r : {a + one, one + a, a * one, a - one, a / one}) {
        const auto d = payload::decode(r);
        CHECK(d.kind == Decoded::Kind::Recognized);
        CHECK(d.index == 42);
    }
    const double b = payload::encode(7);
    CHECK(payload::decode(a + b).kind == Decoded::Kind::Recognized);
}
