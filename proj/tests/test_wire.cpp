#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nanprop/errors.hpp"
#include "nanprop/payload.hpp"
#include "nanprop/wire.hpp"

using namespace nanprop;
using wire::Format;

namespace {

std::vector<double> random_bits(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& d : v) d = from_bits(rng());
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (to_bits(a[k]) != to_bits(b[k])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("binary request layout") {
    const std::vector<double> v{1.0};
    const std::string f = wire::encode_request(v, Format::Binary);
    REQUIRE(f.size() == 16);
    CHECK(f.substr(0, 4) == "NP1!");
    CHECK(f.substr(4, 4) == std::string("\x01\x00\x00\x00", 4));
    CHECK(f.substr(8) == std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST_CASE("binary response layout") {
    const std::vector<double> v{2.0};
    const std::string f = wire::encode_response(wire::Status::DomainError, v, Format::Binary);
    REQUIRE(f.size() == 17);
    CHECK(f[4] == '\x01');
    CHECK(f.substr(5, 4) == std::string("\x01\x00\x00\x00", 4));
}

TEST_CASE("hex layout") {
    const std::vector<double> v{1.0, -2.0};
    CHECK(wire::encode_request(v, Format::Hex) == "NP1! 2\n3ff0000000000000\nc000000000000000\n");
    CHECK(wire::encode_response(wire::Status::Ok, v, Format::Hex) ==
          "NP1! 0 2\n3ff0000000000000\nc000000000000000\n");
}

TEST_CASE("random bit patterns round trip in both formats") {
    std::mt19937_64 rng(99);
    for (Format fmt : {Format::Binary, Format::Hex}) {
        for (int t = 0; t < 200; ++t) {
            const auto v = random_bits(rng, rng() % 50);
            std::size_t used = 0;
            const std::string req = wire::encode_request(v, fmt);
            auto parsed = wire::try_parse_request(req, fmt, used);
            REQUIRE(parsed);
            CHECK(used == req.size());
            CHECK(same_bits(*parsed, v));

            const std::string resp = wire::encode_response(wire::Status::Ok, v, fmt);
            auto r = wire::try_parse_response(resp, fmt, used);
            REQUIRE(r);
            CHECK(used == resp.size());
            CHECK(r->status == wire::Status::Ok);
            CHECK(same_bits(r->values, v));
        }
    }
}

TEST_CASE("partial frames ask for more bytes") {
    std::mt19937_64 rng(5);
    const auto v = random_bits(rng, 3);
    for (Format fmt : {Format::Binary, Format::Hex}) {
        const std::string frame = wire::encode_response(wire::Status::Ok, v, fmt);
        std::size_t used = 0;
        for (std::size_t len = 0; len < frame.size(); ++len) {
            CHECK_FALSE(wire::try_parse_response(std::string_view(frame).substr(0, len), fmt, used));
        }
        const std::string two = frame + frame;
        auto r = wire::try_parse_response(two, fmt, used);
        REQUIRE(r);
        CHECK(used == frame.size());
    }
}

TEST_CASE("malformed frames are rejected") {
    std::size_t used = 0;
    CHECK_THROWS_AS(wire::try_parse_request("XP1!\x01\x00\x00\x00", Format::Binary, used), WireError);
    CHECK_THROWS_AS(wire::try_parse_response(std::string("NP1!\x02\x00\x00\x00\x00", 9), Format::Binary, used),
                    WireError);
    CHECK_THROWS_AS(wire::try_parse_request(std::string("NP1!\xff\xff\xff\xff", 8), Format::Binary, used), WireError);
    CHECK_THROWS_AS(wire::try_parse_request("NP1! 1\nzzzzzzzzzzzzzzzz\n", Format::Hex, used), WireError);
    CHECK_THROWS_AS(wire::try_parse_request("NP1! 1\n3ff\n", Format::Hex, used), WireError);
    CHECK_THROWS_AS(wire::try_parse_response("NP1! 7 0\n", Format::Hex, used), WireError);
    CHECK_THROWS_AS(wire::try_parse_request("HELLO 1\n", Format::Hex, used), WireError);
    CHECK_THROWS_AS(wire::parse_hex_bits("12"), WireError);
}

TEST_CASE("hex rendering is big-endian bits") {
    CHECK(wire::hex_bits(payload::encode(1)) == "7ff8000000000001");
    CHECK(to_bits(wire::parse_hex_bits("7FF8000000000001")) == 0x7FF8000000000001ULL);
}
