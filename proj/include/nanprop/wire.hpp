#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nanprop::wire {

// NANPROP/1 framing.
//
// Binary request:  "NP1!" u32le n, n x binary64 (little-endian)
// Binary response: "NP1!" u8 status, u32le n, n x binary64
//
// Hex text mode replaces the fixed header with one line ("NP1! <n>" for a
// request, "NP1! <status> <n>" for a response) followed by one line per value,
// each value the 16-hex-digit big-endian rendering of its 64 bits.

inline constexpr std::string_view kMagic = "NP1!";

enum class Format { Binary, Hex };

enum class Status : std::uint8_t { Ok = 0, DomainError = 1 };

struct Response {
    Status status = Status::Ok;
    std::vector<double> values;
};

std::string encode_request(std::span<const double> values, Format format);
std::string encode_response(Status status, std::span<const double> values, Format format);

/// Attempts to parse one frame at the front of `buffer`. Returns nullopt when
/// more bytes are needed; on success `consumed` receives the frame length.
/// Throws WireError on malformed input.
std::optional<std::vector<double>> try_parse_request(std::string_view buffer, Format format,
                                                     std::size_t& consumed);
std::optional<Response> try_parse_response(std::string_view buffer, Format format,
                                           std::size_t& consumed);

/// Upper bound on values per frame; larger counts are treated as corrupt.
inline constexpr std::uint32_t kMaxValues = 1u << 24;

std::string hex_bits(double v);
double parse_hex_bits(std::string_view text);

}  // namespace nanprop::wire
