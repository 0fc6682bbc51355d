#pragma once

#include <bit>
#include <cstdint>

namespace nanprop {

inline std::uint64_t to_bits(double v) { return std::bit_cast<std::uint64_t>(v); }
inline double from_bits(std::uint64_t bits) { return std::bit_cast<double>(bits); }

// Quiet-NaN payload codec for binary64. The sign bit is always clear and the
// quiet bit always set, leaving the low 51 mantissa bits for the column index.
namespace payload {

inline constexpr std::uint64_t kQuietNanBits = 0x7FF8'0000'0000'0000ULL;
inline constexpr std::uint64_t kExponentMask = 0x7FF0'0000'0000'0000ULL;
inline constexpr std::uint64_t kQuietBit = 0x0008'0000'0000'0000ULL;
inline constexpr std::uint64_t kSignBit = 0x8000'0000'0000'0000ULL;
inline constexpr std::uint64_t kPayloadMask = 0x0007'FFFF'FFFF'FFFFULL;
inline constexpr std::uint64_t kCapacity = kPayloadMask + 1;  // 2^51

/// Quiet NaN carrying `index`. Throws std::out_of_range past capacity.
double encode(std::uint64_t index);

struct Decoded {
    enum class Kind { NotNan, Recognized, Foreign };
    Kind kind = Kind::NotNan;
    std::uint64_t index = 0;

    friend bool operator==(const Decoded&, const Decoded&) = default;
};

Decoded decode(double v);

}  // namespace payload
}  // namespace nanprop
