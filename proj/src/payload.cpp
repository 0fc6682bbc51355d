#include "nanprop/payload.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nanprop::payload {

double encode(std::uint64_t index) {
    if (index >= kCapacity) {
        throw std::out_of_range("NaN payload index " + std::to_string(index) + " exceeds 2^51");
    }
    return from_bits(kQuietNanBits | index);
}

Decoded decode(double v) {
    if (!std::isnan(v)) return {Decoded::Kind::NotNan, 0};
    const std::uint64_t bits = to_bits(v);
    if ((bits & kSignBit) != 0 || (bits & kQuietBit) == 0) return {Decoded::Kind::Foreign, 0};
    return {Decoded::Kind::Recognized, bits & kPayloadMask};
}

}  // namespace nanprop::payload
