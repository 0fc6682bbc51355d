#pragma once

#include <cmath>
#include <limits>

namespace nanprop {

enum class FdScheme { Forward, Central };

const char* to_string(FdScheme scheme);

/// Step for input value `x`: sqrt(eps) * max(1, |x|).
inline double fd_step(double x) {
    static const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    return root_eps * std::fmax(1.0, std::fabs(x));
}

}  // namespace nanprop
