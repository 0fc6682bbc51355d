#pragma once

#include <string>
#include <string_view>

#include "nanprop/pattern.hpp"

namespace nanprop {

/// One line per row: '#' dependency, '.' zero, '?' unknown.
std::string render_grid(const SparsityPattern& p);
SparsityPattern parse_grid(std::string_view text);

/// Grid of `reference` with 'X' where `candidate` misses a dependency and
/// '+' where it claims an extra one.
std::string render_comparison(const SparsityPattern& reference, const SparsityPattern& candidate);

/// Gray cells for dependencies, white for zeros, hatched for unknowns.
std::string render_svg(const SparsityPattern& p, int cell_px = 12);

}  // namespace nanprop
