#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nanprop/blackbox.hpp"
#include "nanprop/finite_difference.hpp"
#include "nanprop/matrix.hpp"
#include "nanprop/pattern.hpp"

namespace nanprop {

struct Coloring {
    std::size_t n = 0;
    std::vector<std::size_t> color_of;
    std::size_t n_colors = 0;

    /// Columns of each color, in ascending order.
    std::vector<std::vector<std::size_t>> classes() const;
    bool operator==(const Coloring&) const = default;
};

/// Greedy largest-degree-first coloring; ties go to the lower column, each
/// column takes the smallest color unused by its neighbours.
Coloring color_columns(const ColumnAdjacency& adj);

/// True when no two adjacent columns share a color and ids are 0..n_colors-1, all used.
bool is_valid_coloring(const Coloring& coloring, const ColumnAdjacency& adj);

double speedup(std::size_t n_inputs, std::size_t n_colors);

// "nanprop-coloring v1 <n> <n_colors>" then one color id per line.
std::string to_text(const Coloring& coloring);
Coloring parse_coloring(std::string_view text);

struct CompressedJacobian {
    SparsityPattern pattern;  // binary view, unknowns promoted
    std::map<CellIndex, double> values;
    Coloring coloring;
    std::vector<double> x0;
    std::size_t eval_count = 0;
};

/// One seed per color that owns a dependency, plus the baseline. Seeds move
/// only columns that own a dependency. Throws
/// DecompressionAmbiguity before evaluating anything if two dependency
/// columns of one color share a row.
CompressedJacobian compressed_jacobian(Evaluator& bb, std::span<const double> x0, const SparsityPattern& pattern,
                                       const Coloring& coloring, FdScheme scheme = FdScheme::Forward);

Matrix dense_jacobian(Evaluator& bb, std::span<const double> x0, FdScheme scheme = FdScheme::Forward);

struct JacobianEntry {
    std::size_t row;
    std::size_t col;
    double value;
};

struct JacobianFile {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t n_colors = 0;
    std::vector<JacobianEntry> entries;
};

// "nanprop-jac v1 <m> <n> <n_colors>" then "<row> <col> <16 hex digits>".
std::string to_text(const JacobianFile& jac);
JacobianFile parse_jacobian(std::string_view text);
JacobianFile to_file(const CompressedJacobian& jac);
/// Every cell of a dense Jacobian; n_colors is reported as n.
JacobianFile to_file(const Matrix& dense);

}  // namespace nanprop
