#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nanprop {

/// Dependency state of one (output, input) cell. The numeric order is the
/// union dominance order: Dep > Unknown > Zero.
enum class Cell : std::uint8_t { Zero = 0, Unknown = 1, Dep = 2 };

/// How Unknown cells are read when a binary view is required.
enum class UnknownAs { Dep, Zero };

struct CellIndex {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Trinary m x n sparsity pattern. Rows are outputs, columns are inputs.
class SparsityPattern {
public:
    SparsityPattern() = default;
    SparsityPattern(std::size_t rows, std::size_t cols, Cell fill = Cell::Zero);

    /// Builds a pattern from rows written with '0', '1' and '?'.
    static SparsityPattern from_rows(const std::vector<std::string>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    Cell at(std::size_t row, std::size_t col) const;
    void set(std::size_t row, std::size_t col, Cell value);

    bool is_dep(std::size_t row, std::size_t col, UnknownAs unknown_as = UnknownAs::Dep) const;

    std::span<const Cell> row(std::size_t i) const;

    std::size_t count(Cell value) const;
    bool has_unknown() const { return count(Cell::Unknown) > 0; }

    /// Unknown-free copy with Unknown cells resolved per `unknown_as`.
    SparsityPattern binary(UnknownAs unknown_as = UnknownAs::Dep) const;

    /// True when every Dep cell of `other` is Dep here (this ⊇ other).
    bool covers(const SparsityPattern& other) const;

    friend bool operator==(const SparsityPattern&, const SparsityPattern&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Cell> cells_;
};

/// Cellwise merge with dominance Dep > Unknown > Zero.
SparsityPattern unite(const SparsityPattern& a, const SparsityPattern& b);

struct DiffReport {
    /// reference = Dep, candidate = Zero.
    std::vector<CellIndex> false_negatives;
    /// candidate = Dep, reference = Zero.
    std::vector<CellIndex> extra_deps;

    std::size_t false_negative_count() const noexcept { return false_negatives.size(); }
    bool empty() const noexcept { return false_negatives.empty() && extra_deps.empty(); }
};

DiffReport compare(const SparsityPattern& reference, const SparsityPattern& candidate);

/// Column intersection graph as a dense symmetric boolean matrix.
class ColumnAdjacency {
public:
    ColumnAdjacency() = default;
    explicit ColumnAdjacency(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    bool adjacent(std::size_t j, std::size_t k) const { return adj_[j * n_ + k] != 0; }

    /// Adds an undirected edge; self loops are ignored.
    void connect(std::size_t j, std::size_t k);

    std::size_t degree(std::size_t j) const;
    std::size_t max_degree() const;
    std::vector<std::size_t> neighbors(std::size_t j) const;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> adj_;
};

/// Binary S^T S != 0 over the effective-nonzero view of `p`.
ColumnAdjacency gramian_adjacency(const SparsityPattern& p, UnknownAs unknown_as = UnknownAs::Dep);

// Pattern file: "nanprop-pattern v1 <m> <n>" then m rows over {0,1,?}.
std::string to_text(const SparsityPattern& p);
SparsityPattern parse_pattern(std::string_view text);
SparsityPattern read_pattern_file(const std::filesystem::path& path);
void write_pattern_file(const std::filesystem::path& path, const SparsityPattern& p);

char cell_char(Cell c);

}  // namespace nanprop
