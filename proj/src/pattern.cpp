#include "nanprop/pattern.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nanprop/errors.hpp"

namespace nanprop {

namespace {

constexpr std::string_view kPatternMagic = "nanprop-pattern";
constexpr std::string_view kPatternVersion = "v1";

void require_same_shape(const SparsityPattern& a, const SparsityPattern& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
    }
}

Cell parse_cell(char c) {
    switch (c) {
        case '0': return Cell::Zero;
        case '1': return Cell::Dep;
        case '?': return Cell::Unknown;
        default: throw ParseError(std::string("invalid pattern character '") + c + "'");
    }
}

std::size_t parse_count(std::string_view token) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
        throw ParseError("invalid count '" + std::string(token) + "'");
    }
    return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    // A trailing newline yields one empty final line.
    if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n') {
        lines.pop_back();
    }
    return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

SparsityPattern::SparsityPattern(std::size_t rows, std::size_t cols, Cell fill)
    : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

SparsityPattern SparsityPattern::from_rows(const std::vector<std::string>& rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m == 0 ? 0 : rows.front().size();
    SparsityPattern p(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        if (rows[i].size() != n) throw ParseError("inconsistent row lengths");
        for (std::size_t j = 0; j < n; ++j) p.set(i, j, parse_cell(rows[i][j]));
    }
    return p;
}

Cell SparsityPattern::at(std::size_t row, std::size_t col) const {
    return cells_[row * cols_ + col];
}

void SparsityPattern::set(std::size_t row, std::size_t col, Cell value) {
    cells_[row * cols_ + col] = value;
}

bool SparsityPattern::is_dep(std::size_t row, std::size_t col, UnknownAs unknown_as) const {
    const Cell c = at(row, col);
    return c == Cell::Dep || (c == Cell::Unknown && unknown_as == UnknownAs::Dep);
}

std::span<const Cell> SparsityPattern::row(std::size_t i) const {
    return std::span<const Cell>(cells_).subspan(i * cols_, cols_);
}

std::size_t SparsityPattern::count(Cell value) const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), value));
}

SparsityPattern SparsityPattern::binary(UnknownAs unknown_as) const {
    SparsityPattern out = *this;
    const Cell replacement = unknown_as == UnknownAs::Dep ? Cell::Dep : Cell::Zero;
    std::replace(out.cells_.begin(), out.cells_.end(), Cell::Unknown, replacement);
    return out;
}

bool SparsityPattern::covers(const SparsityPattern& other) const {
    require_same_shape(*this, other, "covers");
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        if (other.cells_[k] == Cell::Dep && cells_[k] != Cell::Dep) return false;
    }
    return true;
}

SparsityPattern unite(const SparsityPattern& a, const SparsityPattern& b) {
    require_same_shape(a, b, "union");
    SparsityPattern out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out.set(i, j, std::max(a.at(i, j), b.at(i, j)));
    }
    return out;
}

DiffReport compare(const SparsityPattern& reference, const SparsityPattern& candidate) {
    require_same_shape(reference, candidate, "compare");
    DiffReport report;
    for (std::size_t i = 0; i < reference.rows(); ++i) {
        for (std::size_t j = 0; j < reference.cols(); ++j) {
            const Cell r = reference.at(i, j);
            const Cell c = candidate.at(i, j);
            if (r == Cell::Dep && c == Cell::Zero) report.false_negatives.push_back({i, j});
            if (c == Cell::Dep && r == Cell::Zero) report.extra_deps.push_back({i, j});
        }
    }
    return report;
}

ColumnAdjacency::ColumnAdjacency(std::size_t n) : n_(n), adj_(n * n, 0) {}

void ColumnAdjacency::connect(std::size_t j, std::size_t k) {
    if (j == k) return;
    adj_[j * n_ + k] = 1;
    adj_[k * n_ + j] = 1;
}

std::size_t ColumnAdjacency::degree(std::size_t j) const {
    return static_cast<std::size_t>(
        std::count(adj_.begin() + static_cast<std::ptrdiff_t>(j * n_),
                   adj_.begin() + static_cast<std::ptrdiff_t>((j + 1) * n_), std::uint8_t{1}));
}

std::size_t ColumnAdjacency::max_degree() const {
    std::size_t best = 0;
    for (std::size_t j = 0; j < n_; ++j) best = std::max(best, degree(j));
    return best;
}

std::vector<std::size_t> ColumnAdjacency::neighbors(std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < n_; ++k) {
        if (adjacent(j, k)) out.push_back(k);
    }
    return out;
}

ColumnAdjacency gramian_adjacency(const SparsityPattern& p, UnknownAs unknown_as) {
    ColumnAdjacency adj(p.cols());
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        support.clear();
        for (std::size_t j = 0; j < p.cols(); ++j) {
            if (p.is_dep(i, j, unknown_as)) support.push_back(j);
        }
        for (std::size_t a = 0; a < support.size(); ++a) {
            for (std::size_t b = a + 1; b < support.size(); ++b) adj.connect(support[a], support[b]);
        }
    }
    return adj;
}

char cell_char(Cell c) {
    switch (c) {
        case Cell::Zero: return '0';
        case Cell::Dep: return '1';
        case Cell::Unknown: return '?';
    }
    return '?';
}

std::string to_text(const SparsityPattern& p) {
    std::string out;
    out.reserve(32 + p.rows() * (p.cols() + 1));
    out += kPatternMagic;
    out += ' ';
    out += kPatternVersion;
    out += ' ' + std::to_string(p.rows()) + ' ' + std::to_string(p.cols()) + '\n';
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (Cell c : p.row(i)) out += cell_char(c);
        out += '\n';
    }
    return out;
}

SparsityPattern parse_pattern(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ParseError("empty pattern text");
    const auto header = split_ws(lines.front());
    if (header.size() != 4 || header[0] != kPatternMagic) {
        throw ParseError("missing 'nanprop-pattern' header");
    }
    if (header[1] != kPatternVersion) {
        throw ParseError("unsupported pattern version '" + std::string(header[1]) + "'");
    }
    const std::size_t m = parse_count(header[2]);
    const std::size_t n = parse_count(header[3]);
    if (lines.size() - 1 != m) {
        throw ParseError("expected " + std::to_string(m) + " rows, found " +
                         std::to_string(lines.size() - 1));
    }
    SparsityPattern p(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const std::string_view line = lines[i + 1];
        if (line.size() != n) {
            throw ParseError("row " + std::to_string(i) + " has " + std::to_string(line.size()) +
                             " cells, expected " + std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) p.set(i, j, parse_cell(line[j]));
    }
    return p;
}

SparsityPattern read_pattern_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open pattern file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pattern(buf.str());
}

void write_pattern_file(const std::filesystem::path& path, const SparsityPattern& p) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write pattern file " + path.string());
    out << to_text(p);
}

}  // namespace nanprop
