#include "nanprop/render.hpp"

#include <sstream>

#include "nanprop/errors.hpp"

namespace nanprop {

namespace {

char grid_char(Cell c) {
    switch (c) {
        case Cell::Dep: return '#';
        case Cell::Zero: return '.';
        case Cell::Unknown: return '?';
    }
    return '?';
}

}  // namespace

std::string render_grid(const SparsityPattern& p) {
    std::string out;
    out.reserve(p.rows() * (p.cols() + 1));
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) out += grid_char(p.at(i, j));
        out += '\n';
    }
    return out;
}

SparsityPattern parse_grid(std::string_view text) {
    std::vector<std::string> rows;
    std::istringstream is{std::string(text)};
    for (std::string line; std::getline(is, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string row;
        for (char ch : line) {
            switch (ch) {
                case '#': row += '1'; break;
                case '.': row += '0'; break;
                case '?': row += '?'; break;
                default: throw ParseError(std::string("unexpected grid character '") + ch + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return SparsityPattern::from_rows(rows);
}

std::string render_comparison(const SparsityPattern& reference, const SparsityPattern& candidate) {
    const DiffReport diff = compare(reference, candidate);
    std::vector<std::string> grid;
    for (std::size_t i = 0; i < reference.rows(); ++i) {
        std::string row;
        for (std::size_t j = 0; j < reference.cols(); ++j) row += grid_char(reference.at(i, j));
        grid.push_back(std::move(row));
    }
    for (const auto& c : diff.false_negatives) grid[c.row][c.col] = 'X';
    for (const auto& c : diff.extra_deps) grid[c.row][c.col] = '+';
    std::string out;
    for (const auto& row : grid) out += row + '\n';
    return out;
}

std::string render_svg(const SparsityPattern& p, int cell_px) {
    const auto w = static_cast<long>(p.cols()) * cell_px;
    const auto h = static_cast<long>(p.rows()) * cell_px;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 1 << "\" height=\"" << h + 1
       << "\" viewBox=\"-0.5 -0.5 " << w + 1 << ' ' << h + 1 << "\">\n"
       << "  <defs>\n"
       << "    <pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"4\" height=\"4\">\n"
       << "      <path d=\"M0,4 L4,0\" stroke=\"#808080\" stroke-width=\"1\"/>\n"
       << "    </pattern>\n"
       << "  </defs>\n";
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
            const char* fill = "#ffffff";
            if (p.at(i, j) == Cell::Dep) fill = "#808080";
            if (p.at(i, j) == Cell::Unknown) fill = "url(#hatch)";
            os << "  <rect x=\"" << static_cast<long>(j) * cell_px << "\" y=\"" << static_cast<long>(i) * cell_px
               << "\" width=\"" << cell_px << "\" height=\"" << cell_px << "\" fill=\"" << fill
               << "\" stroke=\"#c0c0c0\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace nanprop
