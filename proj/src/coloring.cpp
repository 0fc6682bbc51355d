#include "nanprop/coloring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "nanprop/errors.hpp"
#include "nanprop/payload.hpp"
#include "nanprop/tracer.hpp"
#include "nanprop/wire.hpp"

namespace nanprop {

std::vector<std::vector<std::size_t>> Coloring::classes() const {
    std::vector<std::vector<std::size_t>> out(n_colors);
    for (std::size_t j = 0; j < n; ++j) out[color_of[j]].push_back(j);
    return out;
}

Coloring color_columns(const ColumnAdjacency& adj) {
    const std::size_t n = adj.size();
    std::vector<std::size_t> degree(n);
    for (std::size_t j = 0; j < n; ++j) degree[j] = adj.degree(j);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    Coloring c{n, std::vector<std::size_t>(n, kNone), 0};
    std::vector<char> taken;
    for (std::size_t j : order) {
        taken.assign(c.n_colors + 1, 0);
        for (std::size_t k : adj.neighbors(j)) {
            if (c.color_of[k] != kNone) taken[c.color_of[k]] = 1;
        }
        std::size_t color = 0;
        while (taken[color]) ++color;
        c.color_of[j] = color;
        c.n_colors = std::max(c.n_colors, color + 1);
    }
    return c;
}

bool is_valid_coloring(const Coloring& coloring, const ColumnAdjacency& adj) {
    if (coloring.n != adj.size() || coloring.color_of.size() != coloring.n) return false;
    std::vector<char> used(coloring.n_colors, 0);
    for (std::size_t j = 0; j < coloring.n; ++j) {
        if (coloring.color_of[j] >= coloring.n_colors) return false;
        used[coloring.color_of[j]] = 1;
        for (std::size_t k = j + 1; k < coloring.n; ++k) {
            if (adj.adjacent(j, k) && coloring.color_of[j] == coloring.color_of[k]) return false;
        }
    }
    return std::all_of(used.begin(), used.end(), [](char u) { return u != 0; });
}

double speedup(std::size_t n_inputs, std::size_t n_colors) {
    if (n_colors == 0) throw std::invalid_argument("speedup needs at least one color");
    return static_cast<double>(n_inputs) / static_cast<double>(n_colors);
}

std::string to_text(const Coloring& coloring) {
    std::ostringstream os;
    os << "nanprop-coloring v1 " << coloring.n << ' ' << coloring.n_colors << '\n';
    for (std::size_t c : coloring.color_of) os << c << '\n';
    return os.str();
}

Coloring parse_coloring(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string magic, version;
    Coloring c;
    if (!(is >> magic >> version >> c.n >> c.n_colors) || magic != "nanprop-coloring" || version != "v1") {
        throw ParseError("bad coloring header");
    }
    c.color_of.resize(c.n);
    for (std::size_t j = 0; j < c.n; ++j) {
        if (!(is >> c.color_of[j])) throw ParseError("coloring truncated at column " + std::to_string(j));
        if (c.color_of[j] >= c.n_colors) throw ParseError("color id out of range at column " + std::to_string(j));
    }
    std::string extra;
    if (is >> extra) throw ParseError("trailing data in coloring");
    return c;
}

namespace {

std::vector<double> finite_baseline(Evaluator& bb, std::span<const double> x0) {
    for (double v : x0) {
        if (!std::isfinite(v)) throw BaselineInvalid("x0 must be finite");
    }
    EvalResult r = bb.evaluate(x0);
    if (!r.ok()) throw BaselineInvalid(std::string("baseline evaluation failed: ") + r.failure().detail);
    for (std::size_t i = 0; i < r.outputs().size(); ++i) {
        if (!std::isfinite(r.outputs()[i])) {
            throw BaselineInvalid("baseline output " + std::to_string(i) + " is not finite");
        }
    }
    return r.outputs();
}

}  // namespace

CompressedJacobian compressed_jacobian(Evaluator& bb, std::span<const double> x0, const SparsityPattern& pattern,
                                       const Coloring& coloring, FdScheme scheme) {
    const std::size_t m = bb.n_outputs();
    const std::size_t n = bb.n_inputs();
    if (pattern.rows() != m || pattern.cols() != n) throw DimensionMismatch("pattern does not match the black box");
    if (coloring.n != n || coloring.color_of.size() != n) throw DimensionMismatch("coloring does not match the black box");
    if (x0.size() != n) throw DimensionMismatch("x0 does not match the black box");

    CompressedJacobian out;
    out.pattern = pattern.binary(UnknownAs::Dep);
    out.coloring = coloring;
    out.x0.assign(x0.begin(), x0.end());

    // owner(i, c): the dependency column of color c in row i
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(m * coloring.n_colors, kNone);
    std::vector<char> active(coloring.n_colors, 0);
    std::vector<char> has_dep(n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (out.pattern.at(i, j) != Cell::Dep) continue;
            const std::size_t c = coloring.color_of[j];
            std::size_t& slot = owner[i * coloring.n_colors + c];
            if (slot != kNone) throw DecompressionAmbiguity(i, slot, j);
            slot = j;
            active[c] = 1;
            has_dep[j] = 1;
        }
    }

    const std::size_t start = bb.eval_count();
    const auto base = finite_baseline(bb, x0);

    std::vector<std::size_t> colors;
    std::vector<std::vector<double>> probes;
    for (std::size_t c = 0; c < coloring.n_colors; ++c) {
        if (!active[c]) continue;
        colors.push_back(c);
        std::vector<double> plus(x0.begin(), x0.end());
        std::vector<double> minus(x0.begin(), x0.end());
        // columns without dependencies stay put: flag inputs must not switch branch
        for (std::size_t j = 0; j < n; ++j) {
            if (coloring.color_of[j] != c || !has_dep[j]) continue;
            plus[j] += fd_step(x0[j]);
            minus[j] -= fd_step(x0[j]);
        }
        probes.push_back(std::move(plus));
        if (scheme == FdScheme::Central) probes.push_back(std::move(minus));
    }

    std::vector<std::vector<double>> outputs;
    const std::size_t round = std::max<std::size_t>(bb.parallelism(), 1);
    for (std::size_t s = 0; s < probes.size(); s += round) {
        std::vector<std::vector<double>> batch(probes.begin() + static_cast<std::ptrdiff_t>(s),
                                               probes.begin() + static_cast<std::ptrdiff_t>(std::min(probes.size(), s + round)));
        for (auto& r : bb.evaluate_batch(batch)) {
            if (!r.ok()) throw BlackBoxError(std::string("seed evaluation failed: ") + r.failure().detail);
            outputs.push_back(r.outputs());
        }
    }

    const std::size_t per_color = scheme == FdScheme::Central ? 2 : 1;
    for (std::size_t k = 0; k < colors.size(); ++k) {
        const std::size_t c = colors[k];
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = owner[i * coloring.n_colors + c];
            if (j == kNone) continue;
            const double h = fd_step(x0[j]);
            double value;
            if (scheme == FdScheme::Forward) {
                value = (outputs[k][i] - base[i]) / h;
            } else {
                value = (outputs[per_color * k][i] - outputs[per_color * k + 1][i]) / (2.0 * h);
            }
            out.values[{i, j}] = value;
        }
    }
    out.eval_count = bb.eval_count() - start;
    return out;
}

Matrix dense_jacobian(Evaluator& bb, std::span<const double> x0, FdScheme scheme) {
    return fd_jacobian(bb, x0, scheme);
}

std::string to_text(const JacobianFile& jac) {
    std::ostringstream os;
    os << "nanprop-jac v1 " << jac.rows << ' ' << jac.cols << ' ' << jac.n_colors << '\n';
    for (const auto& e : jac.entries) os << e.row << ' ' << e.col << ' ' << wire::hex_bits(e.value) << '\n';
    return os.str();
}

JacobianFile parse_jacobian(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string magic, version;
    JacobianFile jac;
    if (!(is >> magic >> version >> jac.rows >> jac.cols >> jac.n_colors) || magic != "nanprop-jac" ||
        version != "v1") {
        throw ParseError("bad jacobian header");
    }
    std::size_t row, col;
    std::string bits;
    while (is >> row) {
        if (!(is >> col >> bits)) throw ParseError("truncated jacobian entry");
        if (row >= jac.rows || col >= jac.cols) throw ParseError("jacobian entry out of range");
        try {
            jac.entries.push_back({row, col, wire::parse_hex_bits(bits)});
        } catch (const WireError& e) {
            throw ParseError(e.what());
        }
    }
    if (!is.eof()) throw ParseError("malformed jacobian entry");
    return jac;
}

JacobianFile to_file(const CompressedJacobian& jac) {
    JacobianFile f{jac.pattern.rows(), jac.pattern.cols(), jac.coloring.n_colors, {}};
    for (const auto& [cell, value] : jac.values) f.entries.push_back({cell.row, cell.col, value});
    return f;
}

JacobianFile to_file(const Matrix& dense) {
    JacobianFile f{dense.rows(), dense.cols(), dense.cols(), {}};
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        for (std::size_t j = 0; j < dense.cols(); ++j) f.entries.push_back({i, j, dense(i, j)});
    }
    return f;
}

}  // namespace nanprop
