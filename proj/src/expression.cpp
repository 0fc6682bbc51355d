#include "nanprop/expression.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nanprop/errors.hpp"

namespace nanprop {

namespace {

// Portable draws; std distributions differ across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double random_coef(std::mt19937_64& rng) {
    const double magnitude = 0.5 + 1.5 * unit(rng);
    return (rng() & 1U) != 0 ? magnitude : -magnitude;
}

Term single(Term::Kind kind, double coef, std::size_t a) {
    return Term{kind, coef, {a, 0, 0}};
}

}  // namespace

std::size_t Term::arity() const {
    switch (kind) {
        case Kind::Product:
        case Kind::Quotient: return 2;
        case Kind::TanhOfSum: return 3;
        default: return 1;
    }
}

std::vector<std::size_t> Term::reads() const {
    std::vector<std::size_t> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(arity()));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> Term::depends_on() const {
    if (kind == Kind::SelfCancel || kind == Kind::TrigIdentity) return {};
    return reads();
}

ExpressionModel::ExpressionModel(std::size_t n_inputs, std::vector<std::vector<Term>> rows)
    : n_inputs_(n_inputs), rows_(std::move(rows)) {
    for (const auto& row : rows_) {
        for (const auto& t : row) {
            for (std::size_t j : t.reads()) {
                if (j >= n_inputs_) throw ConfigError("term reads input " + std::to_string(j) + " out of range");
            }
        }
    }
}

std::vector<double> ExpressionModel::evaluate(std::span<const double> x) const {
    std::vector<double> out(rows_.size(), 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        double acc = 0.0;
        for (const auto& t : rows_[i]) {
            const double a = x[t.args[0]];
            double v = 0.0;
            switch (t.kind) {
                case Term::Kind::Linear: v = a; break;
                case Term::Kind::Square: v = a * a; break;
                case Term::Kind::Exp: v = std::exp(0.5 * a); break;
                case Term::Kind::Sin: v = std::sin(a); break;
                case Term::Kind::Tanh: v = std::tanh(a); break;
                case Term::Kind::Product: v = a * x[t.args[1]]; break;
                case Term::Kind::Quotient: {
                    const double b = x[t.args[1]];
                    v = a / (1.0 + b * b);
                    break;
                }
                case Term::Kind::TanhOfSum: v = std::tanh(a + x[t.args[1]] * x[t.args[2]]); break;
                case Term::Kind::SelfCancel: v = a - a; break;
                case Term::Kind::TrigIdentity: {
                    const double s = std::sin(a);
                    const double c = std::cos(a);
                    v = s * s + c * c;
                    break;
                }
            }
            acc += t.coef * v;
        }
        out[i] = acc;
    }
    return out;
}

Matrix ExpressionModel::jacobian(std::span<const double> x) const {
    Matrix jac(rows_.size(), n_inputs_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& t : rows_[i]) {
            const std::size_t ia = t.args[0];
            const double a = x[ia];
            const double c = t.coef;
            switch (t.kind) {
                case Term::Kind::Linear: jac(i, ia) += c; break;
                case Term::Kind::Square: jac(i, ia) += 2.0 * c * a; break;
                case Term::Kind::Exp: jac(i, ia) += 0.5 * c * std::exp(0.5 * a); break;
                case Term::Kind::Sin: jac(i, ia) += c * std::cos(a); break;
                case Term::Kind::Tanh: {
                    const double th = std::tanh(a);
                    jac(i, ia) += c * (1.0 - th * th);
                    break;
                }
                case Term::Kind::Product:
                    jac(i, ia) += c * x[t.args[1]];
                    jac(i, t.args[1]) += c * a;
                    break;
                case Term::Kind::Quotient: {
                    const double b = x[t.args[1]];
                    const double den = 1.0 + b * b;
                    jac(i, ia) += c / den;
                    jac(i, t.args[1]) += -2.0 * c * a * b / (den * den);
                    break;
                }
                case Term::Kind::TanhOfSum: {
                    const double b = x[t.args[1]];
                    const double d = x[t.args[2]];
                    const double th = std::tanh(a + b * d);
                    const double g = c * (1.0 - th * th);
                    jac(i, ia) += g;
                    jac(i, t.args[1]) += g * d;
                    jac(i, t.args[2]) += g * b;
                    break;
                }
                case Term::Kind::SelfCancel:
                case Term::Kind::TrigIdentity: break;
            }
        }
    }
    return jac;
}

SparsityPattern ExpressionModel::dependency_pattern() const {
    SparsityPattern p(rows_.size(), n_inputs_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& t : rows_[i]) {
            for (std::size_t j : t.depends_on()) p.set(i, j, Cell::Dep);
        }
    }
    return p;
}

SparsityPattern ExpressionModel::structural_pattern() const {
    SparsityPattern p(rows_.size(), n_inputs_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& t : rows_[i]) {
            for (std::size_t j : t.reads()) p.set(i, j, Cell::Dep);
        }
    }
    return p;
}

std::vector<CellIndex> ExpressionModel::coincidental_zeros(std::span<const double> x) const {
    const SparsityPattern deps = dependency_pattern();
    const Matrix jac = jacobian(x);
    std::vector<CellIndex> out;
    for (std::size_t i = 0; i < deps.rows(); ++i) {
        for (std::size_t j = 0; j < deps.cols(); ++j) {
            if (deps.at(i, j) == Cell::Dep && jac(i, j) == 0.0) out.push_back({i, j});
        }
    }
    return out;
}

ExpressionModel random_expression_model(std::uint64_t seed, std::size_t n_outputs, std::size_t n_inputs,
                                        const RandomModelOptions& options) {
    std::mt19937_64 rng(seed);
    static constexpr Term::Kind kSingles[] = {Term::Kind::Linear, Term::Kind::Square, Term::Kind::Exp,
                                              Term::Kind::Sin, Term::Kind::Tanh};
    std::vector<std::vector<Term>> rows(n_outputs);
    for (auto& row : rows) {
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < n_inputs; ++j) {
            if (unit(rng) < options.density) cols.push_back(j);
        }
        // Shuffle so coupled terms pair arbitrary columns.
        for (std::size_t k = cols.size(); k > 1; --k) std::swap(cols[k - 1], cols[below(rng, k)]);
        std::size_t k = 0;
        while (k < cols.size()) {
            const std::size_t left = cols.size() - k;
            const double pick = unit(rng);
            if (options.coupled_terms && left >= 3 && pick < 0.15) {
                row.push_back(Term{Term::Kind::TanhOfSum, random_coef(rng), {cols[k], cols[k + 1], cols[k + 2]}});
                k += 3;
            } else if (options.coupled_terms && left >= 2 && pick < 0.45) {
                const auto kind = unit(rng) < 0.5 ? Term::Kind::Product : Term::Kind::Quotient;
                row.push_back(Term{kind, random_coef(rng), {cols[k], cols[k + 1], 0}});
                k += 2;
            } else {
                row.push_back(single(kSingles[below(rng, std::size(kSingles))], random_coef(rng), cols[k]));
                k += 1;
            }
        }
        if (options.cancellation_terms && n_inputs > 0 && unit(rng) < 0.3) {
            const auto kind = unit(rng) < 0.5 ? Term::Kind::SelfCancel : Term::Kind::TrigIdentity;
            row.push_back(single(kind, random_coef(rng), below(rng, n_inputs)));
        }
    }
    return ExpressionModel(n_inputs, std::move(rows));
}

ExpressionModel planted_model(const SparsityPattern& truth, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    static constexpr Term::Kind kKinds[] = {Term::Kind::Linear, Term::Kind::Exp, Term::Kind::Sin,
                                            Term::Kind::Tanh};
    std::vector<std::vector<Term>> rows(truth.rows());
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        for (std::size_t j = 0; j < truth.cols(); ++j) {
            if (truth.is_dep(i, j)) rows[i].push_back(single(kKinds[below(rng, std::size(kKinds))], random_coef(rng), j));
        }
    }
    return ExpressionModel(truth.cols(), std::move(rows));
}

std::vector<double> random_point(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<double> x(n);
    for (auto& v : x) v = 0.5 + unit(rng);
    return x;
}

SparsityPattern random_pattern(std::uint64_t seed, std::size_t rows, std::size_t cols, double density) {
    std::mt19937_64 rng(seed);
    SparsityPattern p(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (unit(rng) < density) p.set(i, j, Cell::Dep);
        }
    }
    return p;
}

}  // namespace nanprop
