#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nanprop/matrix.hpp"
#include "nanprop/pattern.hpp"

namespace nanprop {

/// One additive term of an output. `args` holds input indices; unused slots
/// are ignored.
struct Term {
    enum class Kind {
        Linear,        // c*a
        Square,        // c*a^2
        Exp,           // c*exp(0.5*a)
        Sin,           // c*sin(a)
        Tanh,          // c*tanh(a)
        Product,       // c*a*b
        Quotient,      // c*a/(1+b^2)
        TanhOfSum,     // c*tanh(a + b*d)
        SelfCancel,    // c*(a - a), identically zero
        TrigIdentity,  // c*(sin(a)^2 + cos(a)^2), identically c
    };

    Kind kind = Kind::Linear;
    double coef = 1.0;
    std::array<std::size_t, 3> args{};

    std::size_t arity() const;
    /// Inputs the term reads syntactically.
    std::vector<std::size_t> reads() const;
    /// Inputs the term depends on mathematically.
    std::vector<std::size_t> depends_on() const;
};

/// Branch-free black box whose outputs are sums of elementary terms. The
/// explicit term lists make the mathematical pattern and the analytic
/// Jacobian available alongside the function.
class ExpressionModel {
public:
    ExpressionModel() = default;
    ExpressionModel(std::size_t n_inputs, std::vector<std::vector<Term>> rows);

    std::size_t n_inputs() const noexcept { return n_inputs_; }
    std::size_t n_outputs() const noexcept { return rows_.size(); }
    const std::vector<std::vector<Term>>& rows() const noexcept { return rows_; }

    std::vector<double> evaluate(std::span<const double> x) const;
    Matrix jacobian(std::span<const double> x) const;

    /// Cells whose output mathematically depends on the input.
    SparsityPattern dependency_pattern() const;
    /// Cells whose output reads the input anywhere (what NaN contamination sees).
    SparsityPattern structural_pattern() const;
    /// Dependency cells whose analytic partial derivative is exactly zero at `x`.
    std::vector<CellIndex> coincidental_zeros(std::span<const double> x) const;

private:
    std::size_t n_inputs_ = 0;
    std::vector<std::vector<Term>> rows_;
};

struct RandomModelOptions {
    double density = 0.15;
    /// Include terms that NaN tracing reports as false positives.
    bool cancellation_terms = true;
    /// Allow coupled terms (products, quotients, nested sums).
    bool coupled_terms = true;
};

/// Deterministic random model; the same seed yields the same model everywhere.
ExpressionModel random_expression_model(std::uint64_t seed, std::size_t n_outputs, std::size_t n_inputs,
                                        const RandomModelOptions& options = {});

/// Model whose dependency pattern equals `truth` (one term per Dep cell).
ExpressionModel planted_model(const SparsityPattern& truth, std::uint64_t seed);

/// Point with entries in [0.5, 1.5], away from coincidental zeros.
std::vector<double> random_point(std::uint64_t seed, std::size_t n);

/// Random binary pattern with independent Dep cells at `density`.
SparsityPattern random_pattern(std::uint64_t seed, std::size_t rows, std::size_t cols, double density);

}  // namespace nanprop
