#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nanprop/blackbox.hpp"
#include "nanprop/expression.hpp"
#include "nanprop/matrix.hpp"
#include "nanprop/pattern.hpp"

namespace nanprop {

/// Named in-process black box with its known mathematical structure.
struct Fixture {
    std::string name;
    std::string description;
    std::vector<InputSpec> inputs;
    std::size_t n_outputs = 0;
    BlackBoxFunction function;

    /// Mathematical dependency pattern at a point (branching fixtures vary).
    std::function<SparsityPattern(std::span<const double>)> ground_truth;
    /// Analytic Jacobian, when defined.
    std::function<Matrix(std::span<const double>)> jacobian;

    /// No control flow depends on input values.
    bool branch_free = true;
    /// NaN inputs flow through to outputs without being rejected or replaced.
    bool nan_transparent = true;
    /// Cells with an exactly-zero partial derivative at the initial point.
    std::vector<CellIndex> planted_zeros;

    std::size_t n_inputs() const noexcept { return inputs.size(); }
    std::vector<double> initial_point() const;
    BlackBoxSpec spec() const;
};

const std::vector<Fixture>& fixtures();
const Fixture* find_fixture(std::string_view name);
/// Throws ConfigError for unknown names.
const Fixture& fixture(std::string_view name);

/// Wraps an expression model as a fixture evaluated at `x0`.
Fixture make_expression_fixture(std::string name, const ExpressionModel& model, std::vector<double> x0);

/// The 38-input, 37-output branch-free surrogate and its term lists.
const ExpressionModel& surrogate38_model();
std::vector<double> surrogate38_initial_point();

/// Mode of the two-mode wing fixture: no strut for flag values 0 and 1.
bool two_mode_wing_has_strut(double flag);

}  // namespace nanprop
