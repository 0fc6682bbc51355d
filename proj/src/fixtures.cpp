#include "nanprop/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "nanprop/errors.hpp"

namespace nanprop {

namespace {

using Kind = Term::Kind;

Term t1(Kind kind, double coef, std::size_t a) { return Term{kind, coef, {a, 0, 0}}; }
Term t2(Kind kind, double coef, std::size_t a, std::size_t b) { return Term{kind, coef, {a, b, 0}}; }

std::vector<InputSpec> continuous_inputs(const std::vector<double>& x0) {
    std::vector<InputSpec> inputs;
    inputs.reserve(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) {
        inputs.push_back(InputSpec{"x" + std::to_string(j), InputKind::Continuous, x0[j]});
    }
    return inputs;
}

// Inputs held at zero in the surrogate's initial point. Any input multiplied
// by one of them has an exactly-zero partial derivative there.
constexpr std::size_t kSurrogateZeroInputs[] = {6, 19, 31};
// Inputs that enter the surrogate only through products with zero inputs.
constexpr std::size_t kSurrogateHiddenInputs[] = {12, 25, 36};

struct PlantedProduct {
    std::size_t row;
    std::size_t input;
    std::size_t zero_input;
};

// Every (row, input) listed here is a dependency whose derivative vanishes at
// the initial point; no other term of that row reads `input`.
constexpr PlantedProduct kSurrogatePlanted[] = {
    {3, 12, 6},  {8, 12, 6},  {14, 12, 19}, {17, 25, 19}, {22, 25, 31},
    {28, 36, 31}, {33, 36, 6}, {20, 2, 6},   {26, 10, 19}, {35, 15, 31},
};

bool contains(std::span<const std::size_t> set, std::size_t v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

ExpressionModel build_surrogate38() {
    constexpr std::size_t n = 38;
    constexpr std::size_t m = 37;
    std::vector<std::vector<Term>> rows(m);
    auto usable = [](std::size_t j) { return !contains(kSurrogateHiddenInputs, j); };
    for (std::size_t i = 0; i < m; ++i) {
        auto& row = rows[i];
        const double w = 1.0 + 0.05 * static_cast<double>(i);
        // Primary input of the output (zero-valued inputs enter linearly).
        if (usable(i)) {
            row.push_back(t1(contains(kSurrogateZeroInputs, i) ? Kind::Linear : Kind::Tanh, w, i));
        }
        // Local coupling with the next inputs.
        const std::size_t k1 = (i + 1) % n;
        const std::size_t k2 = (i + 5) % n;
        const std::size_t k3 = (i + 9) % n;
        if (i % 3 == 0 && usable(k1)) {
            row.push_back(t1(Kind::Sin, 0.7, k1));
        } else if (i % 3 == 1 && usable(k1) && usable(k2) && !contains(kSurrogateZeroInputs, k1) &&
                   !contains(kSurrogateZeroInputs, k2)) {
            row.push_back(t2(Kind::Product, 0.4, k1, k2));
        } else if (i % 3 == 2 && usable(k1) && usable(k3) && !contains(kSurrogateZeroInputs, k1) &&
                   !contains(kSurrogateZeroInputs, k3)) {
            row.push_back(t2(Kind::Quotient, -0.8, k1, k3));
        }
        // A global input shared by every fourth output.
        if (i % 4 == 0) row.push_back(t1(Kind::Exp, 0.3, 37));
    }
    for (const auto& p : kSurrogatePlanted) {
        rows[p.row].push_back(t2(Kind::Product, 1.1, p.input, p.zero_input));
    }
    return ExpressionModel(n, std::move(rows));
}

Fixture make_echo() {
    Fixture fx;
    fx.name = "echo";
    fx.description = "identity on 8 inputs; copies every bit";
    fx.inputs = continuous_inputs(std::vector<double>(8, 1.0));
    fx.n_outputs = 8;
    fx.function = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
    fx.ground_truth = [](std::span<const double>) {
        SparsityPattern p(8, 8);
        for (std::size_t j = 0; j < 8; ++j) p.set(j, j, Cell::Dep);
        return p;
    };
    fx.jacobian = [](std::span<const double>) {
        Matrix jac(8, 8);
        for (std::size_t j = 0; j < 8; ++j) jac(j, j) = 1.0;
        return jac;
    };
    return fx;
}

// Two outputs over three inputs: y0 = x0*x1, y1 = x1 + x2.
std::vector<double> small_model(std::span<const double> x) { return {x[0] * x[1], x[1] + x[2]}; }

SparsityPattern small_model_truth(std::span<const double>) {
    return SparsityPattern::from_rows({"110", "011"});
}

Matrix small_model_jacobian(std::span<const double> x) {
    Matrix jac(2, 3);
    jac(0, 0) = x[1];
    jac(0, 1) = x[0];
    jac(1, 1) = 1.0;
    jac(1, 2) = 1.0;
    return jac;
}

Fixture make_nan_rejecting() {
    Fixture fx;
    fx.name = "nan_rejecting";
    fx.description = "raises a domain error whenever any input is NaN";
    fx.inputs = continuous_inputs({1.0, 2.0, 3.0});
    fx.n_outputs = 2;
    fx.function = [](std::span<const double> x) {
        for (double v : x) {
            if (std::isnan(v)) throw DomainError("NaN input rejected");
        }
        return small_model(x);
    };
    fx.ground_truth = small_model_truth;
    fx.jacobian = small_model_jacobian;
    fx.nan_transparent = false;
    return fx;
}

inline constexpr double kMagicNumber = -999.0;

Fixture make_nan_overwriting() {
    Fixture fx;
    fx.name = "nan_overwriting";
    fx.description = "replaces NaN outputs with the magic number -999";
    fx.inputs = continuous_inputs({1.0, 2.0, 3.0});
    fx.n_outputs = 2;
    fx.function = [](std::span<const double> x) {
        auto y = small_model(x);
        for (double& v : y) {
            if (std::isnan(v)) v = kMagicNumber;
        }
        return y;
    };
    fx.ground_truth = small_model_truth;
    fx.jacobian = small_model_jacobian;
    fx.branch_free = false;
    fx.nan_transparent = false;
    return fx;
}

// Inputs: span, chord, load, thickness, strut_chord, strut_angle, strut_pos, iwplan.
std::vector<double> two_mode_wing(std::span<const double> x) {
    const double span = x[0], chord = x[1], load = x[2], thickness = x[3];
    const double strut_chord = x[4], strut_angle = x[5], strut_pos = x[6];
    const bool strut = two_mode_wing_has_strut(x[7]);
    std::vector<double> y(5);
    y[0] = span * chord;
    y[1] = load * span / thickness;
    y[2] = chord * thickness + 0.1 * span;
    y[3] = 0.05 * load;
    y[4] = load * chord;
    if (strut) {
        y[1] *= 1.0 - 0.4 * strut_pos * std::cos(strut_angle);
        y[3] += strut_chord * span * std::sin(strut_angle);
        y[4] += strut_chord * strut_pos;
    }
    return y;
}

Fixture make_two_mode_wing() {
    Fixture fx;
    fx.name = "two_mode_wing";
    fx.description = "flag input iwplan selects a wing with or without a strut";
    fx.inputs = {
        {"span", InputKind::Continuous, 3.0},        {"chord", InputKind::Continuous, 0.4},
        {"load", InputKind::Continuous, 2.5},        {"thickness", InputKind::Continuous, 0.12},
        {"strut_chord", InputKind::Continuous, 0.2}, {"strut_angle", InputKind::Continuous, 0.5},
        {"strut_pos", InputKind::Continuous, 0.6},   {"iwplan", InputKind::Flag, 1.0},
    };
    fx.n_outputs = 5;
    fx.function = two_mode_wing;
    fx.ground_truth = [](std::span<const double> x) {
        if (two_mode_wing_has_strut(x[7])) {
            return SparsityPattern::from_rows({"11000000", "10110110", "11010000", "10101100", "01101010"});
        }
        return SparsityPattern::from_rows({"11000000", "10110000", "11010000", "00100000", "01100000"});
    };
    fx.branch_free = false;
    return fx;
}

std::vector<Fixture> build_registry() {
    std::vector<Fixture> out;
    out.push_back(make_echo());
    out.push_back(make_expression_fixture(
        "sum_pair", ExpressionModel(2, {{t1(Kind::Linear, 1.0, 0), t1(Kind::Linear, 1.0, 1)}}), {1.0, 2.0}));
    out.push_back(make_expression_fixture("square_at_zero", ExpressionModel(1, {{t1(Kind::Square, 1.0, 0)}}), {0.0}));
    out.push_back(make_expression_fixture("self_cancel", ExpressionModel(1, {{t1(Kind::SelfCancel, 1.0, 0)}}), {1.0}));
    out.push_back(
        make_expression_fixture("trig_identity", ExpressionModel(1, {{t1(Kind::TrigIdentity, 1.0, 0)}}), {0.7}));
    out.push_back(make_expression_fixture(
        "matvec",
        ExpressionModel(2, {{t1(Kind::Linear, 1.0, 0)}, {t1(Kind::Linear, 1.0, 0), t1(Kind::Linear, 1.0, 1)}}),
        {1.0, 1.0}));
    out.push_back(make_two_mode_wing());
    out.push_back(make_nan_rejecting());
    out.push_back(make_nan_overwriting());
    {
        Fixture fx = make_expression_fixture("surrogate38", surrogate38_model(), surrogate38_initial_point());
        fx.description = "38 inputs, 37 outputs, branch-free, with coincidental zero gradients at x0";
        fx.planted_zeros.clear();
        for (const auto& p : kSurrogatePlanted) fx.planted_zeros.push_back({p.row, p.input});
        std::sort(fx.planted_zeros.begin(), fx.planted_zeros.end());
        out.push_back(std::move(fx));
    }
    {
        std::vector<std::vector<Term>> rows(4);
        Fixture fx = make_expression_fixture("constant64", ExpressionModel(64, std::move(rows)),
                                             std::vector<double>(64, 1.0));
        fx.description = "64 inputs, 4 constant outputs";
        out.push_back(std::move(fx));
    }
    {
        std::vector<std::vector<Term>> rows(8);
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                rows[i].push_back(t1(Kind::Linear, 1.0 + 0.1 * static_cast<double>(i + j), j));
            }
        }
        std::vector<double> x0(8);
        for (std::size_t j = 0; j < 8; ++j) x0[j] = 0.5 + 0.1 * static_cast<double>(j);
        Fixture fx = make_expression_fixture("dense8", ExpressionModel(8, std::move(rows)), x0);
        fx.description = "8 inputs, 8 outputs, every output reads every input";
        out.push_back(std::move(fx));
    }
    return out;
}

}  // namespace

bool two_mode_wing_has_strut(double flag) { return !(flag == 0.0 || flag == 1.0); }

std::vector<double> Fixture::initial_point() const {
    std::vector<double> x;
    x.reserve(inputs.size());
    for (const auto& in : inputs) x.push_back(in.initial);
    return x;
}

BlackBoxSpec Fixture::spec() const {
    BlackBoxSpec spec;
    spec.n_inputs = inputs.size();
    spec.n_outputs = n_outputs;
    spec.inputs = inputs;
    spec.invocation = InProcessInvocation{name};
    return spec;
}

Fixture make_expression_fixture(std::string name, const ExpressionModel& model, std::vector<double> x0) {
    if (x0.size() != model.n_inputs()) throw ConfigError("initial point does not match model arity");
    Fixture fx;
    fx.name = std::move(name);
    fx.description = "expression model";
    fx.inputs = continuous_inputs(x0);
    fx.n_outputs = model.n_outputs();
    fx.function = [model](std::span<const double> x) { return model.evaluate(x); };
    fx.ground_truth = [model](std::span<const double>) { return model.dependency_pattern(); };
    fx.jacobian = [model](std::span<const double> x) { return model.jacobian(x); };
    fx.planted_zeros = model.coincidental_zeros(x0);
    return fx;
}

const ExpressionModel& surrogate38_model() {
    static const ExpressionModel model = build_surrogate38();
    return model;
}

std::vector<double> surrogate38_initial_point() {
    std::vector<double> x0(38);
    for (std::size_t j = 0; j < x0.size(); ++j) {
        x0[j] = contains(kSurrogateZeroInputs, j) ? 0.0 : 0.6 + 0.025 * static_cast<double>(j);
    }
    return x0;
}

const std::vector<Fixture>& fixtures() {
    static const std::vector<Fixture> registry = build_registry();
    return registry;
}

const Fixture* find_fixture(std::string_view name) {
    for (const auto& fx : fixtures()) {
        if (fx.name == name) return &fx;
    }
    return nullptr;
}

const Fixture& fixture(std::string_view name) {
    if (const Fixture* fx = find_fixture(name)) return *fx;
    throw ConfigError("unknown fixture '" + std::string(name) + "'");
}

}  // namespace nanprop
