#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nanprop/errors.hpp"
#include "nanprop/expression.hpp"
#include "nanprop/fixtures.hpp"
#include "oracles.hpp"

using namespace nanprop;

TEST_CASE("registry lookups") {
    CHECK(find_fixture("matvec") != nullptr);
    CHECK(find_fixture("nope") == nullptr);
    CHECK_THROWS_AS(fixture("nope"), ConfigError);
    for (const auto& fx : fixtures()) {
        CAPTURE(fx.name);
        CHECK_NOTHROW(fx.spec().validate());
        const auto y = fx.function(fx.initial_point());
        CHECK(y.size() == fx.n_outputs);
        for (double v : y) CHECK(std::isfinite(v));
        const auto truth = fx.ground_truth(fx.initial_point());
        CHECK(truth.rows() == fx.n_outputs);
        CHECK(truth.cols() == fx.n_inputs());
    }
}

TEST_CASE("analytic Jacobians agree with finite differences") {
    for (const auto& fx : fixtures()) {
        if (!fx.jacobian) continue;
        CAPTURE(fx.name);
        const auto x0 = fx.initial_point();
        const auto J = fx.jacobian(x0);
        const auto fd = oracle::forward_jacobian(fx.function, x0, fx.n_outputs);
        for (std::size_t i = 0; i < fx.n_outputs; ++i) {
            for (std::size_t j = 0; j < fx.n_inputs(); ++j) {
                CHECK(std::fabs(J(i, j) - fd(i, j)) <= 1e-5 * std::max(1.0, std::fabs(J(i, j))));
            }
        }
    }
}

TEST_CASE("NaN contamination of transparent fixtures sees at least the ground truth") {
    for (const auto& fx : fixtures()) {
        if (!fx.nan_transparent) continue;
        CAPTURE(fx.name);
        const auto x0 = fx.initial_point();
        const auto seen = oracle::contamination(fx.function, x0, fx.n_outputs);
        CHECK(seen.covers(fx.ground_truth(x0)));
    }
}

TEST_CASE("surrogate38 shape and planted zeros") {
    const Fixture& fx = fixture("surrogate38");
    CHECK(fx.n_inputs() == 38);
    CHECK(fx.n_outputs == 37);
    CHECK(fx.branch_free);
    CHECK(fx.planted_zeros.size() == 10);
    const auto x0 = fx.initial_point();
    const auto J = fx.jacobian(x0);
    const auto truth = fx.ground_truth(x0);
    std::vector<CellIndex> zeros;
    for (std::size_t i = 0; i < 37; ++i) {
        for (std::size_t j = 0; j < 38; ++j) {
            if (truth.at(i, j) == Cell::Dep && J(i, j) == 0.0) zeros.push_back({i, j});
        }
    }
    CHECK(zeros == fx.planted_zeros);
    // hidden inputs appear only through the planted products
    for (std::size_t hidden : {12u, 25u, 36u}) {
        for (std::size_t i = 0; i < 37; ++i) {
            if (truth.at(i, hidden) != Cell::Dep) continue;
            CHECK(std::find(zeros.begin(), zeros.end(), CellIndex{i, hidden}) != zeros.end());
        }
    }
}

TEST_CASE("two_mode_wing switches pattern with the flag") {
    const Fixture& fx = fixture("two_mode_wing");
    auto x = fx.initial_point();
    const auto no_strut = fx.ground_truth(x);
    x[7] = 2.0;
    const auto strut = fx.ground_truth(x);
    CHECK(strut.covers(no_strut));
    CHECK(compare(no_strut, strut).extra_deps.size() == 7);
    x[7] = 0.0;
    CHECK(fx.ground_truth(x) == no_strut);
    CHECK_FALSE(fx.branch_free);
    // numerical check of the strut terms through contamination at each mode
    auto x2 = fx.initial_point();
    x2[7] = 2.0;
    auto seen = oracle::contamination(fx.function, x2, fx.n_outputs);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 7; ++j) CHECK(seen.at(i, j) == strut.at(i, j));
    }
}

TEST_CASE("the rejecting and overwriting fixtures") {
    const auto& rej = fixture("nan_rejecting");
    CHECK_FALSE(rej.nan_transparent);
    CHECK_THROWS_AS(rej.function(std::vector<double>{std::nan(""), 1, 2}), DomainError);
    const auto& ow = fixture("nan_overwriting");
    const auto y = ow.function(std::vector<double>{std::nan(""), 1, 2});
    for (double v : y) CHECK_FALSE(std::isnan(v));
}

TEST_CASE("expression models") {
    SUBCASE("evaluation of each term kind") {
        using K = Term::Kind;
        auto t = [](K k, std::size_t a, std::size_t b = 0, std::size_t c = 0) {
            return Term{k, 2.0, {a, b, c}};
        };
        ExpressionModel m(3, {{t(K::Linear, 0)}, {t(K::Square, 0)}, {t(K::Exp, 0)}, {t(K::Sin, 0)}, {t(K::Tanh, 0)},
                              {t(K::Product, 0, 1)}, {t(K::Quotient, 0, 1)}, {t(K::TanhOfSum, 0, 1, 2)},
                              {t(K::SelfCancel, 0)}, {t(K::TrigIdentity, 0)}});
        const std::vector<double> x{0.3, 0.7, 1.1};
        const auto y = m.evaluate(x);
        CHECK(y[0] == doctest::Approx(0.6));
        CHECK(y[1] == doctest::Approx(2 * 0.09));
        CHECK(y[2] == doctest::Approx(2 * std::exp(0.15)));
        CHECK(y[3] == doctest::Approx(2 * std::sin(0.3)));
        CHECK(y[4] == doctest::Approx(2 * std::tanh(0.3)));
        CHECK(y[5] == doctest::Approx(2 * 0.21));
        CHECK(y[6] == doctest::Approx(2 * 0.3 / (1 + 0.49)));
        CHECK(y[7] == doctest::Approx(2 * std::tanh(0.3 + 0.7 * 1.1)));
        CHECK(y[8] == 0.0);
        CHECK(y[9] == doctest::Approx(2.0));
        const auto dep = m.dependency_pattern();
        const auto structural = m.structural_pattern();
        CHECK(dep.at(8, 0) == Cell::Zero);
        CHECK(structural.at(8, 0) == Cell::Dep);
        CHECK(dep.at(9, 0) == Cell::Zero);
        CHECK(structural.covers(dep));
    }
    SUBCASE("random models are reproducible and conservative under contamination") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            auto a = random_expression_model(seed, 12, 10);
            auto b = random_expression_model(seed, 12, 10);
            CHECK(a.structural_pattern() == b.structural_pattern());
            const auto x = random_point(seed, 10);
            CHECK(a.evaluate(x) == b.evaluate(x));
            auto f = [&](std::span<const double> v) { return a.evaluate(v); };
            const auto seen = oracle::contamination(f, x, 12);
            CHECK(seen == a.structural_pattern());
            CHECK(seen.covers(a.dependency_pattern()));
        }
    }
    SUBCASE("planted models realise the requested pattern") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto truth = random_pattern(seed, 16, 16, 0.1);
            const auto m = planted_model(truth, seed);
            CHECK(m.dependency_pattern() == truth);
            CHECK(m.structural_pattern() == truth);
        }
    }
    CHECK_THROWS_AS(ExpressionModel(2, {{Term{Term::Kind::Linear, 1.0, {5, 0, 0}}}}), ConfigError);
}
