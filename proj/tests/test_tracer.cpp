#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "nanprop/errors.hpp"
#include "nanprop/expression.hpp"
#include "nanprop/fixtures.hpp"
#include "nanprop/payload.hpp"
#include "nanprop/subprocess.hpp"
#include "nanprop/tracer.hpp"
#include "oracles.hpp"

using namespace nanprop;

namespace {

struct Case {
    std::string name;
    BlackBoxFunction f;
    std::size_t m;
    std::vector<double> x0;
};

// Every NaN-transparent, branch-free fixture plus random expression models.
std::vector<Case> corpus(std::size_t random_models) {
    std::vector<Case> out;
    for (const auto& fx : fixtures()) {
        if (fx.branch_free && fx.nan_transparent) out.push_back({fx.name, fx.function, fx.n_outputs, fx.initial_point()});
    }
    for (std::uint64_t seed = 0; seed < random_models; ++seed) {
        const std::size_t n = 2 + seed % 23, m = 1 + (seed * 7) % 19;
        auto model = std::make_shared<ExpressionModel>(random_expression_model(seed, m, n));
        out.push_back({"random" + std::to_string(seed),
                       [model](std::span<const double> x) { return model->evaluate(x); }, m,
                       random_point(seed, n)});
    }
    return out;
}

std::unique_ptr<FunctionEvaluator> make(const Case& c) {
    return std::make_unique<FunctionEvaluator>(c.x0.size(), c.m, c.f);
}

bool has_warning(const TraceReport& r, WarningKind kind) {
    return std::any_of(r.warnings.begin(), r.warnings.end(), [&](const TraceWarning& w) { return w.kind == kind; });
}

}  // namespace

TEST_CASE("one-hot trace of matvec") {
    const auto& fx = fixture("matvec");
    auto bb = make_evaluator(fx.spec());
    auto r = trace_onehot(*bb, fx.initial_point());
    CHECK(r.pattern == SparsityPattern::from_rows({"10", "11"}));
    CHECK(r.eval_count == 2);
    CHECK_FALSE(r.baseline_evaluated);
    TraceOptions opts;
    opts.evaluate_baseline = true;
    auto rb = trace_onehot(*bb, fx.initial_point(), opts);
    CHECK(rb.eval_count == 3);
    CHECK(rb.pattern == r.pattern);
}

TEST_CASE("one-hot agrees with the contamination oracle across the corpus") {
    for (const auto& c : corpus(40)) {
        CAPTURE(c.name);
        auto bb = make(c);
        auto r = trace_onehot(*bb, c.x0);
        CHECK(r.pattern == oracle::contamination(c.f, c.x0, c.m));
        CHECK(r.eval_count == c.x0.size());
    }
}

TEST_CASE("coincidental zero at the origin") {
    const auto& fx = fixture("square_at_zero");
    auto bb = make_evaluator(fx.spec());
    const std::vector<double> x0{0.0};
    FdOptions central{FdScheme::Central, 0.0, ToleranceMode::Absolute};
    CHECK(fd_sparsity(*bb, x0, central).pattern.at(0, 0) == Cell::Zero);
    CHECK(trace_onehot(*bb, x0).pattern.at(0, 0) == Cell::Dep);
    // forward differences see 2x + h, which is not zero
    CHECK(fd_sparsity(*bb, x0).pattern.at(0, 0) == Cell::Dep);
}

TEST_CASE("self cancellation and identities are false positives for NaN tracing") {
    for (const char* name : {"self_cancel", "trig_identity"}) {
        CAPTURE(name);
        const auto& fx = fixture(name);
        auto bb = make_evaluator(fx.spec());
        CHECK(trace_onehot(*bb, fx.initial_point()).pattern.at(0, 0) == Cell::Dep);
        CHECK(fd_sparsity(*bb, fx.initial_point()).pattern.at(0, 0) == Cell::Zero);
        CHECK(fx.ground_truth(fx.initial_point()).at(0, 0) == Cell::Zero);
    }
}

TEST_CASE("finite differences miss planted zeros of surrogate38") {
    const auto& fx = fixture("surrogate38");
    auto bb = make_evaluator(fx.spec());
    const auto x0 = fx.initial_point();
    auto nan = trace_onehot(*bb, x0).pattern;
    auto fd = fd_sparsity(*bb, x0);
    CHECK(fd.eval_count == 39);
    auto diff = compare(nan, fd.pattern);
    CHECK(diff.false_negatives == fx.planted_zeros);
    CHECK(nan.covers(fx.ground_truth(x0)));
}

TEST_CASE("finite-difference evaluation counts and tolerances") {
    FunctionEvaluator bb(3, 2, [](std::span<const double> x) {
        return std::vector<double>{x[0] + 1e-3 * x[1], 5.0 * x[2]};
    });
    const std::vector<double> x0{1.0, 2.0, 3.0};
    auto fwd = fd_sparsity(bb, x0);
    CHECK(fwd.eval_count == 4);
    CHECK(fwd.baseline_evaluated);
    CHECK(fwd.pattern == SparsityPattern::from_rows({"110", "001"}));
    auto central = fd_sparsity(bb, x0, {FdScheme::Central, 0.0, ToleranceMode::Absolute});
    CHECK(central.eval_count == 6);
    CHECK(central.pattern == fwd.pattern);
    auto abs = fd_sparsity(bb, x0, {FdScheme::Forward, 0.01, ToleranceMode::Absolute});
    CHECK(abs.pattern == SparsityPattern::from_rows({"100", "001"}));
    auto rel = fd_sparsity(bb, x0, {FdScheme::Forward, 0.01, ToleranceMode::Relative});
    CHECK(rel.pattern == SparsityPattern::from_rows({"100", "001"}));
    auto rel_loose = fd_sparsity(bb, x0, {FdScheme::Forward, 1e-4, ToleranceMode::Relative});
    CHECK(rel_loose.pattern == SparsityPattern::from_rows({"110", "001"}));
}

TEST_CASE("non-finite difference quotients become dependencies with a warning") {
    FunctionEvaluator bb(2, 1, [](std::span<const double> x) {
        return std::vector<double>{x[0] > 1.0 ? std::numeric_limits<double>::infinity() : x[0] + 0.0 * x[1]};
    });
    auto r = fd_sparsity(bb, std::vector<double>{1.0, 1.0});
    CHECK(r.pattern == SparsityPattern::from_rows({"10"}));
    CHECK(has_warning(r, WarningKind::NonFiniteJacobianEntry));
}

TEST_CASE("chunked tracing over-approximates one-hot with ceil(n/g) evaluations") {
    for (const auto& c : corpus(40)) {
        CAPTURE(c.name);
        auto bb = make(c);
        const auto onehot = trace_onehot(*bb, c.x0).pattern;
        const std::size_t n = c.x0.size();
        for (std::size_t g : {2u, 4u, 8u}) {
            if (g > n) continue;
            auto r = trace_chunked(*bb, c.x0, g);
            CHECK(r.pattern.covers(onehot));
            CHECK(r.eval_count == (n + g - 1) / g);
            // each block is marked as a whole
            for (std::size_t i = 0; i < c.m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    bool any = false;
                    for (std::size_t k = j / g * g; k < std::min(n, j / g * g + g); ++k) any |= onehot.at(i, k) == Cell::Dep;
                    CHECK((r.pattern.at(i, j) == Cell::Dep) == any);
                }
            }
        }
    }
    auto bb = make_evaluator(fixture("matvec").spec());
    CHECK_THROWS_AS(trace_chunked(*bb, std::vector<double>{1, 1}, 0), std::invalid_argument);
    CHECK_THROWS_AS(trace_chunked(*bb, std::vector<double>{1, 1}, 3), std::invalid_argument);
}

TEST_CASE("payload tracing equals one-hot with at most 2n-1 evaluations") {
    for (const auto& c : corpus(80)) {
        CAPTURE(c.name);
        auto bb = make(c);
        const auto onehot = trace_onehot(*bb, c.x0).pattern;
        for (bool pack : {true, false}) {
            for (bool exclude : {true, false}) {
                PayloadOptions opts;
                opts.pack_groups = pack;
                opts.exclude_known_deps = exclude;
                auto r = trace_payload(*bb, c.x0, opts);
                CHECK(r.pattern == onehot);
                CHECK(r.eval_count <= 2 * c.x0.size() - 1);
                REQUIRE(r.belief);
            }
        }
        PayloadOptions prior;
        prior.grouping = InitialGrouping::DensityPrior;
        prior.prior = {1.0, 4.0};
        auto r = trace_payload(*bb, c.x0, prior);
        CHECK(r.pattern == onehot);
    }
}

TEST_CASE("payload tracing cost on structured cases") {
    SUBCASE("all-zero") {
        const auto& fx = fixture("constant64");
        auto bb = make_evaluator(fx.spec());
        auto r = trace_payload(*bb, fx.initial_point());
        CHECK(r.eval_count == 1);
        CHECK(r.pattern.count(Cell::Dep) == 0);
        CHECK(r.belief->beta == doctest::Approx(1.0 + 4 * 64));
    }
    SUBCASE("single dependency") {
        for (std::size_t n : {1u, 2u, 5u, 16u, 33u, 64u, 100u}) {
            for (std::size_t dep = 0; dep < n; dep += std::max<std::size_t>(1, n / 7)) {
                FunctionEvaluator bb(n, 2, [dep](std::span<const double> x) {
                    return std::vector<double>{2.0 * x[dep], 1.0};
                });
                std::vector<double> x0(n, 1.0);
                auto r = trace_payload(bb, x0);
                CAPTURE(n);
                CAPTURE(dep);
                CHECK(r.pattern.count(Cell::Dep) == 1);
                CHECK(r.pattern.at(0, dep) == Cell::Dep);
                CHECK(r.eval_count <= 2 * oracle::ceil_log2(n) + 1);
            }
        }
    }
    SUBCASE("sum of all inputs resolves by shadowing") {
        const std::size_t n = 32;
        FunctionEvaluator bb(n, 1, [](std::span<const double> x) {
            double s = 0;
            for (double v : x) s += v;
            return std::vector<double>{s};
        });
        auto r = trace_payload(bb, std::vector<double>(n, 1.0));
        CHECK(r.pattern.count(Cell::Dep) == n);
        CHECK(r.eval_count <= 2 * n - 1);
    }
}

TEST_CASE("foreign NaNs are attributed to the whole seed") {
    // replaces every NaN by a freshly generated one, losing the payload
    const std::size_t n = 12;
    auto model = std::make_shared<ExpressionModel>(random_expression_model(3, 6, n));
    FunctionEvaluator bb(n, 6, [model](std::span<const double> x) {
        auto y = model->evaluate(x);
        volatile double zero = 0.0;
        for (auto& v : y) {
            if (std::isnan(v)) v = zero / zero;
        }
        return y;
    });
    const auto x0 = random_point(3, n);
    auto r = trace_payload(bb, x0);
    CHECK(payload::decode(0.0 / std::numeric_limits<double>::infinity()).kind == payload::Decoded::Kind::NotNan);
    CHECK(r.pattern.covers(model->structural_pattern()));
    CHECK(r.eval_count <= 2 * n - 1);
}

TEST_CASE("NaN-rejecting black boxes stop the trace at the first probe") {
    const auto& fx = fixture("nan_rejecting");
    for (auto method : {TraceMethod::one_hot(), TraceMethod::chunked(2), TraceMethod::payload_encoded()}) {
        CAPTURE(method.describe());
        auto bb = make_evaluator(fx.spec());
        try {
            trace(*bb, fx.initial_point(), method);
            FAIL("expected NanIncompatible");
        } catch (const NanIncompatible& e) {
            CHECK(e.probe() == 0);
        }
        CHECK(bb->eval_count() <= bb->parallelism());
    }
    auto bb = make_evaluator(fx.spec());
    CHECK_NOTHROW(fd_sparsity(*bb, fx.initial_point()));
}

TEST_CASE("overwrite heuristics need the baseline") {
    const auto& fx = fixture("nan_overwriting");
    auto bb = make_evaluator(fx.spec());
    TraceOptions opts;
    opts.evaluate_baseline = true;
    opts.inputs = fx.inputs;
    for (auto method : {TraceMethod::one_hot(), TraceMethod::payload_encoded()}) {
        auto r = trace(*bb, fx.initial_point(), method, opts);
        CHECK(r.baseline_evaluated);
        CHECK(has_warning(r, WarningKind::SuspectedOverwrite));
        CHECK(r.pattern.count(Cell::Dep) == 0);
    }
    auto quiet = trace_onehot(*bb, fx.initial_point());
    CHECK_FALSE(has_warning(quiet, WarningKind::SuspectedOverwrite));

    // an unused continuous input also trips the silent-column rule
    FunctionEvaluator unused(2, 1, [](std::span<const double> x) { return std::vector<double>{x[0]}; });
    auto r = trace_onehot(unused, std::vector<double>{1.0, 1.0}, opts);
    CHECK(has_warning(r, WarningKind::SuspectedOverwrite));
    TraceOptions flagged = opts;
    flagged.inputs = {{"a", InputKind::Continuous, 1.0}, {"mode", InputKind::Flag, 1.0}};
    CHECK_FALSE(has_warning(trace_onehot(unused, std::vector<double>{1.0, 1.0}, flagged),
                            WarningKind::SuspectedOverwrite));
    // a clean transparent black box raises nothing
    auto mv = make_evaluator(fixture("matvec").spec());
    CHECK(trace_onehot(*mv, std::vector<double>{1.0, 1.0}, opts).warnings.empty());
}

TEST_CASE("invalid baselines") {
    FunctionEvaluator nan_out(1, 1, [](std::span<const double>) {
        return std::vector<double>{std::numeric_limits<double>::quiet_NaN()};
    });
    TraceOptions opts;
    opts.evaluate_baseline = true;
    CHECK_THROWS_AS(trace_onehot(nan_out, std::vector<double>{1.0}, opts), BaselineInvalid);
    CHECK_THROWS_AS(fd_sparsity(nan_out, std::vector<double>{1.0}), BaselineInvalid);
    auto mv = make_evaluator(fixture("matvec").spec());
    CHECK_THROWS_AS(trace_onehot(*mv, std::vector<double>{std::nan(""), 1.0}), BaselineInvalid);
    CHECK_THROWS_AS(trace_payload(*mv, std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("protocol errors surface as black-box errors") {
    FunctionEvaluator short_out(2, 2, [](std::span<const double> x) { return std::vector<double>{x[0]}; });
    CHECK_THROWS_AS(trace_onehot(short_out, std::vector<double>{1.0, 1.0}), BlackBoxError);
}

TEST_CASE("parallel per-call probes give the same patterns") {
    using namespace std::chrono_literals;
    const auto& fx = fixture("surrogate38");
    std::vector<std::string> args{"surrogate38"};
    SubprocessEvaluator serial(38, 37, {NANPROP_FIXTURE_EXE, args, ProcessMode::PerCall, wire::Format::Binary}, 20000ms, 1);
    SubprocessEvaluator parallel(38, 37, {NANPROP_FIXTURE_EXE, args, ProcessMode::PerCall, wire::Format::Binary}, 20000ms, 6);
    const auto x0 = fx.initial_point();
    auto a = trace_onehot(serial, x0);
    auto b = trace_onehot(parallel, x0);
    CHECK(a.pattern == b.pattern);
    CHECK(a.eval_count == b.eval_count);
    CHECK(fd_jacobian(serial, x0, FdScheme::Forward).data() == fd_jacobian(parallel, x0, FdScheme::Forward).data());
}

TEST_CASE("method descriptions") {
    CHECK(TraceMethod::one_hot().describe() == "onehot");
    CHECK(TraceMethod::chunked(4).describe() == "chunked(g=4)");
    CHECK(TraceMethod::payload_encoded().describe() == "payload");
    CHECK(TraceMethod::finite_difference().describe() == "fd(forward, tol=0)");
    CHECK_FALSE(TraceMethod::finite_difference().uses_nan());
}
