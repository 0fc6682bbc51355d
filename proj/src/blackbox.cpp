#include "nanprop/blackbox.hpp"

#include <cmath>

#include "nanprop/errors.hpp"
#include "nanprop/fixtures.hpp"
#include "nanprop/subprocess.hpp"

namespace nanprop {

const char* to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::RaisedError: return "raised-error";
        case FailureKind::Timeout: return "timeout";
        case FailureKind::ProtocolError: return "protocol-error";
    }
    return "unknown";
}

void BlackBoxSpec::validate() const {
    if (inputs.size() != n_inputs) {
        throw ConfigError("black box declares " + std::to_string(n_inputs) + " inputs but lists " +
                          std::to_string(inputs.size()));
    }
    if (n_outputs < 1) throw ConfigError("black box must have at least one output");
    for (const auto& in : inputs) {
        if (!std::isfinite(in.initial)) {
            throw ConfigError("initial value of '" + in.name + "' is not finite");
        }
        if (in.kind == InputKind::Flag && std::trunc(in.initial) != in.initial) {
            throw ConfigError("flag input '" + in.name + "' has a non-integral initial value");
        }
    }
    if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
    if (workers < 1) throw ConfigError("workers must be at least 1");
}

std::vector<double> BlackBoxSpec::initial_point() const {
    std::vector<double> x;
    x.reserve(inputs.size());
    for (const auto& in : inputs) x.push_back(in.initial);
    return x;
}

std::vector<std::size_t> BlackBoxSpec::flag_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        if (inputs[j].kind == InputKind::Flag) out.push_back(j);
    }
    return out;
}

EvalResult Evaluator::checked(EvalResult result) const {
    if (result.ok() && result.outputs().size() != n_outputs_) {
        return EvalFailure{FailureKind::ProtocolError,
                           "expected " + std::to_string(n_outputs_) + " outputs, got " +
                               std::to_string(result.outputs().size())};
    }
    return result;
}

EvalResult Evaluator::evaluate(std::span<const double> x) {
    if (x.size() != n_inputs_) {
        throw DimensionMismatch("evaluate: expected " + std::to_string(n_inputs_) + " inputs, got " +
                                std::to_string(x.size()));
    }
    if (hook_) hook_(x);
    ++eval_count_;
    return checked(do_evaluate(x));
}

std::vector<EvalResult> Evaluator::evaluate_batch(const std::vector<std::vector<double>>& xs) {
    for (const auto& x : xs) {
        if (x.size() != n_inputs_) {
            throw DimensionMismatch("evaluate_batch: expected " + std::to_string(n_inputs_) +
                                    " inputs, got " + std::to_string(x.size()));
        }
        if (hook_) hook_(x);
    }
    eval_count_ += xs.size();
    auto results = do_evaluate_batch(xs);
    for (auto& r : results) r = checked(std::move(r));
    return results;
}

std::vector<EvalResult> Evaluator::do_evaluate_batch(const std::vector<std::vector<double>>& xs) {
    std::vector<EvalResult> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(do_evaluate(x));
    return out;
}

FunctionEvaluator::FunctionEvaluator(std::size_t n_inputs, std::size_t n_outputs, BlackBoxFunction fn)
    : Evaluator(n_inputs, n_outputs), fn_(std::move(fn)) {}

EvalResult FunctionEvaluator::do_evaluate(std::span<const double> x) {
    try {
        return fn_(x);
    } catch (const DomainError& e) {
        return EvalFailure{FailureKind::RaisedError, e.what()};
    } catch (const std::exception& e) {
        return EvalFailure{FailureKind::RaisedError, e.what()};
    }
}

std::unique_ptr<Evaluator> make_evaluator(const BlackBoxSpec& spec) {
    spec.validate();
    if (const auto* local = std::get_if<InProcessInvocation>(&spec.invocation)) {
        const Fixture& fx = fixture(local->fixture);
        if (fx.n_inputs() != spec.n_inputs || fx.n_outputs != spec.n_outputs) {
            throw ConfigError("fixture '" + fx.name + "' is " + std::to_string(fx.n_outputs) + "x" +
                              std::to_string(fx.n_inputs()) + ", spec declares " +
                              std::to_string(spec.n_outputs) + "x" + std::to_string(spec.n_inputs));
        }
        return std::make_unique<FunctionEvaluator>(spec.n_inputs, spec.n_outputs, fx.function);
    }
    const auto& remote = std::get<SubprocessInvocation>(spec.invocation);
    return std::make_unique<SubprocessEvaluator>(spec.n_inputs, spec.n_outputs, remote, spec.timeout,
                                                 spec.workers);
}

}  // namespace nanprop
