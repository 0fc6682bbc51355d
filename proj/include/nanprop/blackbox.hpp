#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nanprop/wire.hpp"

namespace nanprop {

enum class InputKind { Continuous, Flag };

struct InputSpec {
    std::string name;
    InputKind kind = InputKind::Continuous;
    double initial = 0.0;
};

struct InProcessInvocation {
    std::string fixture;
};

enum class ProcessMode { PerCall, Persistent };

struct SubprocessInvocation {
    std::string command;
    std::vector<std::string> args;
    ProcessMode mode = ProcessMode::PerCall;
    wire::Format format = wire::Format::Binary;
};

using Invocation = std::variant<InProcessInvocation, SubprocessInvocation>;

inline constexpr std::chrono::milliseconds kDefaultTimeout{60'000};

struct BlackBoxSpec {
    std::size_t n_inputs = 0;
    std::size_t n_outputs = 0;
    std::vector<InputSpec> inputs;
    Invocation invocation;
    std::chrono::milliseconds timeout = kDefaultTimeout;
    /// Concurrent per-call probes; only honored by per-call subprocesses.
    std::size_t workers = 1;

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;
    std::vector<double> initial_point() const;
    std::vector<std::size_t> flag_indices() const;
};

enum class FailureKind { RaisedError, Timeout, ProtocolError };

const char* to_string(FailureKind kind);

struct EvalFailure {
    FailureKind kind = FailureKind::RaisedError;
    std::string detail;
};

/// Either the outputs of one evaluation or a classified failure.
class EvalResult {
public:
    EvalResult(std::vector<double> outputs) : value_(std::move(outputs)) {}
    EvalResult(EvalFailure failure) : value_(std::move(failure)) {}

    bool ok() const noexcept { return std::holds_alternative<std::vector<double>>(value_); }
    const std::vector<double>& outputs() const { return std::get<std::vector<double>>(value_); }
    const EvalFailure& failure() const { return std::get<EvalFailure>(value_); }

private:
    std::variant<std::vector<double>, EvalFailure> value_;
};

/// Thrown by in-process black boxes to signal a domain error.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform evaluation handle. Counts every evaluation it performs.
class Evaluator {
public:
    using Hook = std::function<void(std::span<const double>)>;

    Evaluator(std::size_t n_inputs, std::size_t n_outputs)
        : n_inputs_(n_inputs), n_outputs_(n_outputs) {}
    virtual ~Evaluator() = default;

    Evaluator(const Evaluator&) = delete;
    Evaluator& operator=(const Evaluator&) = delete;

    std::size_t n_inputs() const noexcept { return n_inputs_; }
    std::size_t n_outputs() const noexcept { return n_outputs_; }

    EvalResult evaluate(std::span<const double> x);

    /// Evaluates independent points; results are returned in input order.
    std::vector<EvalResult> evaluate_batch(const std::vector<std::vector<double>>& xs);

    /// Largest batch the evaluator can run concurrently.
    virtual std::size_t parallelism() const { return 1; }

    std::size_t eval_count() const noexcept { return eval_count_; }
    void set_hook(Hook hook) { hook_ = std::move(hook); }

protected:
    virtual EvalResult do_evaluate(std::span<const double> x) = 0;
    virtual std::vector<EvalResult> do_evaluate_batch(const std::vector<std::vector<double>>& xs);

private:
    EvalResult checked(EvalResult result) const;

    std::size_t n_inputs_;
    std::size_t n_outputs_;
    std::size_t eval_count_ = 0;
    Hook hook_;
};

using BlackBoxFunction = std::function<std::vector<double>(std::span<const double>)>;

/// In-process black box backed by a callable. DomainError (or any other
/// exception) from the callable becomes RaisedError.
class FunctionEvaluator : public Evaluator {
public:
    FunctionEvaluator(std::size_t n_inputs, std::size_t n_outputs, BlackBoxFunction fn);

protected:
    EvalResult do_evaluate(std::span<const double> x) override;

private:
    BlackBoxFunction fn_;
};

/// Evaluator for `spec.invocation`; fixtures are resolved by name.
std::unique_ptr<Evaluator> make_evaluator(const BlackBoxSpec& spec);

}  // namespace nanprop
