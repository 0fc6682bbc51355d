#pragma once

#include <chrono>
#include <memory>
#include <mutex>

#include "nanprop/blackbox.hpp"

namespace nanprop {

/// Black box run as a child process speaking NANPROP/1 over stdin/stdout.
/// Per-call mode spawns one process per evaluation; persistent mode keeps a
/// single process and respawns it after any failure.
class SubprocessEvaluator : public Evaluator {
public:
    SubprocessEvaluator(std::size_t n_inputs, std::size_t n_outputs, SubprocessInvocation invocation,
                        std::chrono::milliseconds timeout, std::size_t workers = 1);
    ~SubprocessEvaluator() override;

    std::size_t parallelism() const override;

    static constexpr std::chrono::milliseconds kPollInterval{20};

protected:
    EvalResult do_evaluate(std::span<const double> x) override;
    std::vector<EvalResult> do_evaluate_batch(const std::vector<std::vector<double>>& xs) override;

private:
    struct Child;

    EvalResult run_per_call(std::span<const double> x) const;
    EvalResult run_persistent(std::span<const double> x);
    EvalResult check_outputs(wire::Response response) const;

    SubprocessInvocation invocation_;
    std::chrono::milliseconds timeout_;
    std::size_t workers_;
    std::unique_ptr<Child> persistent_;
};

}  // namespace nanprop
