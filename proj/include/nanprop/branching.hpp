#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nanprop/blackbox.hpp"
#include "nanprop/coloring.hpp"
#include "nanprop/pattern.hpp"
#include "nanprop/tracer.hpp"

namespace nanprop {

/// Bit patterns of the flag inputs of one point, in flag-index order.
using FlagTuple = std::vector<std::uint64_t>;

/// Throws ConfigError when a flag value is not integral.
FlagTuple flag_tuple(const BlackBoxSpec& spec, std::span<const double> x);

/// FNV-1a over the structural fields of a spec (not timeout or workers).
std::string spec_fingerprint(const BlackBoxSpec& spec);

struct SessionOptions {
    TraceMethod method = TraceMethod::one_hot();
    /// Switch to finite differences when the black box rejects NaN at init.
    bool fallback_to_fd = true;
    FdOptions fallback;
    bool evaluate_baseline = true;
};

struct SessionEntry {
    FlagTuple flags;
    std::vector<double> point;
    SparsityPattern pattern;
    std::size_t eval_count = 0;
    TraceMethod method;
};

struct ObserveResult {
    bool retraced = false;
    std::size_t eval_count = 0;
};

/// Greedy union of sparsity patterns over every flag tuple seen so far.
class TraceSession {
public:
    TraceSession(BlackBoxSpec spec, std::span<const double> x0, SessionOptions options = {});
    TraceSession(BlackBoxSpec spec, std::unique_ptr<Evaluator> bb, std::span<const double> x0,
                 SessionOptions options = {});

    /// Retraces at `x` when its flag tuple is new. A failed retrace throws and
    /// leaves the session unchanged.
    ObserveResult observe(std::span<const double> x);

    const BlackBoxSpec& spec() const noexcept { return spec_; }
    const SparsityPattern& accumulated() const noexcept { return accumulated_; }
    const Coloring& coloring() const noexcept { return coloring_; }
    const std::set<FlagTuple>& seen_flag_tuples() const noexcept { return seen_; }
    const std::vector<SessionEntry>& history() const noexcept { return history_; }
    const std::vector<TraceWarning>& warnings() const noexcept { return warnings_; }
    const TraceMethod& method() const noexcept { return method_; }
    Evaluator& evaluator() noexcept { return *bb_; }

    /// Writes manifest.json plus one pattern file per history entry.
    void save(const std::filesystem::path& dir) const;
    /// Resumes a saved session; throws ConfigError when the spec differs.
    static TraceSession load(const std::filesystem::path& dir, BlackBoxSpec spec,
                             std::unique_ptr<Evaluator> bb = nullptr, SessionOptions options = {});

private:
    TraceSession(BlackBoxSpec spec, std::unique_ptr<Evaluator> bb, SessionOptions options);

    TraceReport run_trace(std::span<const double> x, const TraceMethod& method);
    void record(SessionEntry entry);

    BlackBoxSpec spec_;
    std::unique_ptr<Evaluator> bb_;
    SessionOptions options_;
    TraceMethod method_;
    SparsityPattern accumulated_;
    Coloring coloring_;
    std::set<FlagTuple> seen_;
    std::vector<SessionEntry> history_;
    std::vector<TraceWarning> warnings_;
};

}  // namespace nanprop
