#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nanprop/blackbox.hpp"
#include "nanprop/finite_difference.hpp"
#include "nanprop/matrix.hpp"
#include "nanprop/pattern.hpp"

namespace nanprop {

/// Beta(alpha, beta) belief over the probability that a cell is a dependency.
struct DensityBelief {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
    void observe(std::size_t deps, std::size_t zeros) {
        alpha += static_cast<double>(deps);
        beta += static_cast<double>(zeros);
    }
};

enum class ToleranceMode {
    Absolute,  // |J_ij| > tol
    Relative,  // |J_ij| > tol * max_k |J_ik|
};

struct FdOptions {
    FdScheme scheme = FdScheme::Forward;
    double tol = 0.0;
    ToleranceMode tolerance = ToleranceMode::Absolute;
};

enum class InitialGrouping {
    AllColumns,    // one group holding every column
    DensityPrior,  // consecutive groups of ceil(1 / prior mean), clamped to [2, n]
};

struct PayloadOptions {
    InitialGrouping grouping = InitialGrouping::AllColumns;
    DensityBelief prior;
    /// Share one evaluation between groups that cannot disturb each other's rows.
    bool pack_groups = true;
    /// Leave columns already known to be dependencies of a pending row out of a group's seed.
    bool exclude_known_deps = true;
};

struct TraceMethod {
    enum class Kind { OneHot, Chunked, Payload, FiniteDifference };

    Kind kind = Kind::OneHot;
    std::size_t chunk = 1;
    FdOptions fd;
    PayloadOptions payload;

    static TraceMethod one_hot() { return {}; }
    static TraceMethod chunked(std::size_t g) { return {Kind::Chunked, g, {}, {}}; }
    static TraceMethod payload_encoded(PayloadOptions options = {}) { return {Kind::Payload, 1, {}, options}; }
    static TraceMethod finite_difference(FdOptions options = {}) {
        return {Kind::FiniteDifference, 1, options, {}};
    }

    bool uses_nan() const { return kind != Kind::FiniteDifference; }
    std::string describe() const;
};

const char* to_string(TraceMethod::Kind kind);

enum class WarningKind {
    SuspectedOverwrite,
    NonFiniteJacobianEntry,
    FallbackToFiniteDifference,
    ContinuousBranchingRisk,
};

const char* to_string(WarningKind kind);

struct TraceWarning {
    WarningKind kind;
    std::string detail;
};

struct TraceReport {
    SparsityPattern pattern;
    /// Black-box evaluations consumed, including the baseline when requested.
    std::size_t eval_count = 0;
    std::vector<TraceWarning> warnings;
    TraceMethod method;
    bool baseline_evaluated = false;
    /// Final density belief (payload tracing only).
    std::optional<DensityBelief> belief;
};

struct TraceOptions {
    /// Evaluate x0 first: rejects NaN/failing baselines and enables the
    /// overwrite heuristics. Adds one evaluation.
    bool evaluate_baseline = false;
    /// Input declarations; used to judge whether an all-zero column is suspicious.
    std::vector<InputSpec> inputs;
};

TraceReport trace_onehot(Evaluator& bb, std::span<const double> x0, const TraceOptions& options = {});
TraceReport trace_chunked(Evaluator& bb, std::span<const double> x0, std::size_t chunk,
                          const TraceOptions& options = {});
TraceReport trace_payload(Evaluator& bb, std::span<const double> x0, const PayloadOptions& payload = {},
                          const TraceOptions& options = {});
TraceReport fd_sparsity(Evaluator& bb, std::span<const double> x0, const FdOptions& fd = {},
                        const TraceOptions& options = {});

/// Dispatches on `method.kind`.
TraceReport trace(Evaluator& bb, std::span<const double> x0, const TraceMethod& method,
                  const TraceOptions& options = {});

/// Finite-difference Jacobian, one column per input. Forward uses n+1
/// evaluations, central 2n. Non-finite quotients are kept as computed.
Matrix fd_jacobian(Evaluator& bb, std::span<const double> x0, FdScheme scheme);

}  // namespace nanprop
