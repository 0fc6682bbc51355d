#include "nanprop/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "nanprop/errors.hpp"
#include "nanprop/payload.hpp"

namespace nanprop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_point(const Evaluator& bb, std::span<const double> x0) {
    if (x0.size() != bb.n_inputs()) {
        throw DimensionMismatch("x0 has " + std::to_string(x0.size()) + " entries, black box takes " +
                                std::to_string(bb.n_inputs()));
    }
    for (std::size_t j = 0; j < x0.size(); ++j) {
        if (std::isnan(x0[j])) throw BaselineInvalid("x0[" + std::to_string(j) + "] is NaN");
    }
}

std::vector<double> evaluate_baseline(Evaluator& bb, std::span<const double> x0) {
    EvalResult r = bb.evaluate(x0);
    if (!r.ok()) {
        throw BaselineInvalid(std::string("baseline evaluation failed (") + to_string(r.failure().kind) +
                              "): " + r.failure().detail);
    }
    const auto& y = r.outputs();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (std::isnan(y[i])) throw BaselineInvalid("baseline output " + std::to_string(i) + " is NaN");
    }
    return y;
}

/// Evaluates contaminated probes in rounds of the evaluator's parallelism,
/// stopping at the first round containing a failure.
std::vector<std::vector<double>> run_contaminated(Evaluator& bb, const std::vector<std::vector<double>>& probes) {
    std::vector<std::vector<double>> outputs;
    outputs.reserve(probes.size());
    const std::size_t round = std::max<std::size_t>(bb.parallelism(), 1);
    for (std::size_t start = 0; start < probes.size(); start += round) {
        const std::size_t stop = std::min(probes.size(), start + round);
        std::vector<std::vector<double>> batch(probes.begin() + static_cast<std::ptrdiff_t>(start),
                                               probes.begin() + static_cast<std::ptrdiff_t>(stop));
        auto results = bb.evaluate_batch(batch);
        for (std::size_t k = 0; k < results.size(); ++k) {
            if (results[k].ok()) continue;
            const auto& f = results[k].failure();
            if (f.kind == FailureKind::ProtocolError) {
                throw BlackBoxError("protocol error on probe " + std::to_string(start + k) + ": " + f.detail);
            }
            throw NanIncompatible(start + k, std::string(to_string(f.kind)) + ": " + f.detail);
        }
        for (auto& r : results) outputs.push_back(r.outputs());
    }
    return outputs;
}

bool same_bits(double a, double b) { return to_bits(a) == to_bits(b); }

std::string join_indices(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    return os.str();
}

bool is_continuous(const TraceOptions& options, std::size_t j) {
    return j >= options.inputs.size() || options.inputs[j].kind == InputKind::Continuous;
}

/// Overwrite heuristics for one contaminated evaluation of `cols`.
struct OverwriteScan {
    std::vector<std::size_t> silent_inputs;
    std::vector<std::string> changed_without_nan;

    void inspect(const std::vector<double>& baseline, const std::vector<double>& y,
                 std::span<const std::size_t> cols, const TraceOptions& options) {
        bool any_nan = false;
        bool identical = true;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (std::isnan(y[i])) {
                any_nan = true;
                identical = false;
            } else if (!same_bits(y[i], baseline[i])) {
                identical = false;
                changed_without_nan.push_back("output " + std::to_string(i) + " under inputs {" +
                                              join_indices({cols.begin(), cols.end()}) + "}");
            }
        }
        if (!any_nan && identical) {
            for (std::size_t j : cols) {
                if (is_continuous(options, j)) silent_inputs.push_back(j);
            }
        }
    }

    void emit(std::vector<TraceWarning>& warnings) const {
        if (!silent_inputs.empty()) {
            warnings.push_back({WarningKind::SuspectedOverwrite,
                                "continuous inputs {" + join_indices(silent_inputs) +
                                    "} left every output bitwise unchanged; either they are unused or the "
                                    "black box overwrites NaN"});
        }
        if (!changed_without_nan.empty()) {
            std::string detail = "outputs changed without becoming NaN (NaN overwritten or a branch taken):";
            for (const auto& s : changed_without_nan) detail += " " + s + ";";
            warnings.push_back({WarningKind::SuspectedOverwrite, detail});
        }
    }
};

TraceReport trace_blocks(Evaluator& bb, std::span<const double> x0, std::size_t chunk,
                         const TraceOptions& options, TraceMethod method) {
    check_point(bb, x0);
    const std::size_t n = bb.n_inputs();
    const std::size_t m = bb.n_outputs();
    if (chunk < 1 || (n > 0 && chunk > n)) {
        throw std::invalid_argument("chunk size " + std::to_string(chunk) + " outside [1, " + std::to_string(n) + "]");
    }
    const std::size_t start_count = bb.eval_count();
    TraceReport report;
    report.method = method;

    std::vector<double> baseline;
    if (options.evaluate_baseline) {
        baseline = evaluate_baseline(bb, x0);
        report.baseline_evaluated = true;
    }

    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        std::vector<std::size_t> cols;
        for (std::size_t j = begin; j < std::min(n, begin + chunk); ++j) cols.push_back(j);
        blocks.push_back(std::move(cols));
    }
    std::vector<std::vector<double>> probes;
    probes.reserve(blocks.size());
    for (const auto& cols : blocks) {
        std::vector<double> x(x0.begin(), x0.end());
        for (std::size_t j : cols) x[j] = kNaN;
        probes.push_back(std::move(x));
    }
    const auto outputs = run_contaminated(bb, probes);

    report.pattern = SparsityPattern(m, n);
    OverwriteScan scan;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& y = outputs[b];
        for (std::size_t i = 0; i < m; ++i) {
            if (!std::isnan(y[i])) continue;
            for (std::size_t j : blocks[b]) report.pattern.set(i, j, Cell::Dep);
        }
        if (report.baseline_evaluated) scan.inspect(baseline, y, blocks[b], options);
    }
    scan.emit(report.warnings);
    report.eval_count = bb.eval_count() - start_count;
    return report;
}

}  // namespace

const char* to_string(FdScheme scheme) { return scheme == FdScheme::Forward ? "forward" : "central"; }

const char* to_string(TraceMethod::Kind kind) {
    switch (kind) {
        case TraceMethod::Kind::OneHot: return "onehot";
        case TraceMethod::Kind::Chunked: return "chunked";
        case TraceMethod::Kind::Payload: return "payload";
        case TraceMethod::Kind::FiniteDifference: return "fd";
    }
    return "unknown";
}

const char* to_string(WarningKind kind) {
    switch (kind) {
        case WarningKind::SuspectedOverwrite: return "suspected-overwrite";
        case WarningKind::NonFiniteJacobianEntry: return "non-finite-jacobian-entry";
        case WarningKind::FallbackToFiniteDifference: return "fallback-to-fd";
        case WarningKind::ContinuousBranchingRisk: return "continuous-branching-risk";
    }
    return "unknown";
}

std::string TraceMethod::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == Kind::Chunked) os << "(g=" << chunk << ")";
    if (kind == Kind::FiniteDifference) {
        os << "(" << to_string(fd.scheme) << ", tol=" << fd.tol
           << (fd.tolerance == ToleranceMode::Relative ? " relative" : "") << ")";
    }
    return os.str();
}

TraceReport trace_onehot(Evaluator& bb, std::span<const double> x0, const TraceOptions& options) {
    return trace_blocks(bb, x0, 1, options, TraceMethod::one_hot());
}

TraceReport trace_chunked(Evaluator& bb, std::span<const double> x0, std::size_t chunk, const TraceOptions& options) {
    return trace_blocks(bb, x0, chunk, options, TraceMethod::chunked(chunk));
}

namespace {

// Node of the fixed halving tree over columns [begin, end).
struct Group {
    std::size_t begin;
    std::size_t end;

    std::size_t size() const { return end - begin; }
};

class PayloadTracer {
public:
    PayloadTracer(Evaluator& bb, std::span<const double> x0, const PayloadOptions& payload,
                  const TraceOptions& options)
        : bb_(bb), x0_(x0), payload_(payload), options_(options),
          m_(bb.n_outputs()), n_(bb.n_inputs()),
          state_(m_, n_, Cell::Unknown), col_unknown_(n_, m_), belief_(payload.prior) {}

    TraceReport run() {
        check_point(bb_, x0_);
        if (n_ > payload::kCapacity) {
            throw PayloadCapacityExceeded(std::to_string(n_) + " inputs exceed the 2^51 payload capacity");
        }
        const std::size_t start_count = bb_.eval_count();
        TraceReport report;
        report.method = TraceMethod::payload_encoded(payload_);
        if (options_.evaluate_baseline) {
            baseline_ = evaluate_baseline(bb_, x0_);
            report.baseline_evaluated = true;
        }
        if (m_ == 0) std::fill(col_unknown_.begin(), col_unknown_.end(), 0);

        std::deque<Group> pending;
        for (const Group& g : initial_groups()) {
            if (owns_unknown(g)) pending.push_back(g);
        }
        while (!pending.empty()) pending = step(pending);

        scan_.emit(report.warnings);
        report.pattern = state_;
        report.eval_count = bb_.eval_count() - start_count;
        report.belief = belief_;
        return report;
    }

private:
    struct Member {
        Group group;
        std::vector<std::size_t> seed;
        std::vector<std::size_t> rows;  // rows with Unknown cells among the seed
    };

    std::vector<Group> initial_groups() const {
        std::size_t size = n_;
        if (payload_.grouping == InitialGrouping::DensityPrior && n_ > 0) {
            const double mean = payload_.prior.mean();
            size = static_cast<std::size_t>(std::ceil(1.0 / mean));
            size = std::clamp<std::size_t>(size, std::min<std::size_t>(2, n_), n_);
        }
        std::vector<Group> groups;
        for (std::size_t b = 0; b < n_; b += size) groups.push_back({b, std::min(n_, b + size)});
        return groups;
    }

    bool owns_unknown(const Group& g) const {
        for (std::size_t j = g.begin; j < g.end; ++j) {
            if (col_unknown_[j] > 0) return true;
        }
        return false;
    }

    std::vector<std::size_t> seed_of(const Group& g) const {
        if (g.size() == 1) return {g.begin};
        std::vector<std::size_t> live;
        for (std::size_t j = g.begin; j < g.end; ++j) {
            if (col_unknown_[j] > 0) live.push_back(j);
        }
        if (!payload_.exclude_known_deps) return live;
        // A column already known to feed a row that is still being resolved
        // would mask that row; hold it back for a smaller group.
        std::vector<char> pending_rows(m_, 0);
        for (std::size_t j : live) {
            for (std::size_t i = 0; i < m_; ++i) {
                if (state_.at(i, j) == Cell::Unknown) pending_rows[i] = 1;
            }
        }
        std::vector<std::size_t> seed;
        for (std::size_t j : live) {
            bool shadows = false;
            for (std::size_t i = 0; i < m_ && !shadows; ++i) {
                shadows = pending_rows[i] && state_.at(i, j) == Cell::Dep;
            }
            if (!shadows) seed.push_back(j);
        }
        return seed.empty() ? live : seed;
    }

    std::vector<std::size_t> unknown_rows(const std::vector<std::size_t>& seed) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j : seed) {
                if (state_.at(i, j) == Cell::Unknown) {
                    rows.push_back(i);
                    break;
                }
            }
        }
        return rows;
    }

    std::vector<std::size_t> touched_rows(const std::vector<std::size_t>& seed) const {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j : seed) {
                if (state_.at(i, j) != Cell::Zero) {
                    rows.push_back(i);
                    break;
                }
            }
        }
        return rows;
    }

    void resolve(std::size_t i, std::size_t j, Cell value) {
        if (state_.at(i, j) != Cell::Unknown) return;
        state_.set(i, j, value);
        --col_unknown_[j];
        (value == Cell::Dep ? new_deps_ : new_zeros_) += 1;
    }

    std::deque<Group> step(std::deque<Group>& pending) {
        // Members of one evaluation never share a row that one of them is
        // still resolving, so each member's rows see only its own seed.
        std::vector<Member> batch;
        std::deque<Group> rest;
        std::vector<char> batch_pending(m_, 0);
        std::vector<char> batch_touched(m_, 0);
        for (const Group& g : pending) {
            Member member{g, seed_of(g), {}};
            member.rows = unknown_rows(member.seed);
            const auto touched = touched_rows(member.seed);
            bool fits = batch.empty();
            if (!fits && payload_.pack_groups) {
                fits = std::none_of(member.rows.begin(), member.rows.end(), [&](std::size_t i) { return batch_touched[i]; }) &&
                       std::none_of(touched.begin(), touched.end(), [&](std::size_t i) { return batch_pending[i]; });
            }
            if (!fits) {
                rest.push_back(g);
                continue;
            }
            for (std::size_t i : member.rows) batch_pending[i] = 1;
            for (std::size_t i : touched) batch_touched[i] = 1;
            batch.push_back(std::move(member));
        }

        std::vector<double> x(x0_.begin(), x0_.end());
        std::vector<int> owner(n_, -1);
        for (std::size_t k = 0; k < batch.size(); ++k) {
            for (std::size_t j : batch[k].seed) {
                x[j] = payload::encode(j);
                owner[j] = static_cast<int>(k);
            }
        }
        const auto y = run_contaminated(bb_, {x}).front();

        new_deps_ = 0;
        new_zeros_ = 0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const Member& member = batch[k];
            for (std::size_t i : member.rows) {
                const auto decoded = payload::decode(y[i]);
                if (decoded.kind == payload::Decoded::Kind::NotNan) {
                    for (std::size_t j : member.seed) resolve(i, j, Cell::Zero);
                    if (!baseline_.empty() && !same_bits(y[i], baseline_[i])) {
                        scan_.changed_without_nan.push_back("output " + std::to_string(i) + " under inputs {" +
                                                            join_indices(member.seed) + "}");
                    }
                } else if (decoded.kind == payload::Decoded::Kind::Recognized && decoded.index < n_ &&
                           owner[decoded.index] == static_cast<int>(k)) {
                    // Shadowing: only the propagated column is identified.
                    resolve(i, static_cast<std::size_t>(decoded.index), Cell::Dep);
                } else {
                    // Foreign or misattributed NaN: every seeded column may be responsible.
                    for (std::size_t j : member.seed) resolve(i, j, Cell::Dep);
                }
            }
        }
        belief_.observe(new_deps_, new_zeros_);

        std::deque<Group> next;
        for (const Group& g : rest) {
            if (owns_unknown(g)) next.push_back(g);
        }
        for (const Member& member : batch) {
            const Group& g = member.group;
            if (g.size() < 2) continue;
            const std::size_t mid = g.begin + (g.size() + 1) / 2;
            for (Group child : {Group{g.begin, mid}, Group{mid, g.end}}) {
                if (owns_unknown(child)) next.push_back(child);
            }
        }
        return next;
    }

    Evaluator& bb_;
    std::span<const double> x0_;
    PayloadOptions payload_;
    const TraceOptions& options_;
    std::size_t m_;
    std::size_t n_;
    SparsityPattern state_;
    std::vector<std::size_t> col_unknown_;
    DensityBelief belief_;
    std::vector<double> baseline_;
    OverwriteScan scan_;
    std::size_t new_deps_ = 0;
    std::size_t new_zeros_ = 0;
};

}  // namespace

TraceReport trace_payload(Evaluator& bb, std::span<const double> x0, const PayloadOptions& payload,
                          const TraceOptions& options) {
    return PayloadTracer(bb, x0, payload, options).run();
}

Matrix fd_jacobian(Evaluator& bb, std::span<const double> x0, FdScheme scheme) {
    check_point(bb, x0);
    const std::size_t n = bb.n_inputs();
    const std::size_t m = bb.n_outputs();
    std::vector<double> base;
    if (scheme == FdScheme::Forward) base = evaluate_baseline(bb, x0);

    std::vector<std::vector<double>> probes;
    for (std::size_t j = 0; j < n; ++j) {
        const double h = fd_step(x0[j]);
        std::vector<double> x(x0.begin(), x0.end());
        x[j] = x0[j] + h;
        probes.push_back(x);
        if (scheme == FdScheme::Central) {
            x[j] = x0[j] - h;
            probes.push_back(std::move(x));
        }
    }
    std::vector<std::vector<double>> outputs;
    const std::size_t round = std::max<std::size_t>(bb.parallelism(), 1);
    for (std::size_t start = 0; start < probes.size(); start += round) {
        const std::size_t stop = std::min(probes.size(), start + round);
        std::vector<std::vector<double>> batch(probes.begin() + static_cast<std::ptrdiff_t>(start),
                                               probes.begin() + static_cast<std::ptrdiff_t>(stop));
        for (auto& r : bb.evaluate_batch(batch)) {
            if (!r.ok()) {
                throw BlackBoxError(std::string("finite-difference probe failed (") + to_string(r.failure().kind) +
                                    "): " + r.failure().detail);
            }
            outputs.push_back(r.outputs());
        }
    }

    Matrix jac(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = fd_step(x0[j]);
        for (std::size_t i = 0; i < m; ++i) {
            if (scheme == FdScheme::Forward) {
                jac(i, j) = (outputs[j][i] - base[i]) / h;
            } else {
                jac(i, j) = (outputs[2 * j][i] - outputs[2 * j + 1][i]) / (2.0 * h);
            }
        }
    }
    return jac;
}

TraceReport fd_sparsity(Evaluator& bb, std::span<const double> x0, const FdOptions& fd, const TraceOptions& options) {
    check_point(bb, x0);
    const std::size_t start_count = bb.eval_count();
    TraceReport report;
    report.method = TraceMethod::finite_difference(fd);
    if (fd.scheme == FdScheme::Central && options.evaluate_baseline) evaluate_baseline(bb, x0);
    report.baseline_evaluated = fd.scheme == FdScheme::Forward || options.evaluate_baseline;

    const Matrix jac = fd_jacobian(bb, x0, fd.scheme);
    report.pattern = SparsityPattern(jac.rows(), jac.cols());
    std::vector<std::string> non_finite;
    for (std::size_t i = 0; i < jac.rows(); ++i) {
        double scale = 0.0;
        for (std::size_t j = 0; j < jac.cols(); ++j) {
            if (std::isfinite(jac(i, j))) scale = std::max(scale, std::fabs(jac(i, j)));
        }
        const double threshold = fd.tolerance == ToleranceMode::Relative ? fd.tol * scale : fd.tol;
        for (std::size_t j = 0; j < jac.cols(); ++j) {
            const double v = jac(i, j);
            if (!std::isfinite(v)) {
                report.pattern.set(i, j, Cell::Dep);
                non_finite.push_back("(" + std::to_string(i) + "," + std::to_string(j) + ")");
            } else if (std::fabs(v) > threshold) {
                report.pattern.set(i, j, Cell::Dep);
            }
        }
    }
    if (!non_finite.empty()) {
        std::string detail = "non-finite difference quotients marked as dependencies:";
        for (const auto& c : non_finite) detail += " " + c;
        report.warnings.push_back({WarningKind::NonFiniteJacobianEntry, detail});
    }
    report.eval_count = bb.eval_count() - start_count;
    return report;
}

TraceReport trace(Evaluator& bb, std::span<const double> x0, const TraceMethod& method, const TraceOptions& options) {
    switch (method.kind) {
        case TraceMethod::Kind::OneHot: return trace_onehot(bb, x0, options);
        case TraceMethod::Kind::Chunked: return trace_chunked(bb, x0, method.chunk, options);
        case TraceMethod::Kind::Payload: return trace_payload(bb, x0, method.payload, options);
        case TraceMethod::Kind::FiniteDifference: return fd_sparsity(bb, x0, method.fd, options);
    }
    throw std::logic_error("unhandled trace method");
}

}  // namespace nanprop
