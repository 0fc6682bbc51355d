#include "nanprop/branching.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nanprop/errors.hpp"
#include "nanprop/payload.hpp"
#include "nanprop/wire.hpp"

namespace nanprop {

using nlohmann::json;

FlagTuple flag_tuple(const BlackBoxSpec& spec, std::span<const double> x) {
    if (x.size() != spec.n_inputs) {
        throw DimensionMismatch("point has " + std::to_string(x.size()) + " entries, spec declares " +
                                std::to_string(spec.n_inputs));
    }
    FlagTuple tuple;
    for (std::size_t j : spec.flag_indices()) {
        if (!std::isfinite(x[j]) || std::trunc(x[j]) != x[j]) {
            throw ConfigError("flag input " + std::to_string(j) + " is not integral");
        }
        // collapse -0 onto 0
        tuple.push_back(to_bits(x[j] == 0.0 ? 0.0 : x[j]));
    }
    return tuple;
}

std::string spec_fingerprint(const BlackBoxSpec& spec) {
    std::ostringstream os;
    os << spec.n_inputs << '|' << spec.n_outputs << '|';
    for (const auto& in : spec.inputs) {
        os << in.name << ':' << (in.kind == InputKind::Flag ? 'f' : 'c') << ';';
    }
    if (const auto* p = std::get_if<InProcessInvocation>(&spec.invocation)) {
        os << "fixture:" << p->fixture;
    } else {
        const auto& s = std::get<SubprocessInvocation>(spec.invocation);
        os << "command:" << s.command;
        for (const auto& a : s.args) os << '\x1f' << a;
        os << '|' << (s.mode == ProcessMode::Persistent) << (s.format == wire::Format::Hex);
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

json method_to_json(const TraceMethod& m) {
    json j{{"kind", to_string(m.kind)}};
    switch (m.kind) {
        case TraceMethod::Kind::Chunked: j["chunk"] = m.chunk; break;
        case TraceMethod::Kind::FiniteDifference:
            j["scheme"] = to_string(m.fd.scheme);
            j["tol"] = m.fd.tol;
            j["relative"] = m.fd.tolerance == ToleranceMode::Relative;
            break;
        case TraceMethod::Kind::Payload:
            j["density_prior"] = m.payload.grouping == InitialGrouping::DensityPrior;
            j["prior"] = {m.payload.prior.alpha, m.payload.prior.beta};
            j["pack_groups"] = m.payload.pack_groups;
            j["exclude_known_deps"] = m.payload.exclude_known_deps;
            break;
        case TraceMethod::Kind::OneHot: break;
    }
    return j;
}

TraceMethod method_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "onehot") return TraceMethod::one_hot();
    if (kind == "chunked") return TraceMethod::chunked(j.at("chunk").get<std::size_t>());
    if (kind == "fd") {
        FdOptions fd;
        fd.scheme = j.at("scheme").get<std::string>() == "central" ? FdScheme::Central : FdScheme::Forward;
        fd.tol = j.at("tol").get<double>();
        fd.tolerance = j.at("relative").get<bool>() ? ToleranceMode::Relative : ToleranceMode::Absolute;
        return TraceMethod::finite_difference(fd);
    }
    if (kind == "payload") {
        PayloadOptions p;
        p.grouping = j.at("density_prior").get<bool>() ? InitialGrouping::DensityPrior : InitialGrouping::AllColumns;
        p.prior.alpha = j.at("prior").at(0).get<double>();
        p.prior.beta = j.at("prior").at(1).get<double>();
        p.pack_groups = j.at("pack_groups").get<bool>();
        p.exclude_known_deps = j.at("exclude_known_deps").get<bool>();
        return TraceMethod::payload_encoded(p);
    }
    throw ParseError("unknown trace method '" + kind + "' in manifest");
}

std::vector<std::string> hex_values(std::span<const double> v) {
    std::vector<std::string> out;
    for (double d : v) out.push_back(wire::hex_bits(d));
    return out;
}

const char* kRiskNote =
    "inputs declared continuous are assumed not to switch code branches; a branch on a continuous value "
    "can change the pattern without triggering a retrace";

}  // namespace

TraceSession::TraceSession(BlackBoxSpec spec, std::unique_ptr<Evaluator> bb, SessionOptions options)
    : spec_(std::move(spec)), bb_(std::move(bb)), options_(options), method_(options.method) {
    spec_.validate();
    if (!bb_) bb_ = make_evaluator(spec_);
    if (bb_->n_inputs() != spec_.n_inputs || bb_->n_outputs() != spec_.n_outputs) {
        throw DimensionMismatch("evaluator does not match the session spec");
    }
    accumulated_ = SparsityPattern(spec_.n_outputs, spec_.n_inputs);
    coloring_ = color_columns(gramian_adjacency(accumulated_));
    for (const auto& in : spec_.inputs) {
        if (in.kind == InputKind::Continuous) {
            warnings_.push_back({WarningKind::ContinuousBranchingRisk, kRiskNote});
            break;
        }
    }
}

TraceSession::TraceSession(BlackBoxSpec spec, std::span<const double> x0, SessionOptions options)
    : TraceSession(std::move(spec), nullptr, x0, options) {}

TraceSession::TraceSession(BlackBoxSpec spec, std::unique_ptr<Evaluator> bb, std::span<const double> x0,
                           SessionOptions options)
    : TraceSession(std::move(spec), std::move(bb), options) {
    FlagTuple flags = flag_tuple(spec_, x0);
    TraceReport report;
    try {
        report = run_trace(x0, method_);
    } catch (const NanIncompatible& e) {
        if (!options_.fallback_to_fd || !method_.uses_nan()) throw;
        warnings_.push_back({WarningKind::FallbackToFiniteDifference,
                             std::string("black box rejected NaN inputs (") + e.what() +
                                 "); tracing with finite differences instead"});
        method_ = TraceMethod::finite_difference(options_.fallback);
        report = run_trace(x0, method_);
    }
    record({std::move(flags), {x0.begin(), x0.end()}, report.pattern, report.eval_count, method_});
}

TraceReport TraceSession::run_trace(std::span<const double> x, const TraceMethod& method) {
    TraceOptions opts;
    opts.evaluate_baseline = options_.evaluate_baseline;
    opts.inputs = spec_.inputs;
    TraceReport report = trace(*bb_, x, method, opts);
    for (auto& w : report.warnings) warnings_.push_back(std::move(w));
    return report;
}

void TraceSession::record(SessionEntry entry) {
    accumulated_ = unite(accumulated_, entry.pattern);
    coloring_ = color_columns(gramian_adjacency(accumulated_));
    seen_.insert(entry.flags);
    history_.push_back(std::move(entry));
}

ObserveResult TraceSession::observe(std::span<const double> x) {
    FlagTuple flags = flag_tuple(spec_, x);
    if (seen_.count(flags)) return {false, 0};
    const std::size_t before = bb_->eval_count();
    const auto saved_warnings = warnings_;
    TraceReport report;
    try {
        report = run_trace(x, method_);
    } catch (...) {
        warnings_ = saved_warnings;
        throw;
    }
    record({std::move(flags), {x.begin(), x.end()}, report.pattern, report.eval_count, method_});
    return {true, bb_->eval_count() - before};
}

void TraceSession::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "nanprop-session v1";
    manifest["spec_hash"] = spec_fingerprint(spec_);
    manifest["method"] = method_to_json(method_);
    manifest["retrace_baseline"] = "observed-point";
    manifest["history"] = json::array();
    for (std::size_t k = 0; k < history_.size(); ++k) {
        const auto& e = history_[k];
        const std::string file = "pattern-" + std::to_string(k) + ".txt";
        write_pattern_file(dir / file, e.pattern);
        std::vector<std::string> flags;
        for (auto bits : e.flags) flags.push_back(wire::hex_bits(from_bits(bits)));
        manifest["history"].push_back({{"flags", flags},
                                       {"point", hex_values(e.point)},
                                       {"pattern_file", file},
                                       {"eval_count", e.eval_count},
                                       {"method", method_to_json(e.method)}});
    }
    manifest["warnings"] = json::array();
    for (const auto& w : warnings_) manifest["warnings"].push_back({{"kind", to_string(w.kind)}, {"detail", w.detail}});
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("cannot write session manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

TraceSession TraceSession::load(const std::filesystem::path& dir, BlackBoxSpec spec, std::unique_ptr<Evaluator> bb,
                                SessionOptions options) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ConfigError("no session manifest in " + dir.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("session manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "nanprop-session v1") throw ParseError("unrecognised session manifest");
    if (manifest.at("spec_hash").get<std::string>() != spec_fingerprint(spec)) {
        throw ConfigError("session in " + dir.string() + " was recorded for a different black box");
    }
    TraceSession session(std::move(spec), std::move(bb), options);
    try {
        session.method_ = method_from_json(manifest.at("method"));
        session.warnings_.clear();
        for (const auto& w : manifest.at("warnings")) {
            const std::string kind = w.at("kind").get<std::string>();
            for (auto k : {WarningKind::SuspectedOverwrite, WarningKind::NonFiniteJacobianEntry,
                           WarningKind::FallbackToFiniteDifference, WarningKind::ContinuousBranchingRisk}) {
                if (kind == to_string(k)) session.warnings_.push_back({k, w.at("detail").get<std::string>()});
            }
        }
        for (const auto& h : manifest.at("history")) {
            SessionEntry e;
            for (const auto& f : h.at("flags")) e.flags.push_back(to_bits(wire::parse_hex_bits(f.get<std::string>())));
            for (const auto& v : h.at("point")) e.point.push_back(wire::parse_hex_bits(v.get<std::string>()));
            e.pattern = read_pattern_file(dir / h.at("pattern_file").get<std::string>());
            e.eval_count = h.at("eval_count").get<std::size_t>();
            e.method = method_from_json(h.at("method"));
            if (e.pattern.rows() != session.spec_.n_outputs || e.pattern.cols() != session.spec_.n_inputs) {
                throw ParseError("session pattern has the wrong shape");
            }
            session.record(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("session manifest: ") + e.what());
    } catch (const WireError& e) {
        throw ParseError(std::string("session manifest: ") + e.what());
    }
    return session;
}

}  // namespace nanprop
