#include "nanprop/job.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nanprop/errors.hpp"
#include "nanprop/fixtures.hpp"

namespace nanprop {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!ok.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("'" + std::string(key) + "' in " + where + " is missing or has the wrong type");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

std::chrono::milliseconds seconds_to_ms(double secs, const std::string& where) {
    if (!(secs > 0.0) || !std::isfinite(secs)) throw ConfigError(where + " must be a positive number of seconds");
    return std::chrono::milliseconds(static_cast<long long>(secs * 1000.0 + 0.5));
}

TraceMethod parse_method(const json& j) {
    const std::string where = "method";
    only_keys(j, where, {"kind", "chunk", "scheme", "tol", "relative", "density_prior", "prior", "pack_groups",
                         "exclude_known_deps"});
    TraceMethod m;
    m.kind = parse_method_kind(get_or<std::string>(j, "kind", "onehot", where));
    m.chunk = get_or<std::size_t>(j, "chunk", m.kind == TraceMethod::Kind::Chunked ? 2 : 1, where);
    m.fd.scheme = parse_scheme(get_or<std::string>(j, "scheme", "forward", where));
    m.fd.tol = get_or<double>(j, "tol", 0.0, where);
    m.fd.tolerance = get_or<bool>(j, "relative", false, where) ? ToleranceMode::Relative : ToleranceMode::Absolute;
    if (get_or<bool>(j, "density_prior", false, where)) m.payload.grouping = InitialGrouping::DensityPrior;
    if (j.contains("prior")) {
        const auto prior = get<std::vector<double>>(j, "prior", where);
        if (prior.size() != 2 || !(prior[0] > 0) || !(prior[1] > 0)) {
            throw ConfigError("'prior' must be two positive numbers [alpha, beta]");
        }
        m.payload.prior = {prior[0], prior[1]};
    }
    m.payload.pack_groups = get_or<bool>(j, "pack_groups", true, where);
    m.payload.exclude_known_deps = get_or<bool>(j, "exclude_known_deps", true, where);
    if (m.chunk < 1) throw ConfigError("'chunk' must be at least 1");
    if (m.fd.tol < 0) throw ConfigError("'tol' must be non-negative");
    return m;
}

InputSpec parse_input(const json& j, std::size_t index) {
    const std::string where = "inputs[" + std::to_string(index) + "]";
    only_keys(j, where, {"name", "kind", "initial"});
    InputSpec in;
    in.name = get_or<std::string>(j, "name", "x" + std::to_string(index), where);
    const std::string kind = get_or<std::string>(j, "kind", "continuous", where);
    if (kind == "flag") {
        in.kind = InputKind::Flag;
    } else if (kind != "continuous") {
        throw ConfigError("input kind must be 'continuous' or 'flag', got '" + kind + "'");
    }
    in.initial = get<double>(j, "initial", where);
    return in;
}

}  // namespace

TraceMethod::Kind parse_method_kind(std::string_view name) {
    if (name == "onehot") return TraceMethod::Kind::OneHot;
    if (name == "chunked") return TraceMethod::Kind::Chunked;
    if (name == "payload") return TraceMethod::Kind::Payload;
    if (name == "fd") return TraceMethod::Kind::FiniteDifference;
    throw ConfigError("unknown method '" + std::string(name) + "' (onehot, chunked, payload, fd)");
}

FdScheme parse_scheme(std::string_view name) {
    if (name == "forward") return FdScheme::Forward;
    if (name == "central") return FdScheme::Central;
    throw ConfigError("unknown finite-difference scheme '" + std::string(name) + "'");
}

JobConfig parse_job(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("job config is not valid JSON: ") + e.what());
    }
    only_keys(doc, "job config", {"blackbox", "inputs", "n_outputs", "method", "output"});
    if (!doc.contains("blackbox")) throw ConfigError("job config needs a 'blackbox' section");

    JobConfig job;
    const json& bb = doc.at("blackbox");
    only_keys(bb, "blackbox", {"fixture", "command", "args", "mode", "format", "timeout_secs", "workers"});
    const Fixture* fx = nullptr;
    if (bb.contains("fixture") == bb.contains("command")) {
        throw ConfigError("blackbox needs exactly one of 'fixture' or 'command'");
    }
    if (bb.contains("fixture")) {
        for (const char* key : {"args", "mode", "format"}) {
            if (bb.contains(key)) throw ConfigError(std::string("'") + key + "' only applies to a command black box");
        }
        fx = &fixture(get<std::string>(bb, "fixture", "blackbox"));
        job.spec = fx->spec();
    } else {
        SubprocessInvocation inv;
        inv.command = get<std::string>(bb, "command", "blackbox");
        inv.args = get_or<std::vector<std::string>>(bb, "args", {}, "blackbox");
        const std::string mode = get_or<std::string>(bb, "mode", "per-call", "blackbox");
        if (mode == "persistent") {
            inv.mode = ProcessMode::Persistent;
        } else if (mode != "per-call") {
            throw ConfigError("mode must be 'per-call' or 'persistent'");
        }
        const std::string format = get_or<std::string>(bb, "format", "binary", "blackbox");
        if (format == "hex") {
            inv.format = wire::Format::Hex;
        } else if (format != "binary") {
            throw ConfigError("format must be 'binary' or 'hex'");
        }
        job.spec.invocation = inv;
    }
    if (bb.contains("timeout_secs")) {
        job.spec.timeout = seconds_to_ms(get<double>(bb, "timeout_secs", "blackbox"), "timeout_secs");
    }
    job.spec.workers = get_or<std::size_t>(bb, "workers", 1, "blackbox");

    if (doc.contains("inputs")) {
        if (!doc.at("inputs").is_array()) throw ConfigError("'inputs' must be an array");
        job.spec.inputs.clear();
        std::size_t k = 0;
        for (const auto& in : doc.at("inputs")) job.spec.inputs.push_back(parse_input(in, k++));
        job.spec.n_inputs = job.spec.inputs.size();
    } else if (!fx) {
        throw ConfigError("a command black box needs an 'inputs' list");
    }
    if (doc.contains("n_outputs")) {
        job.spec.n_outputs = get<std::size_t>(doc, "n_outputs", "job config");
    } else if (!fx) {
        throw ConfigError("a command black box needs 'n_outputs'");
    }
    if (fx && (job.spec.n_inputs != fx->n_inputs() || job.spec.n_outputs != fx->n_outputs)) {
        throw ConfigError("dimensions do not match fixture '" + fx->name + "'");
    }

    if (doc.contains("method")) job.method = parse_method(doc.at("method"));

    if (doc.contains("output")) {
        const json& out = doc.at("output");
        only_keys(out, "output", {"pattern", "jacobian", "session_dir"});
        if (out.contains("pattern")) job.pattern_output = get<std::string>(out, "pattern", "output");
        if (out.contains("jacobian")) job.jacobian_output = get<std::string>(out, "jacobian", "output");
        if (out.contains("session_dir")) job.session_dir = get<std::string>(out, "session_dir", "output");
    }

    if (const char* env = std::getenv("NANPROP_TIMEOUT_SECS"); env && *env) {
        char* end = nullptr;
        const double secs = std::strtod(env, &end);
        if (end == env || *end != '\0') throw ConfigError("NANPROP_TIMEOUT_SECS is not a number");
        job.spec.timeout = seconds_to_ms(secs, "NANPROP_TIMEOUT_SECS");
    }
    job.spec.validate();
    return job;
}

JobConfig read_job_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open job config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_job(ss.str());
}

}  // namespace nanprop
