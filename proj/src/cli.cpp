#include "nanprop/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nanprop/branching.hpp"
#include "nanprop/coloring.hpp"
#include "nanprop/errors.hpp"
#include "nanprop/job.hpp"
#include "nanprop/render.hpp"
#include "nanprop/tracer.hpp"

namespace nanprop {

using nlohmann::json;

namespace {

struct MethodFlags {
    std::string method;
    std::size_t chunk = 0;
    std::string scheme;
    double tol = -1.0;
    bool relative = false;
    std::size_t workers = 0;
    std::string x0;

    void add_to(CLI::App* cmd, bool with_method) {
        if (with_method) {
            cmd->add_option("--method", method, "onehot, chunked, payload or fd");
            cmd->add_option("--chunk", chunk, "chunk size for --method chunked");
            cmd->add_option("--tol", tol, "finite-difference threshold");
            cmd->add_flag("--relative", relative, "threshold relative to the row maximum");
        }
        cmd->add_option("--scheme", scheme, "forward or central");
        cmd->add_option("--workers", workers, "concurrent per-call probes");
        cmd->add_option("--x0", x0, "comma-separated evaluation point");
    }

    void apply(JobConfig& job) const {
        if (!method.empty()) {
            job.method.kind = parse_method_kind(method);
            if (job.method.kind == TraceMethod::Kind::Chunked && chunk == 0 && job.method.chunk < 2) job.method.chunk = 2;
        }
        if (chunk > 0) job.method.chunk = chunk;
        if (!scheme.empty()) job.method.fd.scheme = parse_scheme(scheme);
        if (tol >= 0.0) job.method.fd.tol = tol;
        if (relative) job.method.fd.tolerance = ToleranceMode::Relative;
        if (workers > 0) job.spec.workers = workers;
    }
};

std::vector<double> parse_vector(const std::string& text) {
    std::string cleaned = text;
    for (char& c : cleaned) {
        if (c == ',') c = ' ';
    }
    std::istringstream is(cleaned);
    std::vector<double> v;
    std::string tok;
    while (is >> tok) {
        std::size_t used = 0;
        double d;
        try {
            d = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + tok + "'");
        }
        if (used != tok.size()) throw ConfigError("not a number: '" + tok + "'");
        v.push_back(d);
    }
    return v;
}

std::vector<double> start_point(const JobConfig& job, const std::string& x0) {
    if (x0.empty()) return job.spec.initial_point();
    auto v = parse_vector(x0);
    if (v.size() != job.spec.n_inputs) {
        throw DimensionMismatch("--x0 has " + std::to_string(v.size()) + " values, black box takes " +
                                std::to_string(job.spec.n_inputs));
    }
    return v;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
}

std::vector<std::string> grid_rows(const SparsityPattern& p) {
    std::vector<std::string> rows;
    std::istringstream is(render_grid(p));
    for (std::string line; std::getline(is, line);) rows.push_back(line);
    return rows;
}

json warnings_json(const std::vector<TraceWarning>& warnings) {
    json arr = json::array();
    for (const auto& w : warnings) arr.push_back({{"kind", to_string(w.kind)}, {"detail", w.detail}});
    return arr;
}

void print_warnings(std::ostream& out, const std::vector<TraceWarning>& warnings) {
    for (const auto& w : warnings) out << "warning [" << to_string(w.kind) << "]: " << w.detail << '\n';
}

std::string flags_text(const BlackBoxSpec& spec, std::span<const double> x) {
    std::ostringstream os;
    os << '(';
    bool first = true;
    for (std::size_t j : spec.flag_indices()) {
        os << (first ? "" : ", ") << spec.inputs[j].name << '=' << x[j];
        first = false;
    }
    os << ')';
    return os.str();
}

int cmd_trace(const std::string& config, const MethodFlags& flags, const std::string& output, bool no_baseline,
              bool as_json, std::ostream& out) {
    JobConfig job = read_job_file(config);
    flags.apply(job);
    if (!output.empty()) job.pattern_output = output;
    const auto x0 = start_point(job, flags.x0);
    auto bb = make_evaluator(job.spec);
    TraceOptions opts;
    opts.evaluate_baseline = !no_baseline;
    opts.inputs = job.spec.inputs;
    const TraceReport report = trace(*bb, x0, job.method, opts);
    if (job.pattern_output) write_pattern_file(*job.pattern_output, report.pattern);

    if (as_json) {
        json j{{"method", report.method.describe()},
               {"eval_count", report.eval_count},
               {"baseline_evaluated", report.baseline_evaluated},
               {"rows", report.pattern.rows()},
               {"cols", report.pattern.cols()},
               {"dependencies", report.pattern.count(Cell::Dep)},
               {"pattern", grid_rows(report.pattern)},
               {"warnings", warnings_json(report.warnings)}};
        if (job.pattern_output) j["output"] = job.pattern_output->string();
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << "method: " << report.method.describe() << '\n'
        << "evaluations: " << report.eval_count << (report.baseline_evaluated ? " (including baseline)" : "") << '\n'
        << "pattern: " << report.pattern.rows() << 'x' << report.pattern.cols() << ", "
        << report.pattern.count(Cell::Dep) << " dependencies\n";
    print_warnings(out, report.warnings);
    out << render_grid(report.pattern);
    if (job.pattern_output) out << "wrote " << job.pattern_output->string() << '\n';
    return kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b, bool as_json, std::ostream& out) {
    const SparsityPattern reference = read_pattern_file(a);
    const SparsityPattern candidate = read_pattern_file(b);
    const DiffReport diff = compare(reference, candidate);
    if (as_json) {
        auto cells = [](const std::vector<CellIndex>& v) {
            json arr = json::array();
            for (const auto& c : v) arr.push_back({c.row, c.col});
            return arr;
        };
        out << json{{"false_negatives", diff.false_negatives.size()},
                    {"extra_dependencies", diff.extra_deps.size()},
                    {"false_negative_cells", cells(diff.false_negatives)},
                    {"extra_dependency_cells", cells(diff.extra_deps)}}
                   .dump(2)
            << '\n';
        return kExitOk;
    }
    out << diff.false_negatives.size() << " false negatives\n"
        << diff.extra_deps.size() << " extra dependencies\n";
    for (const auto& c : diff.false_negatives) out << "  missed (" << c.row << ", " << c.col << ")\n";
    for (const auto& c : diff.extra_deps) out << "  extra (" << c.row << ", " << c.col << ")\n";
    out << render_comparison(reference, candidate);
    return kExitOk;
}

int cmd_color(const std::string& pattern_file, const std::string& output, bool as_json, std::ostream& out) {
    const SparsityPattern p = read_pattern_file(pattern_file);
    const Coloring c = color_columns(gramian_adjacency(p, UnknownAs::Dep));
    if (!output.empty()) write_file(output, to_text(c));
    const bool has_ratio = c.n_colors > 0;
    if (as_json) {
        json j{{"n", c.n}, {"n_colors", c.n_colors}, {"color_of", c.color_of}};
        j["speedup"] = has_ratio ? json(speedup(c.n, c.n_colors)) : json(nullptr);
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << "columns: " << c.n << '\n' << "colors: " << c.n_colors << '\n';
    if (has_ratio) {
        out << "speedup: " << c.n << '/' << c.n_colors << " = " << std::setprecision(6)
            << speedup(c.n, c.n_colors) << '\n';
    }
    const auto classes = c.classes();
    for (std::size_t k = 0; k < classes.size(); ++k) {
        out << "color " << k << ':';
        for (std::size_t j : classes[k]) out << ' ' << j;
        out << '\n';
    }
    if (!output.empty()) out << "wrote " << output << '\n';
    return kExitOk;
}

int cmd_jacobian(const std::string& config, const std::string& pattern_file, const MethodFlags& flags,
                 const std::string& output, bool dense, bool as_json, std::ostream& out) {
    JobConfig job = read_job_file(config);
    flags.apply(job);
    if (!output.empty()) job.jacobian_output = output;
    const auto x0 = start_point(job, flags.x0);
    auto bb = make_evaluator(job.spec);
    const FdScheme scheme = flags.scheme.empty() ? FdScheme::Forward : parse_scheme(flags.scheme);

    JacobianFile file;
    std::size_t evals = 0;
    if (dense) {
        file = to_file(dense_jacobian(*bb, x0, scheme));
        evals = bb->eval_count();
    } else {
        const SparsityPattern p = read_pattern_file(pattern_file);
        const Coloring c = color_columns(gramian_adjacency(p, UnknownAs::Dep));
        const CompressedJacobian jac = compressed_jacobian(*bb, x0, p, c, scheme);
        file = to_file(jac);
        evals = jac.eval_count;
    }
    const std::string text = to_text(file);
    if (job.jacobian_output) write_file(*job.jacobian_output, text);

    if (as_json) {
        json j{{"eval_count", evals}, {"n_colors", file.n_colors}, {"entries", file.entries.size()},
               {"scheme", to_string(scheme)}, {"dense", dense}};
        if (job.jacobian_output) j["output"] = job.jacobian_output->string();
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << "evaluations: " << evals << '\n'
        << "colors: " << file.n_colors << '\n'
        << "entries: " << file.entries.size() << '\n';
    if (job.jacobian_output) {
        out << "wrote " << job.jacobian_output->string() << '\n';
    } else {
        out << text;
    }
    return kExitOk;
}

int cmd_render(const std::string& pattern_file, const std::string& format, const std::string& output,
               std::ostream& out) {
    const SparsityPattern p = read_pattern_file(pattern_file);
    std::string text;
    if (format == "grid") {
        text = render_grid(p);
    } else if (format == "svg") {
        text = render_svg(p);
    } else {
        throw ConfigError("render format must be 'grid' or 'svg'");
    }
    if (output.empty()) {
        out << text;
    } else {
        write_file(output, text);
        out << "wrote " << output << '\n';
    }
    return kExitOk;
}

std::vector<std::vector<double>> read_stream(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input stream " + path);
    std::vector<std::vector<double>> points;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto v = parse_vector(line);
        if (v.empty()) continue;
        if (v.size() != n) {
            throw DimensionMismatch(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(n) +
                                    " values, got " + std::to_string(v.size()));
        }
        points.push_back(std::move(v));
    }
    return points;
}

int cmd_session(const std::string& config, const std::string& stream, const MethodFlags& flags,
                const std::string& dir_flag, bool as_json, std::ostream& out) {
    JobConfig job = read_job_file(config);
    flags.apply(job);
    if (!dir_flag.empty()) job.session_dir = dir_flag;
    auto points = read_stream(stream, job.spec.n_inputs);

    SessionOptions options;
    options.method = job.method;
    std::optional<TraceSession> session;
    json events = json::array();
    std::size_t retraced = 0;
    std::size_t evaluations = 0;
    std::size_t first = 0;
    auto note = [&](std::size_t index, std::span<const double> x, std::size_t evals) {
        ++retraced;
        evaluations += evals;
        events.push_back({{"point", index}, {"flags", flags_text(job.spec, x)}, {"eval_count", evals}});
        if (!as_json) {
            out << "retraced at point " << index << ' ' << flags_text(job.spec, x) << ": " << evals
                << " evaluations\n";
        }
    };

    const bool resume = job.session_dir && std::filesystem::exists(*job.session_dir / "manifest.json");
    if (resume) {
        session.emplace(TraceSession::load(*job.session_dir, job.spec, nullptr, options));
        if (!as_json) out << "resumed session with " << session->history().size() << " flag tuples\n";
    } else {
        const auto x0 = points.empty() ? start_point(job, flags.x0) : points.front();
        session.emplace(job.spec, x0, options);
        note(0, x0, session->evaluator().eval_count());
        first = points.empty() ? 0 : 1;
    }
    for (std::size_t k = first; k < points.size(); ++k) {
        const ObserveResult r = session->observe(points[k]);
        if (r.retraced) note(k, points[k], r.eval_count);
    }
    if (job.session_dir) session->save(*job.session_dir);

    const SparsityPattern& acc = session->accumulated();
    const Coloring& c = session->coloring();
    if (as_json) {
        json j{{"retraced", retraced},
               {"eval_count", evaluations},
               {"events", events},
               {"flag_tuples", session->seen_flag_tuples().size()},
               {"method", session->method().describe()},
               {"n_colors", c.n_colors},
               {"pattern", grid_rows(acc)},
               {"warnings", warnings_json(session->warnings())}};
        if (job.session_dir) j["session_dir"] = job.session_dir->string();
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << "retraced events: " << retraced << '\n'
        << "evaluations: " << evaluations << '\n'
        << "flag tuples: " << session->seen_flag_tuples().size() << '\n'
        << "method: " << session->method().describe() << '\n'
        << "colors: " << c.n_colors << '\n';
    print_warnings(out, session->warnings());
    out << render_grid(acc);
    if (job.session_dir) out << "saved session to " << job.session_dir->string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparsity detection for black-box functions by NaN propagation", "nanprop"};
    app.require_subcommand(1);
    bool as_json = false;
    MethodFlags flags;
    std::string config, output, second, format = "grid", dir;
    bool no_baseline = false, dense = false;

    auto* trace_cmd = app.add_subcommand("trace", "trace the sparsity pattern of a black box");
    trace_cmd->add_option("config", config, "job config (JSON)")->required();
    trace_cmd->add_option("-o,--output", output, "pattern file to write");
    trace_cmd->add_flag("--no-baseline", no_baseline, "skip the baseline evaluation");
    flags.add_to(trace_cmd, true);

    auto* compare_cmd = app.add_subcommand("compare", "compare a candidate pattern against a reference");
    compare_cmd->add_option("reference", config, "reference pattern file")->required();
    compare_cmd->add_option("candidate", second, "candidate pattern file")->required();

    auto* color_cmd = app.add_subcommand("color", "color the column intersection graph of a pattern");
    color_cmd->add_option("pattern", config, "pattern file")->required();
    color_cmd->add_option("-o,--output", output, "coloring file to write");

    auto* jac_cmd = app.add_subcommand("jacobian", "compressed finite-difference Jacobian");
    jac_cmd->add_option("config", config, "job config (JSON)")->required();
    jac_cmd->add_option("pattern", second, "pattern file");
    jac_cmd->add_option("-o,--output", output, "jacobian file to write");
    jac_cmd->add_flag("--dense", dense, "one evaluation per column instead of compression");
    flags.add_to(jac_cmd, false);

    auto* render_cmd = app.add_subcommand("render", "draw a pattern as a text grid or SVG");
    render_cmd->add_option("pattern", config, "pattern file")->required();
    render_cmd->add_option("--format", format, "grid or svg");
    render_cmd->add_option("-o,--output", output, "file to write");

    auto* session_cmd = app.add_subcommand("session", "replay input vectors through a retracing session");
    session_cmd->add_option("config", config, "job config (JSON)")->required();
    session_cmd->add_option("stream", second, "input vectors, one per line")->required();
    session_cmd->add_option("--dir", dir, "session directory to resume from and save to");
    flags.add_to(session_cmd, true);

    for (auto* cmd : {trace_cmd, compare_cmd, color_cmd, jac_cmd, session_cmd}) {
        cmd->add_flag("--json", as_json, "machine-readable summary");
    }

    std::vector<std::string> argv_store{"nanprop"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*trace_cmd) return cmd_trace(config, flags, output, no_baseline, as_json, out);
        if (*compare_cmd) return cmd_compare(config, second, as_json, out);
        if (*color_cmd) return cmd_color(config, output, as_json, out);
        if (*jac_cmd) {
            if (!dense && second.empty()) throw ConfigError("jacobian needs a pattern file unless --dense is given");
            return cmd_jacobian(config, second, flags, output, dense, as_json, out);
        }
        if (*render_cmd) return cmd_render(config, format, output, out);
        if (*session_cmd) return cmd_session(config, second, flags, dir, as_json, out);
    } catch (const NanIncompatible& e) {
        if (as_json) {
            out << json{{"error", "NAN_INCOMPATIBLE"}, {"probe", e.probe()}, {"detail", e.what()}}.dump(2) << '\n';
        } else {
            out << "NAN_INCOMPATIBLE probe=" << e.probe() << '\n';
        }
        err << "error: " << e.what() << "\nhint: rerun with --method fd\n";
        return kExitNanIncompatible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

}  // namespace nanprop
