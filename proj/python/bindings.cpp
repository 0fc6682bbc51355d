#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nanprop/coloring.hpp"
#include "nanprop/errors.hpp"
#include "nanprop/fixtures.hpp"
#include "nanprop/payload.hpp"
#include "nanprop/tracer.hpp"

namespace py = pybind11;
using namespace nanprop;

namespace {

using PyFunction = std::function<std::vector<double>(std::vector<double>)>;

FunctionEvaluator wrap(PyFunction f, std::size_t n_in, std::size_t n_out) {
    return FunctionEvaluator(n_in, n_out, [f = std::move(f)](std::span<const double> x) {
        return f(std::vector<double>(x.begin(), x.end()));
    });
}

TraceMethod method_from(const std::string& kind, std::size_t chunk, const std::string& scheme, double tol,
                        bool relative) {
    if (kind == "onehot") return TraceMethod::one_hot();
    if (kind == "chunked") return TraceMethod::chunked(chunk);
    if (kind == "payload") return TraceMethod::payload_encoded();
    if (kind == "fd") {
        FdOptions fd;
        if (scheme == "central") {
            fd.scheme = FdScheme::Central;
        } else if (scheme != "forward") {
            throw ConfigError("unknown scheme '" + scheme + "'");
        }
        fd.tol = tol;
        fd.tolerance = relative ? ToleranceMode::Relative : ToleranceMode::Absolute;
        return TraceMethod::finite_difference(fd);
    }
    throw ConfigError("unknown method '" + kind + "'");
}

std::vector<std::string> rows_of(const SparsityPattern& p) {
    std::vector<std::string> out(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (Cell c : p.row(i)) out[i] += cell_char(c);
    }
    return out;
}

py::dict report_dict(const TraceReport& r) {
    py::dict d;
    d["pattern"] = r.pattern;
    d["eval_count"] = r.eval_count;
    d["method"] = r.method.describe();
    py::list warnings;
    for (const auto& w : r.warnings) warnings.append(py::make_tuple(to_string(w.kind), w.detail));
    d["warnings"] = warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "NaN-propagation sparsity tracing";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base);
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<NanIncompatible>(m, "NanIncompatible", base);
    py::register_exception<BaselineInvalid>(m, "BaselineInvalid", base);
    py::register_exception<BlackBoxError>(m, "BlackBoxError", base);
    py::register_exception<DecompressionAmbiguity>(m, "DecompressionAmbiguity", base);

    py::class_<SparsityPattern>(m, "Pattern")
        .def(py::init([](const std::vector<std::string>& rows) { return SparsityPattern::from_rows(rows); }),
             py::arg("rows"))
        .def_property_readonly("shape", [](const SparsityPattern& p) { return py::make_tuple(p.rows(), p.cols()); })
        .def("rows", &rows_of)
        .def("at", [](const SparsityPattern& p, std::size_t i, std::size_t j) { return cell_char(p.at(i, j)); })
        .def("covers", &SparsityPattern::covers)
        .def("nnz", [](const SparsityPattern& p) { return p.count(Cell::Dep); })
        .def("union", &unite)
        .def("to_text", [](const SparsityPattern& p) { return to_text(p); })
        .def_static("from_text", [](const std::string& s) { return parse_pattern(s); })
        .def("__eq__", [](const SparsityPattern& a, const SparsityPattern& b) { return a == b; })
        .def("__repr__", [](const SparsityPattern& p) {
            return "Pattern(" + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) + ")";
        });

    m.def(
        "trace",
        [](PyFunction f, const std::vector<double>& x0, std::size_t n_outputs, const std::string& method,
           std::size_t chunk, const std::string& scheme, double tol, bool relative, bool baseline) {
            auto bb = wrap(std::move(f), x0.size(), n_outputs);
            TraceOptions options;
            options.evaluate_baseline = baseline;
            return report_dict(trace(bb, x0, method_from(method, chunk, scheme, tol, relative), options));
        },
        py::arg("f"), py::arg("x0"), py::arg("n_outputs"), py::arg("method") = "onehot", py::arg("chunk") = 2,
        py::arg("scheme") = "forward", py::arg("tol") = 0.0, py::arg("relative") = false,
        py::arg("baseline") = false);

    m.def(
        "trace_fixture",
        [](const std::string& name, const std::string& method, std::size_t chunk) {
            const Fixture& fx = fixture(name);
            FunctionEvaluator bb(fx.n_inputs(), fx.n_outputs, fx.function);
            return report_dict(trace(bb, fx.initial_point(), method_from(method, chunk, "forward", 0.0, false)));
        },
        py::arg("name"), py::arg("method") = "onehot", py::arg("chunk") = 2);

    m.def("fixture_names", [] {
        std::vector<std::string> out;
        for (const auto& fx : fixtures()) out.push_back(fx.name);
        return out;
    });

    m.def("compare", [](const SparsityPattern& reference, const SparsityPattern& candidate) {
        const auto d = compare(reference, candidate);
        auto cells = [](const std::vector<CellIndex>& v) {
            py::list out;
            for (const auto& c : v) out.append(py::make_tuple(c.row, c.col));
            return out;
        };
        py::dict r;
        r["false_negatives"] = cells(d.false_negatives);
        r["extra_deps"] = cells(d.extra_deps);
        return r;
    });

    m.def(
        "color",
        [](const SparsityPattern& p) {
            const Coloring c = color_columns(gramian_adjacency(p));
            return py::make_tuple(c.color_of, c.n_colors);
        },
        py::arg("pattern"));
    m.def("speedup", &speedup, py::arg("n_inputs"), py::arg("n_colors"));

    m.def(
        "compressed_jacobian",
        [](PyFunction f, const std::vector<double>& x0, const SparsityPattern& p) {
            auto bb = wrap(std::move(f), x0.size(), p.rows());
            const auto jac = compressed_jacobian(bb, x0, p, color_columns(gramian_adjacency(p)));
            py::dict values;
            for (const auto& [cell, v] : jac.values) values[py::make_tuple(cell.row, cell.col)] = v;
            return py::make_tuple(values, jac.eval_count);
        },
        py::arg("f"), py::arg("x0"), py::arg("pattern"));

    m.def("payload_encode", &payload::encode, py::arg("index"));
    m.def("payload_decode", [](double v) -> py::object {
        const auto d = payload::decode(v);
        if (d.kind == payload::Decoded::Kind::Recognized) return py::int_(d.index);
        if (d.kind == payload::Decoded::Kind::Foreign) return py::str("foreign");
        return py::none();
    });
}
