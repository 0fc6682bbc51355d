#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "nanprop/blackbox.hpp"
#include "nanprop/tracer.hpp"

namespace nanprop {

struct JobConfig {
    BlackBoxSpec spec;
    TraceMethod method;
    std::optional<std::filesystem::path> pattern_output;
    std::optional<std::filesystem::path> jacobian_output;
    std::optional<std::filesystem::path> session_dir;
};

/// Parses a job document. Unknown keys are rejected at every level. A
/// fixture job may omit inputs and n_outputs; they default to the fixture's.
/// NANPROP_TIMEOUT_SECS, when set, overrides the configured timeout.
JobConfig parse_job(std::string_view text);
JobConfig read_job_file(const std::filesystem::path& path);

/// Parses "onehot", "chunked", "payload" or "fd".
TraceMethod::Kind parse_method_kind(std::string_view name);
FdScheme parse_scheme(std::string_view name);

}  // namespace nanprop
