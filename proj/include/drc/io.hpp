#pragma once

#include "drc/problem.hpp"
#include "drc/report.hpp"
#include "drc/scenarios.hpp"

#include <string>
#include <string_view>

namespace drc {

/// JSON problem file:
///   {"name"?, "dim_u", "dim_x",
///    "loss": {"type": "bilinear", "A", "b"?, "c"?, "d"?}
///          | {"type": "norm_affine", "F", "G", "h"?},
///    "input_set": {"type": "box", "lower", "upper"} | {"type": "simplex", "dim"}
///               | {"type": "product", "blocks": [box | simplex, ...]},
///    "support": {"lower", "upper"},
///    "constraints": [{"q", "g": {"type": "identity" | "power" | "indicator_geq", "p"?, "threshold"?},
///                     "kind": {"two_sided": {"center", "radius"}}
///                           | {"upper_bound": {"level", "negated"?}}}]}
/// Matrices are arrays of rows. Throws SyntaxError with line and column for
/// malformed text, SchemaError naming the offending field otherwise.
ProblemSpec parse_problem(std::string_view text);
std::string serialize_problem(const ProblemSpec& spec);

/// Reads and parses a file; "-" reads standard input.
ProblemSpec read_problem_file(const std::string& path);

enum class ReportFormat { Human, Machine };

std::string write_report(const SolveReport& report, ReportFormat format);

/// Inverse of the machine format. Non-finite numbers are written as the
/// strings "inf", "-inf" and "nan".
SolveReport parse_report(std::string_view text);

/// CSV with header draw,t,x1,x2 and one row per draw and time step.
std::string trajectory_csv(const std::vector<StatePath>& paths);

/// Replaces the file at `path` with `text`.
void write_file(const std::string& path, const std::string& text);

}  // namespace drc
