#include "drc/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>

namespace drc {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& message) { throw Error(ErrorCode::SchemaError, message); }

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema("missing field '" + join(path, key) + "'");
  return *it;
}

const json* optional_field(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema(path.empty() ? "document must be a JSON object" : "field '" + path + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) schema("unknown field '" + join(path, key) + "'");
  }
}

double number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  schema("field '" + path + "' must be a number");
}

std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema("field '" + path + "' must be an integer");
  return j.get<std::int64_t>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) schema("field '" + path + "' must be true or false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) schema("field '" + path + "' must be a string");
  return j.get<std::string>();
}

Vector vector(const json& j, const std::string& path) {
  if (!j.is_array()) schema("field '" + path + "' must be an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix(const json& j, const std::string& path) {
  if (!j.is_array()) schema("field '" + path + "' must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector(j[i], path + "[" + std::to_string(i) + "]");
    if (i == 0) cols = row.size();
    if (row.size() != cols) schema("field '" + path + "' has rows of different lengths");
  }
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) M.row(i) = vector(j[static_cast<std::size_t>(i)], path).transpose();
  return M;
}

ordered to_json(double x) {
  if (std::isfinite(x)) return x == 0.0 ? 0.0 : x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

ordered to_json(const Vector& v) {
  ordered a = ordered::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(to_json(v[i]));
  return a;
}

ordered to_json(const Matrix& M) {
  ordered a = ordered::array();
  for (Index i = 0; i < M.rows(); ++i) a.push_back(to_json(Vector(M.row(i).transpose())));
  return a;
}

// -- problem ----------------------------------------------------------------

LossForm parse_loss(const json& j) {
  const std::string type = text(field(j, "type", "loss"), "loss.type");
  if (type == "bilinear") {
    object(j, "loss", {"type", "A", "b", "c", "d"});
    Bilinear bl;
    bl.A = matrix(field(j, "A", "loss"), "loss.A");
    const auto* b = optional_field(j, "b");
    const auto* c = optional_field(j, "c");
    const auto* d = optional_field(j, "d");
    bl.b = b ? vector(*b, "loss.b") : Vector::Zero(bl.A.rows());
    bl.c = c ? vector(*c, "loss.c") : Vector::Zero(bl.A.cols());
    bl.d = d ? number(*d, "loss.d") : 0.0;
    return bl;
  }
  if (type == "norm_affine") {
    object(j, "loss", {"type", "F", "G", "h"});
    NormAffine na;
    na.F = matrix(field(j, "F", "loss"), "loss.F");
    na.G = matrix(field(j, "G", "loss"), "loss.G");
    const auto* h = optional_field(j, "h");
    na.h = h ? vector(*h, "loss.h") : Vector::Zero(na.F.rows());
    return na;
  }
  schema("field 'loss.type' must be \"bilinear\" or \"norm_affine\"");
}

BoxSet parse_box(const json& j, const std::string& path) {
  return {vector(field(j, "lower", path), join(path, "lower")), vector(field(j, "upper", path), join(path, "upper"))};
}

InputBlock parse_block(const json& j, const std::string& path) {
  if (!j.is_object()) schema("field '" + path + "' must be an object");
  const std::string type = text(field(j, "type", path), join(path, "type"));
  if (type == "box") {
    object(j, path, {"type", "lower", "upper"});
    return parse_box(j, path);
  }
  if (type == "simplex") {
    object(j, path, {"type", "dim"});
    return SimplexSet{integer(field(j, "dim", path), join(path, "dim"))};
  }
  schema("field '" + join(path, "type") + "' must be \"box\" or \"simplex\"");
}

InputSet parse_input_set(const json& j) {
  if (j.is_object() && j.value("type", "") == "product") {
    object(j, "input_set", {"type", "blocks"});
    const json& blocks = field(j, "blocks", "input_set");
    if (!blocks.is_array()) schema("field 'input_set.blocks' must be an array");
    ProductSet out;
    for (std::size_t i = 0; i < blocks.size(); ++i)
      out.blocks.push_back(parse_block(blocks[i], "input_set.blocks[" + std::to_string(i) + "]"));
    return out;
  }
  const InputBlock block = parse_block(j, "input_set");
  if (const auto* box = std::get_if<BoxSet>(&block)) return *box;
  return std::get<SimplexSet>(block);
}

GFun parse_g(const json& j, const std::string& path) {
  if (!j.is_object()) schema("field '" + path + "' must be an object");
  const std::string type = text(field(j, "type", path), join(path, "type"));
  if (type == "identity") {
    object(j, path, {"type"});
    return Identity{};
  }
  if (type == "power") {
    object(j, path, {"type", "p"});
    return Power{static_cast<int>(integer(field(j, "p", path), join(path, "p")))};
  }
  if (type == "indicator_geq") {
    object(j, path, {"type", "threshold"});
    return IndicatorGeq{number(field(j, "threshold", path), join(path, "threshold"))};
  }
  schema("field '" + join(path, "type") + "' must be \"identity\", \"power\" or \"indicator_geq\"");
}

ConstraintKind parse_kind(const json& j, const std::string& path) {
  object(j, path, {"two_sided", "upper_bound"});
  if (j.size() != 1) schema("field '" + path + "' must hold exactly one of two_sided, upper_bound");
  if (const auto* ts = optional_field(j, "two_sided")) {
    const std::string p = join(path, "two_sided");
    object(*ts, p, {"center", "radius"});
    return TwoSided{number(field(*ts, "center", p), join(p, "center")), number(field(*ts, "radius", p), join(p, "radius"))};
  }
  const json& ub = j.at("upper_bound");
  const std::string p = join(path, "upper_bound");
  object(ub, p, {"level", "negated", "origin"});
  UpperBound out;
  out.level = number(field(ub, "level", p), join(p, "level"));
  if (const auto* neg = optional_field(ub, "negated")) out.negated = boolean(*neg, join(p, "negated"));
  if (const auto* origin = optional_field(ub, "origin")) {
    const std::string o = join(p, "origin");
    object(*origin, o, {"pair", "center", "radius"});
    const auto pair = integer(field(*origin, "pair", o), join(o, "pair"));
    if (pair < 0) schema("field '" + join(o, "pair") + "' must be nonnegative");
    out.origin = PairOrigin{static_cast<std::size_t>(pair), number(field(*origin, "center", o), join(o, "center")),
                            number(field(*origin, "radius", o), join(o, "radius"))};
  }
  return out;
}

ordered block_json(const InputBlock& block) {
  ordered j;
  if (const auto* box = std::get_if<BoxSet>(&block)) {
    j["type"] = "box";
    j["lower"] = to_json(box->lower);
    j["upper"] = to_json(box->upper);
  } else {
    j["type"] = "simplex";
    j["dim"] = std::get<SimplexSet>(block).dim;
  }
  return j;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// -- report -----------------------------------------------------------------

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::string format_vector(const Vector& v) {
  std::string out = "(";
  for (Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
  return out + ")";
}

Method parse_method(const std::string& s) {
  if (s == to_string(Method::BestResponse)) return Method::BestResponse;
  if (s == to_string(Method::CuttingSet)) return Method::CuttingSet;
  schema("unknown method '" + s + "'");
}

SolveStatus parse_status(const std::string& s) {
  for (SolveStatus st : {SolveStatus::Converged, SolveStatus::Cycling, SolveStatus::MaxIters, SolveStatus::Infeasible})
    if (s == to_string(st)) return st;
  schema("unknown status '" + s + "'");
}

ordered params_json(const RunConfig& c) {
  ordered j;
  j["method"] = to_string(c.method);
  j["seed"] = c.seed;
  j["feas_tol"] = c.feas_tol;
  j["u_tol"] = c.u_tol;
  j["cycle_tol"] = c.cycle_tol;
  j["max_cuts"] = c.max_cuts;
  j["max_iters"] = c.max_iters;
  j["n_samples"] = c.n_samples;
  j["dccp_restarts"] = c.dccp_restarts;
  return j;
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) schema("field '" + path + "' must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

RunConfig parse_params(const json& j) {
  object(j, "params", {"method", "seed", "feas_tol", "u_tol", "cycle_tol", "max_cuts", "max_iters", "n_samples",
                       "dccp_restarts"});
  RunConfig c;
  c.method = parse_method(text(field(j, "method", "params"), "params.method"));
  c.seed = unsigned_integer(field(j, "seed", "params"), "params.seed");
  c.feas_tol = number(field(j, "feas_tol", "params"), "params.feas_tol");
  c.u_tol = number(field(j, "u_tol", "params"), "params.u_tol");
  c.cycle_tol = number(field(j, "cycle_tol", "params"), "params.cycle_tol");
  c.max_cuts = static_cast<int>(integer(field(j, "max_cuts", "params"), "params.max_cuts"));
  c.max_iters = static_cast<int>(integer(field(j, "max_iters", "params"), "params.max_iters"));
  c.n_samples = static_cast<int>(integer(field(j, "n_samples", "params"), "params.n_samples"));
  c.dccp_restarts = static_cast<int>(integer(field(j, "dccp_restarts", "params"), "params.dccp_restarts"));
  return c;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    throw Error(ErrorCode::SyntaxError, "syntax error at line " + std::to_string(line) + ", column " +
                                            std::to_string(column));
  }
}

}  // namespace

ProblemSpec parse_problem(std::string_view text) {
  const json j = parse_json(text);
  object(j, "", {"name", "dim_u", "dim_x", "loss", "input_set", "support", "constraints"});
  ProblemSpec spec;
  if (const auto* name = optional_field(j, "name")) spec.name = drc::text(*name, "name");
  spec.dim_u = integer(field(j, "dim_u", ""), "dim_u");
  spec.dim_x = integer(field(j, "dim_x", ""), "dim_x");
  const json& loss = field(j, "loss", "");
  if (!loss.is_object()) schema("field 'loss' must be an object");
  spec.loss = parse_loss(loss);
  spec.input_set = parse_input_set(field(j, "input_set", ""));
  const json& support = field(j, "support", "");
  object(support, "support", {"lower", "upper"});
  const BoxSet box = parse_box(support, "support");
  spec.support = SupportSet{box.lower, box.upper};
  const json& constraints = field(j, "constraints", "");
  if (!constraints.is_array()) schema("field 'constraints' must be an array");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const std::string path = "constraints[" + std::to_string(i) + "]";
    const json& c = constraints[i];
    object(c, path, {"q", "g", "kind"});
    spec.constraints.push_back({vector(field(c, "q", path), join(path, "q")), parse_g(field(c, "g", path), join(path, "g")),
                                parse_kind(field(c, "kind", path), join(path, "kind"))});
  }
  return spec;
}

std::string serialize_problem(const ProblemSpec& spec) {
  ordered j;
  if (!spec.name.empty()) j["name"] = spec.name;
  j["dim_u"] = spec.dim_u;
  j["dim_x"] = spec.dim_x;

  ordered loss;
  if (const auto* bl = std::get_if<Bilinear>(&spec.loss)) {
    loss["type"] = "bilinear";
    loss["A"] = to_json(bl->A);
    loss["b"] = to_json(bl->b);
    loss["c"] = to_json(bl->c);
    loss["d"] = to_json(bl->d);
  } else {
    const auto& na = std::get<NormAffine>(spec.loss);
    loss["type"] = "norm_affine";
    loss["F"] = to_json(na.F);
    loss["G"] = to_json(na.G);
    loss["h"] = to_json(na.h);
  }
  j["loss"] = loss;

  if (const auto* product = std::get_if<ProductSet>(&spec.input_set)) {
    ordered set;
    set["type"] = "product";
    set["blocks"] = ordered::array();
    for (const auto& block : product->blocks) set["blocks"].push_back(block_json(block));
    j["input_set"] = set;
  } else if (const auto* box = std::get_if<BoxSet>(&spec.input_set)) {
    j["input_set"] = block_json(*box);
  } else {
    j["input_set"] = block_json(std::get<SimplexSet>(spec.input_set));
  }

  j["support"] = {{"lower", to_json(spec.support.lower)}, {"upper", to_json(spec.support.upper)}};

  j["constraints"] = ordered::array();
  for (const auto& c : spec.constraints) {
    ordered entry;
    entry["q"] = to_json(c.q);
    ordered g;
    if (std::holds_alternative<Identity>(c.g)) {
      g["type"] = "identity";
    } else if (const auto* p = std::get_if<Power>(&c.g)) {
      g["type"] = "power";
      g["p"] = p->exponent;
    } else {
      g["type"] = "indicator_geq";
      g["threshold"] = std::get<IndicatorGeq>(c.g).threshold;
    }
    entry["g"] = g;
    ordered kind;
    if (const auto* ts = std::get_if<TwoSided>(&c.kind)) {
      kind["two_sided"] = {{"center", ts->center}, {"radius", ts->radius}};
    } else {
      const auto& ub = std::get<UpperBound>(c.kind);
      ordered u;
      u["level"] = ub.level;
      if (ub.negated) u["negated"] = true;
      if (ub.origin) u["origin"] = {{"pair", ub.origin->pair}, {"center", ub.origin->center}, {"radius", ub.origin->radius}};
      kind["upper_bound"] = u;
    }
    entry["kind"] = kind;
    j["constraints"].push_back(entry);
  }
  return j.dump(2) + "\n";
}

ProblemSpec read_problem_file(const std::string& path) {
  std::string content;
  if (path == "-") {
    content.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  } else {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::InvalidArgument, "cannot open problem file '" + path + "'");
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return parse_problem(content);
}

std::string write_report(const SolveReport& r, ReportFormat format) {
  if (format == ReportFormat::Machine) {
    ordered j;
    j["method"] = to_string(r.method);
    j["status"] = to_string(r.status);
    if (r.cycle_period) j["cycle_period"] = *r.cycle_period;
    if (!r.cycle_controls.empty()) {
      j["cycle_controls"] = ordered::array();
      for (const auto& u : r.cycle_controls) j["cycle_controls"].push_back(to_json(u));
    }
    j["u_star"] = to_json(r.u_star);
    j["value"] = to_json(r.value);
    j["certified"] = r.certified;
    j["iterations"] = r.iterations;
    j["per_iteration_seconds"] = to_json(r.per_iteration_seconds);
    j["seed"] = r.seed;
    j["history"] = ordered::array();
    for (const auto& h : r.history) j["history"].push_back({h.iteration, to_json(h.objective), to_json(h.measure)});
    j["params"] = params_json(r.params);
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  os << "method: " << to_string(r.method) << "\n";
  os << "status: " << to_string(r.status);
  if (r.cycle_period) os << " (cycle of period " << *r.cycle_period << ")";
  os << "\n";
  if (!r.cycle_controls.empty()) {
    os << "cycle: ";
    for (std::size_t i = 0; i < r.cycle_controls.size(); ++i)
      os << (i ? " <-> " : "") << format_vector(r.cycle_controls[i]);
    os << "\n";
  }
  os << "u*: " << format_vector(r.u_star) << "\n";
  os << "value: " << format_number(r.value) << "\n";
  os << "certified: " << (r.certified ? "yes" : "no") << "\n";
  os << "iterations: " << r.iterations << "\n";
  os << "per-iteration seconds: " << format_number(r.per_iteration_seconds) << "\n";
  os << "seed: " << r.seed << "\n";
  return os.str();
}

SolveReport parse_report(std::string_view text) {
  const json j = parse_json(text);
  object(j, "", {"method", "status", "cycle_period", "cycle_controls", "u_star", "value", "certified", "iterations",
                 "per_iteration_seconds", "seed", "history", "params"});
  SolveReport r;
  r.method = parse_method(drc::text(field(j, "method", ""), "method"));
  r.status = parse_status(drc::text(field(j, "status", ""), "status"));
  if (const auto* p = optional_field(j, "cycle_period")) r.cycle_period = static_cast<int>(integer(*p, "cycle_period"));
  if (const auto* cc = optional_field(j, "cycle_controls")) {
    if (!cc->is_array()) schema("field 'cycle_controls' must be an array");
    for (std::size_t i = 0; i < cc->size(); ++i)
      r.cycle_controls.push_back(vector((*cc)[i], "cycle_controls[" + std::to_string(i) + "]"));
  }
  r.u_star = vector(field(j, "u_star", ""), "u_star");
  r.value = number(field(j, "value", ""), "value");
  r.certified = boolean(field(j, "certified", ""), "certified");
  r.iterations = static_cast<int>(integer(field(j, "iterations", ""), "iterations"));
  r.per_iteration_seconds = number(field(j, "per_iteration_seconds", ""), "per_iteration_seconds");
  r.seed = unsigned_integer(field(j, "seed", ""), "seed");
  const json& history = field(j, "history", "");
  if (!history.is_array()) schema("field 'history' must be an array");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const std::string path = "history[" + std::to_string(i) + "]";
    const json& row = history[i];
    if (!row.is_array() || row.size() != 3) schema("field '" + path + "' must be [iteration, objective, measure]");
    r.history.push_back({static_cast<int>(integer(row[0], path)), number(row[1], path), number(row[2], path)});
  }
  r.params = parse_params(field(j, "params", ""));
  return r;
}

std::string trajectory_csv(const std::vector<StatePath>& paths) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(12);
  os << "draw,t,x1,x2\n";
  for (std::size_t d = 0; d < paths.size(); ++d)
    for (std::size_t t = 0; t < paths[d].size(); ++t) os << d << ',' << t << ',' << paths[d][t][0] << ',' << paths[d][t][1] << '\n';
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::InvalidArgument, "cannot open output file '" + path + "'");
  out << text;
  require(out.good(), ErrorCode::InvalidArgument, "failed writing '" + path + "'");
}

}  // namespace drc
