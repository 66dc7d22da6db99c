#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "projnorm/certify.hpp"
#include "projnorm/covering.hpp"
#include "projnorm/errors.hpp"
#include "projnorm/tensor.hpp"

namespace projnorm::io {

using json = nlohmann::json;

/// Input file is malformed or inconsistent.
class InputError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Serialisation with 17 significant digits for every floating-point number.
// ---------------------------------------------------------------------------

inline void dump17_into(const json& j, std::string& out, int indent, int depth) {
  const auto nl = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        nl(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump17_into(it.value(), out, indent, depth + 1);
      }
      nl(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        nl(depth + 1);
        dump17_into(v, out, indent, depth + 1);
      }
      nl(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

inline std::string dump17(const json& j, int indent = 2) {
  std::string out;
  dump17_into(j, out, indent, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Tensor and state files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path + ": " + e.what());
  }
}

namespace detail {

inline void flatten_into(const json& j, std::vector<json>& out, bool complex) {
  // A complex scalar is a 2-element array of numbers.
  if (complex && j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    out.push_back(j);
  } else if (j.is_array()) {
    for (const auto& v : j) flatten_into(v, out, complex);
  } else {
    out.push_back(j);
  }
}

inline double as_real(const json& j) {
  if (!j.is_number()) throw InputError("expected a real number, got " + j.dump());
  return j.get<double>();
}

inline Complex as_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InputError("expected a complex entry [re, im], got " + j.dump());
}

inline std::vector<std::size_t> as_dims(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw InputError(std::string("'") + key + "' must be a nonempty array");
  std::vector<std::size_t> dims;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw InputError(std::string("'") + key + "' entries must be positive integers");
    }
    dims.push_back(v.get<std::size_t>());
  }
  return dims;
}

}  // namespace detail

/// A parsed tensor file: exactly one of the two alternatives is set.
struct TensorFile {
  Field field = Field::real;
  std::optional<RealTensor> real;
  std::optional<ComplexTensor> complex;
};

inline TensorFile tensor_from_json(const json& j) {
  if (!j.is_object()) throw InputError("tensor file must be a JSON object");
  for (const char* key : {"shape", "field", "coords"}) {
    if (!j.contains(key)) throw InputError(std::string("tensor file is missing '") + key + "'");
  }
  const auto dims = detail::as_dims(j["shape"], "shape");
  const auto field_name = j["field"].is_string() ? j["field"].get<std::string>() : "";
  TensorFile tf;
  if (field_name == "real") {
    tf.field = Field::real;
  } else if (field_name == "complex") {
    tf.field = Field::complex;
  } else {
    throw InputError("'field' must be \"real\" or \"complex\"");
  }
  std::vector<json> flat;
  detail::flatten_into(j["coords"], flat, tf.field == Field::complex);
  try {
    if (tf.field == Field::real) {
      std::vector<double> c;
      for (const auto& v : flat) c.push_back(detail::as_real(v));
      tf.real.emplace(dims, std::move(c));
    } else {
      std::vector<Complex> c;
      for (const auto& v : flat) c.push_back(detail::as_complex(v));
      tf.complex.emplace(dims, std::move(c));
    }
  } catch (const ShapeMismatch& e) {
    throw InputError(e.what());
  }
  return tf;
}

inline json tensor_to_json(const RealTensor& t) {
  json coords = json::array();
  for (double v : t.coords()) coords.push_back(v);
  return {{"shape", t.dims()}, {"field", "real"}, {"coords", coords}};
}

inline json tensor_to_json(const ComplexTensor& t) {
  json coords = json::array();
  for (const auto& z : t.coords()) coords.push_back(json::array({z.real(), z.imag()}));
  return {{"shape", t.dims()}, {"field", "complex"}, {"coords", coords}};
}

/// Party dimensions and matrix of a state file, unvalidated.
struct StateFile {
  std::vector<std::size_t> party_dims;
  Eigen::MatrixXcd matrix;
};

inline StateFile state_from_json(const json& j) {
  if (!j.is_object()) throw InputError("state file must be a JSON object");
  if (!j.contains("party_dims") || !j.contains("matrix")) {
    throw InputError("state file needs 'party_dims' and 'matrix'");
  }
  StateFile sf;
  sf.party_dims = detail::as_dims(j["party_dims"], "party_dims");
  const auto& rows = j["matrix"];
  if (!rows.is_array() || rows.empty()) throw InputError("'matrix' must be a nonempty array of rows");
  const auto n = rows.size();
  std::size_t cols = 0;
  for (const auto& r : rows) {
    if (!r.is_array()) throw InputError("'matrix' rows must be arrays");
    cols = std::max(cols, r.size());
  }
  sf.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
  for (std::size_t a = 0; a < n; ++a) {
    if (rows[a].size() != cols) throw InputError("'matrix' rows have unequal length");
    for (std::size_t b = 0; b < cols; ++b) {
      sf.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = detail::as_complex(rows[a][b]);
    }
  }
  return sf;
}

inline json state_to_json(const std::vector<std::size_t>& party_dims, const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(json::array({m(a, b).real(), m(a, b).imag()}));
    rows.push_back(row);
  }
  return {{"party_dims", party_dims}, {"matrix", rows}};
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string command;
  std::string input;
  std::string out;
  std::vector<int> m{4};
  std::vector<int> m_schedule{2, 4, 8, 16};
  std::string covering = "auto";     // grid | circle | auto
  std::string guarantee;             // paper | tight; empty = command default
  std::string separation = "exact";  // exact | heuristic-then-exact
  std::string field = "auto";        // auto | real | complex (certify)
  std::uint64_t budget_rows = 200'000;
  std::uint64_t budget_evals = default_separation_budget;
  std::uint64_t budget_grid = default_grid_budget;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  int dim = 0;                         // covering command
  std::string debug_oracle;            // debug command

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline json config_to_json(const RunConfig& c) {
  return {{"command", c.command},       {"input", c.input},
          {"out", c.out},               {"m", c.m},
          {"m_schedule", c.m_schedule}, {"covering", c.covering},
          {"guarantee", c.guarantee},   {"separation", c.separation},
          {"field", c.field},           {"budget_rows", c.budget_rows},
          {"budget_evals", c.budget_evals}, {"budget_grid", c.budget_grid},
          {"threads", c.threads},       {"seed", c.seed},
          {"dim", c.dim},               {"debug_oracle", c.debug_oracle}};
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.input = j.at("input").get<std::string>();
    c.out = j.at("out").get<std::string>();
    c.m = j.at("m").get<std::vector<int>>();
    c.m_schedule = j.at("m_schedule").get<std::vector<int>>();
    c.covering = j.at("covering").get<std::string>();
    c.guarantee = j.at("guarantee").get<std::string>();
    c.separation = j.at("separation").get<std::string>();
    c.field = j.at("field").get<std::string>();
    c.budget_rows = j.at("budget_rows").get<std::uint64_t>();
    c.budget_evals = j.at("budget_evals").get<std::uint64_t>();
    c.budget_grid = j.at("budget_grid").get<std::uint64_t>();
    c.threads = j.at("threads").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dim = j.at("dim").get<int>();
    c.debug_oracle = j.at("debug_oracle").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError(std::string("bad run configuration: ") + e.what());
  }
  return c;
}

inline CoveringKind parse_covering(const std::string& s) {
  if (s == "grid") return CoveringKind::grid;
  if (s == "circle") return CoveringKind::circle;
  if (s == "auto") return CoveringKind::automatic;
  throw InputError("unknown covering '" + s + "'");
}

inline GuaranteeMode parse_guarantee(const std::string& s) {
  if (s == "paper") return GuaranteeMode::paper;
  if (s == "tight") return GuaranteeMode::tight;
  throw InputError("unknown guarantee mode '" + s + "'");
}

inline SeparationMode parse_separation(const std::string& s) {
  if (s == "exact") return SeparationMode::exact;
  if (s == "heuristic-then-exact") return SeparationMode::heuristic_then_exact;
  throw InputError("unknown separation mode '" + s + "'");
}

inline FieldChoice parse_field(const std::string& s) {
  if (s == "auto") return FieldChoice::automatic;
  if (s == "real") return FieldChoice::real;
  if (s == "complex") return FieldChoice::complex;
  throw InputError("unknown field '" + s + "'");
}

inline SolverConfig solver_config(const RunConfig& c) {
  SolverConfig s;
  s.max_rows = static_cast<std::size_t>(c.budget_rows);
  s.separation_budget = c.budget_evals;
  s.separation = parse_separation(c.separation);
  s.seed = c.seed;
  s.threads = std::max<std::size_t>(c.threads, 1);
  return s;
}

// ---------------------------------------------------------------------------
// Result documents
// ---------------------------------------------------------------------------

inline json covering_stats(const Covering& c, GuaranteeMode mode) {
  json j = {{"dim", c.dim()},
            {"m", c.m()},
            {"construction", to_string(c.construction())},
            {"stored_count", c.size()},
            {"certified_radius", c.certified_radius()},
            {"guarantee_mode", to_string(mode)},
            {"gamma1", c.guarantee(mode).lower}};
  if (c.construction() == Construction::paper_grid) {
    j["grid_bound"] = grid_cardinality(c.dim(), c.m());
  } else {
    j["circle_points"] = c.raw_points();
  }
  return j;
}

inline json telemetry_to_json(const SolverTelemetry& t) {
  return {{"rounds", t.rounds},
          {"rows_generated", t.rows_generated},
          {"rows_added", t.rows_added},
          {"rows_total", t.rows_total},
          {"pivots", t.pivots},
          {"separation_calls", t.separation_calls},
          {"heuristic_hits", t.heuristic_hits},
          {"separation_mode", to_string(t.separation)}};
}

inline json estimate_to_json(const NormEstimate& e) {
  json cov = json::array();
  json g1 = json::array();
  for (const auto& c : e.coverings) {
    cov.push_back(covering_stats(*c, e.guarantee));
    g1.push_back(c->guarantee(e.guarantee).lower);
  }
  return {{"field", to_string(e.field)},
          {"value", e.value},
          {"gamma", e.gamma},
          {"gamma1", g1},
          {"pi_lower", e.lower},
          {"pi_upper", e.upper},
          {"m", e.m},
          {"guarantee_mode", to_string(e.guarantee)},
          {"certified", e.certified},
          {"status", e.certified ? "certified" : "UNCERTIFIED"},
          {"solver_status", to_string(e.solution.status)},
          {"max_row_value", e.solution.max_row_value},
          {"coverings", cov},
          {"telemetry", telemetry_to_json(e.solution.telemetry)}};
}

inline json verdict_to_json(const Verdict& v, GuaranteeMode mode) {
  json runs = json::array();
  for (const auto& r : v.runs) runs.push_back(estimate_to_json(r));
  json witness = nullptr;
  if (v.witness) {
    witness = {{"pairing", v.witness->pairing}, {"eps_upper", v.witness->eps_upper}, {"bound", v.witness->bound}};
  }
  json j = {{"verdict", to_string(v.kind)},
            {"pi_lower", v.pi_lower},
            {"pi_upper", v.pi_upper},
            {"m_trail", v.m_trail},
            {"guarantee_mode", to_string(mode)},
            {"field", to_string(v.field)},
            {"budget_exceeded", v.budget_exceeded},
            {"witness", witness},
            {"telemetry", runs}};
  if (!v.message.empty()) j["message"] = v.message;
  return j;
}

}  // namespace projnorm::io
