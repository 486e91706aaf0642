#pragma once

// JSON scenario files: a kind, its named matrices, base times and options.
//
//   {
//     "kind": "calogero_moser",
//     "matrices": {"X": {"rows": 1, "cols": 1, "data": [[[3, 0]]]}, "Z": ...},
//     "times": [[0, 0]],
//     "options": {"tolerance": 1e-8, "K": 4, "seed": 7, "trials": 50,
//                 "grids": {"t1": {"start": -5, "end": 5, "count": 201}},
//                 "c": [[1, 0], [2, 0], [3, 0]], "eta": [1, 0],
//                 "lambda1": [2, 0], "lambda2": [3, 0], "m": 1}
//   }
//
// Complex numbers are always [re, im]; matrices are row-major with explicit
// dimensions. Every option is optional and absent options stay absent after a
// parse/serialize round trip.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "kp_rankone/cases.hpp"
#include "kp_rankone/errors.hpp"
#include "kp_rankone/matkernel.hpp"
#include "kp_rankone/tau.hpp"
#include "kp_rankone/triple.hpp"

namespace kp_rankone {

using Json = nlohmann::ordered_json;

enum class ScenarioKind { general, intertwining, calogero_moser, kdv_pair };

inline const char* kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::general:
      return "general";
    case ScenarioKind::intertwining:
      return "intertwining";
    case ScenarioKind::calogero_moser:
      return "calogero_moser";
    case ScenarioKind::kdv_pair:
      return "kdv_pair";
  }
  return "general";
}

inline ScenarioKind parse_kind(const std::string& s) {
  for (auto k : {ScenarioKind::general, ScenarioKind::intertwining, ScenarioKind::calogero_moser,
                 ScenarioKind::kdv_pair})
    if (s == kind_name(k)) return k;
  throw ParseError("kind: unknown value \"" + s + "\" (general, intertwining, calogero_moser, kdv_pair)");
}

struct ScenarioGrids {
  std::optional<GridRange> t1, t2, t3, z;
  bool operator==(const ScenarioGrids&) const = default;
};

struct ScenarioOptions {
  std::optional<double> tolerance;
  std::optional<int> truncation;  ///< "K"
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  ScenarioGrids grids;
  std::optional<std::array<Complex, 3>> c;
  std::optional<Complex> eta, lambda1, lambda2;
  std::optional<int> m;
  bool operator==(const ScenarioOptions&) const = default;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::general;
  std::map<std::string, CMatrix> matrices;
  std::vector<Complex> times;  ///< empty means t = 0
  ScenarioOptions options;

  bool operator==(const Scenario& o) const {
    if (kind != o.kind || times != o.times || !(options == o.options) || matrices.size() != o.matrices.size())
      return false;
    for (const auto& [name, m] : matrices) {
      const auto it = o.matrices.find(name);
      if (it == o.matrices.end() || it->second.rows() != m.rows() || it->second.cols() != m.cols() ||
          it->second != m)
        return false;
    }
    return true;
  }
};

/// Matrix names each kind requires; intertwining also accepts an optional C.
inline std::vector<std::string> required_matrices(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::general:
      return {"A", "B", "C"};
    case ScenarioKind::intertwining:
      return {"X", "Y", "Z"};
    case ScenarioKind::calogero_moser:
    case ScenarioKind::kdv_pair:
      return {"X", "Z"};
  }
  return {};
}

// ---- JSON encoding ------------------------------------------------------

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(where + ": complex numbers must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json matrix_to_json(const CMatrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    data.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline CMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected {\"rows\", \"cols\", \"data\"}");
  for (const char* key : {"rows", "cols", "data"})
    if (!j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw ParseError(where + ": rows and cols must be integers");
  const auto rows = j["rows"].get<long long>();
  const auto cols = j["cols"].get<long long>();
  if (rows < 1 || cols < 1) throw DimensionError(where + ": rows and cols must be positive");
  const Json& data = j["data"];
  if (!data.is_array() || static_cast<long long>(data.size()) != rows)
    throw DimensionError(where + ".data: expected " + std::to_string(rows) + " rows");
  CMatrix m(rows, cols);
  for (long long r = 0; r < rows; ++r) {
    const Json& row = data[static_cast<std::size_t>(r)];
    const std::string row_where = where + ".data[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<long long>(row.size()) != cols)
      throw DimensionError(row_where + ": expected " + std::to_string(cols) + " entries");
    for (long long c = 0; c < cols; ++c)
      m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], row_where + "[" + std::to_string(c) + "]");
  }
  if (!all_finite(m)) throw ParseError(where + ": non-finite entry");
  return m;
}

inline Json grid_to_json(const GridRange& g) { return {{"start", g.start}, {"end", g.end}, {"count", g.count}}; }

inline GridRange grid_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("start") || !j.contains("end") || !j.contains("count"))
    throw ParseError(where + ": expected {\"start\", \"end\", \"count\"}");
  if (!j["start"].is_number() || !j["end"].is_number() || !j["count"].is_number_integer())
    throw ParseError(where + ": start/end must be numbers and count an integer");
  GridRange g{j["start"].get<double>(), j["end"].get<double>(), j["count"].get<int>()};
  if (g.count < 1) throw DimensionError(where + ".count must be >= 1");
  return g;
}

/// "start:end:count", both endpoints included. Locale independent.
inline GridRange parse_grid_spec(const std::string& spec) {
  const auto bad = [&] { return ParseError("grid \"" + spec + "\": expected start:end:count with count >= 1"); };
  const auto first = spec.find(':');
  const auto second = first == std::string::npos ? first : spec.find(':', first + 1);
  if (second == std::string::npos || spec.find(':', second + 1) != std::string::npos) throw bad();
  const char* base = spec.data();
  auto parse = [&](std::size_t from, std::size_t to, auto& out) {
    const auto [ptr, ec] = std::from_chars(base + from, base + to, out);
    if (ec != std::errc{} || ptr != base + to || from == to) throw bad();
  };
  GridRange g;
  parse(0, first, g.start);
  parse(first + 1, second, g.end);
  parse(second + 1, spec.size(), g.count);
  if (g.count < 1 || !std::isfinite(g.start) || !std::isfinite(g.end)) throw bad();
  return g;
}

namespace detail {

template <class T>
std::optional<T> optional_number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  const Json& v = j[key];
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>)
      if (v.is_number_integer() && !v.is_number_unsigned()) throw ParseError(where + "." + key + ": must be >= 0");
  } else if (!v.is_number()) {
    throw ParseError(where + "." + key + ": expected a number");
  }
  return v.get<T>();
}

inline std::optional<Complex> optional_complex(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  return complex_from_json(j[key], where + "." + key);
}

}  // namespace detail

inline Scenario parse_scenario(const Json& j) {
  if (!j.is_object()) throw ParseError("scenario: top level must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ParseError("scenario.kind: required string");
  Scenario s;
  s.kind = parse_kind(j["kind"].get<std::string>());

  if (!j.contains("matrices") || !j["matrices"].is_object()) throw ParseError("scenario.matrices: required object");
  for (const auto& [name, value] : j["matrices"].items())
    s.matrices.emplace(name, matrix_from_json(value, "matrices." + name));
  for (const auto& name : required_matrices(s.kind))
    if (!s.matrices.count(name))
      throw ParseError(std::string("matrices.") + name + ": required for kind " + kind_name(s.kind));

  if (j.contains("times")) {
    if (!j["times"].is_array()) throw ParseError("scenario.times: expected an array of [re, im]");
    for (std::size_t i = 0; i < j["times"].size(); ++i)
      s.times.push_back(complex_from_json(j["times"][i], "times[" + std::to_string(i) + "]"));
    if (!s.times.empty()) (void)TimeVector(s.times);
  }

  if (j.contains("options")) {
    const Json& o = j["options"];
    const std::string w = "options";
    if (!o.is_object()) throw ParseError("scenario.options: expected an object");
    auto& opt = s.options;
    opt.tolerance = detail::optional_number<double>(o, "tolerance", w);
    opt.truncation = detail::optional_number<int>(o, "K", w);
    opt.seed = detail::optional_number<std::uint64_t>(o, "seed", w);
    opt.trials = detail::optional_number<int>(o, "trials", w);
    opt.m = detail::optional_number<int>(o, "m", w);
    opt.eta = detail::optional_complex(o, "eta", w);
    opt.lambda1 = detail::optional_complex(o, "lambda1", w);
    opt.lambda2 = detail::optional_complex(o, "lambda2", w);
    if (opt.tolerance && !(*opt.tolerance > 0)) throw ParseError("options.tolerance: must be positive");
    if (opt.truncation && *opt.truncation < 1) throw ParseError("options.K: must be >= 1");
    if (opt.trials && *opt.trials < 1) throw ParseError("options.trials: must be >= 1");
    if (o.contains("c")) {
      const Json& c = o["c"];
      if (!c.is_array() || c.size() != 3) throw ParseError("options.c: expected three [re, im] values");
      opt.c = std::array<Complex, 3>{complex_from_json(c[0], "options.c[0]"), complex_from_json(c[1], "options.c[1]"),
                                     complex_from_json(c[2], "options.c[2]")};
    }
    if (o.contains("grids")) {
      const Json& g = o["grids"];
      if (!g.is_object()) throw ParseError("options.grids: expected an object");
      auto grid = [&](const char* key) -> std::optional<GridRange> {
        if (!g.contains(key)) return std::nullopt;
        return grid_from_json(g[key], std::string("options.grids.") + key);
      };
      opt.grids = {grid("t1"), grid("t2"), grid("t3"), grid("z")};
    }
  }
  return s;
}

inline Json serialize(const Scenario& s) {
  Json j;
  j["kind"] = kind_name(s.kind);
  Json mats = Json::object();
  for (const auto& [name, m] : s.matrices) mats[name] = matrix_to_json(m);
  j["matrices"] = std::move(mats);
  Json times = Json::array();
  for (const auto& t : s.times) times.push_back(complex_to_json(t));
  j["times"] = std::move(times);

  const auto& opt = s.options;
  Json o = Json::object();
  if (opt.tolerance) o["tolerance"] = *opt.tolerance;
  if (opt.truncation) o["K"] = *opt.truncation;
  if (opt.seed) o["seed"] = *opt.seed;
  if (opt.trials) o["trials"] = *opt.trials;
  Json grids = Json::object();
  if (opt.grids.t1) grids["t1"] = grid_to_json(*opt.grids.t1);
  if (opt.grids.t2) grids["t2"] = grid_to_json(*opt.grids.t2);
  if (opt.grids.t3) grids["t3"] = grid_to_json(*opt.grids.t3);
  if (opt.grids.z) grids["z"] = grid_to_json(*opt.grids.z);
  if (!grids.empty()) o["grids"] = std::move(grids);
  if (opt.c) o["c"] = Json::array({complex_to_json((*opt.c)[0]), complex_to_json((*opt.c)[1]), complex_to_json((*opt.c)[2])});
  if (opt.eta) o["eta"] = complex_to_json(*opt.eta);
  if (opt.lambda1) o["lambda1"] = complex_to_json(*opt.lambda1);
  if (opt.lambda2) o["lambda2"] = complex_to_json(*opt.lambda2);
  if (opt.m) o["m"] = *opt.m;
  j["options"] = std::move(o);
  return j;
}

/// Parses text, reporting JSON syntax errors by line.
inline Scenario parse_scenario_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("scenario: JSON syntax error at line " + std::to_string(line) + ": " + e.what());
  }
  return parse_scenario(j);
}

// ---- Materialization ----------------------------------------------------

inline TimeVector scenario_times(const Scenario& s, std::optional<int> truncation = std::nullopt) {
  const int k = truncation.value_or(s.options.truncation.value_or(
      s.times.empty() ? kDefaultTruncation : static_cast<int>(s.times.size())));
  std::vector<Complex> values = s.times;
  for (std::size_t i = static_cast<std::size_t>(k); i < values.size(); ++i)
    if (values[i] != Complex{})
      throw DimensionError("times: nonzero t_" + std::to_string(i + 1) + " beyond truncation K=" + std::to_string(k));
  values.resize(static_cast<std::size_t>(k));
  return TimeVector(std::move(values));
}

inline const CMatrix& scenario_matrix(const Scenario& s, const std::string& name) {
  const auto it = s.matrices.find(name);
  if (it == s.matrices.end()) throw ParseError("matrices." + name + ": required for kind " + kind_name(s.kind));
  return it->second;
}

inline CalogeroMoserData calogero_moser_data(const Scenario& s) {
  if (s.kind != ScenarioKind::calogero_moser) throw ParseError("scenario kind must be calogero_moser");
  return {scenario_matrix(s, "X"), scenario_matrix(s, "Z")};
}

inline IntertwiningData intertwining_data(const Scenario& s) {
  if (s.kind == ScenarioKind::kdv_pair) {
    const CMatrix& z = scenario_matrix(s, "Z");
    return {scenario_matrix(s, "X"), -z, z};
  }
  if (s.kind != ScenarioKind::intertwining) throw ParseError("scenario kind must be intertwining or kdv_pair");
  return {scenario_matrix(s, "X"), scenario_matrix(s, "Y"), scenario_matrix(s, "Z")};
}

/// The kind's triple before any rank test; used for validator reports.
inline RankOneTriple assemble_triple(const Scenario& s) {
  switch (s.kind) {
    case ScenarioKind::general:
      return RankOneTriple(scenario_matrix(s, "A"), scenario_matrix(s, "B"), scenario_matrix(s, "C"));
    case ScenarioKind::intertwining: {
      std::optional<CMatrix> c;
      if (s.matrices.count("C")) c = s.matrices.at("C");
      return assemble_intertwining(intertwining_data(s), c);
    }
    case ScenarioKind::calogero_moser:
      return assemble_calogero_moser(calogero_moser_data(s));
    case ScenarioKind::kdv_pair:
      return assemble_intertwining(intertwining_data(s));
  }
  throw ParseError("scenario: unknown kind");
}

inline Json triple_report_json(const TripleReport& r) {
  return {{"rank_of_ABUt", r.rank_of_ABUt},
          {"second_singular_ratio", r.second_singular_ratio},
          {"nondegeneracy_ok", r.nondegeneracy_ok},
          {"full_rank_ok", r.full_rank_ok},
          {"admissible", r.admissible}};
}

/// Inadmissible scenario; carries the validator report of the assembled triple.
class ScenarioRejected : public InadmissibleError {
 public:
  ScenarioRejected(const std::string& what, TripleReport report)
      : InadmissibleError(what + " " + triple_report_json(report).dump()), report_(report) {}
  const TripleReport& report() const { return report_; }

 private:
  TripleReport report_;
};

/// Runs the kind's builder (with its own rank test) and returns the triple.
inline RankOneTriple materialize(const Scenario& s, double tol = kDefaultRankTol) {
  const RankOneTriple raw = assemble_triple(s);
  try {
    switch (s.kind) {
      case ScenarioKind::general: {
        const auto report = validate_triple(raw, tol);
        if (!report.admissible) throw ScenarioRejected("general triple is not admissible", report);
        return raw;
      }
      case ScenarioKind::intertwining: {
        std::optional<CMatrix> c;
        if (s.matrices.count("C")) c = s.matrices.at("C");
        return from_intertwining(intertwining_data(s), c, tol);
      }
      case ScenarioKind::calogero_moser:
        return from_calogero_moser(calogero_moser_data(s), tol);
      case ScenarioKind::kdv_pair:
        return from_kdv_pair({scenario_matrix(s, "X"), scenario_matrix(s, "Z")}, tol);
    }
  } catch (const ScenarioRejected&) {
    throw;
  } catch (const InadmissibleError& e) {
    throw ScenarioRejected(e.what(), validate_triple(raw, tol));
  }
  throw ParseError("scenario: unknown kind");
}

struct LoadedScenario {
  Scenario scenario;
  RankOneTriple triple;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline LoadedScenario load_scenario(const std::string& path, double tol = kDefaultRankTol) {
  Scenario s = parse_scenario_text(read_text_file(path));
  scenario_times(s);
  RankOneTriple tr = materialize(s, tol);
  return {std::move(s), std::move(tr)};
}

}  // namespace kp_rankone
