#pragma once

// Command dispatch for the kp-rankone tool. Commands produce their output
// files in memory; write_outputs puts them on disk. Exit codes:
//   0  every report passes
//   1  at least one report fails (files are still written)
//   2  usage error (unknown command, missing grid, bad flag value)
//   3  input error (unreadable or inadmissible scenario, evaluation failure)

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "kp_rankone/baker.hpp"
#include "kp_rankone/errors.hpp"
#include "kp_rankone/rng.hpp"
#include "kp_rankone/scenario.hpp"
#include "kp_rankone/tau.hpp"
#include "kp_rankone/verify.hpp"

namespace kp_rankone {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2, kExitInput = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"validate",   "tau-grid", "u-grid", "psi-grid",
                                                 "verify-hbde", "verify-kp", "verify-h3", "bethe",
                                                 "spectral",   "crosscheck"};
  return names;
}

/// Command-line overrides; each takes precedence over the scenario's options.
struct CommandFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> tolerance;
  std::optional<GridRange> t1, t2, t3, z;
  std::optional<int> truncation;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  int exit_code = kExitPass;
  std::vector<OutputFile> files;
};

/// Shortest round-trip text is not required; 17 significant digits are.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 40> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

/// --tol, then options.tolerance, then $KP_RANKONE_TOL, then the command default.
inline double resolve_tolerance(const CommandFlags& flags, const Scenario& s, double fallback,
                                const char* env = std::getenv("KP_RANKONE_TOL")) {
  if (flags.tolerance) return *flags.tolerance;
  if (s.options.tolerance) return *s.options.tolerance;
  if (env != nullptr && *env != '\0') {
    double v = 0.0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !(v > 0))
      throw UsageError("KP_RANKONE_TOL: expected a positive number, got \"" + text + "\"");
    return v;
  }
  return fallback;
}

namespace detail {

struct CommandContext {
  const Scenario& scenario;
  const CommandFlags& flags;
  const char* env_tolerance;

  std::uint64_t seed() const { return flags.seed.value_or(scenario.options.seed.value_or(0)); }
  int trials() const { return flags.trials.value_or(scenario.options.trials.value_or(1)); }
  double tolerance(double fallback) const { return resolve_tolerance(flags, scenario, fallback, env_tolerance); }
  TimeVector times() const {
    return scenario_times(scenario, flags.truncation ? flags.truncation : scenario.options.truncation);
  }
  std::optional<GridRange> grid(const std::optional<GridRange>& flag, const std::optional<GridRange>& opt) const {
    return flag ? flag : opt;
  }
  TimeGrid time_grid(const std::string& command) const {
    const auto t1 = grid(flags.t1, scenario.options.grids.t1);
    if (!t1) throw UsageError(command + " needs a t1 grid (--t1 start:end:count or options.grids.t1)");
    return {*t1, grid(flags.t2, scenario.options.grids.t2), grid(flags.t3, scenario.options.grids.t3)};
  }
};

inline Json report_json(const VerificationReport& r) {
  return {{"name", r.name}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"pass", r.pass}, {"context", r.context}};
}

inline CommandResult reports_result(const std::string& command, const CommandContext& ctx,
                                    const std::vector<VerificationReport>& reports, Json extra = Json::object()) {
  Json list = Json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    list.push_back(report_json(r));
    all_pass = all_pass && r.pass;
  }
  Json doc;
  doc["command"] = command;
  doc["kind"] = kind_name(ctx.scenario.kind);
  doc["seed"] = ctx.seed();
  for (auto& [key, value] : extra.items()) doc[key] = value;
  doc["reports"] = std::move(list);
  doc["all_pass"] = all_pass;
  return {all_pass ? kExitPass : kExitFail, {{command + ".json", doc.dump(2) + "\n"}}};
}

/// Trial 0 is the base time; later trials offset t1..t3 by up to 0.5 per axis.
inline TimeVector trial_times(const TimeVector& base, int trial, Xoshiro256& rng) {
  if (trial == 0) return base;
  TimeVector t = base;
  for (int i = 1; i <= std::min(3, base.size()); ++i) t = t.shifted(i, rng.unit_square());
  return t;
}

inline std::string csv_header(const TimeGrid& grid) {
  std::string h = "t1";
  if (grid.t2) h += ",t2";
  if (grid.t3) h += ",t3";
  return h + ",re,im,log_magnitude,pole\n";
}

inline void csv_row(std::string& out, const TimeGrid& grid, const std::array<double, 3>& coords, Complex value,
                    double log_magnitude, bool pole) {
  out += format_double(coords[0]);
  if (grid.t2) out += "," + format_double(coords[1]);
  if (grid.t3) out += "," + format_double(coords[2]);
  out += "," + format_double(value.real()) + "," + format_double(value.imag()) + "," + format_double(log_magnitude) +
         "," + (pole ? "1" : "0") + "\n";
}

inline CommandResult run_validate(const CommandContext& ctx) {
  const RankOneTriple raw = assemble_triple(ctx.scenario);
  const TripleReport report = validate_triple(raw);
  Json doc;
  doc["command"] = "validate";
  doc["kind"] = kind_name(ctx.scenario.kind);
  doc["n"] = raw.n();
  doc["N"] = raw.N();
  doc["report"] = triple_report_json(report);
  bool pass = report.admissible;
  if (pass) {
    try {
      (void)materialize(ctx.scenario);
    } catch (const Error& e) {
      pass = false;
      doc["builder_error"] = e.what();
    }
  }
  doc["all_pass"] = pass;
  return {pass ? kExitPass : kExitFail, {{"validate.json", doc.dump(2) + "\n"}}};
}

inline CommandResult run_tau_grid(const CommandContext& ctx, const RankOneTriple& tr) {
  const TimeGrid grid = ctx.time_grid("tau-grid");
  const auto samples = sample_field(tr, grid, ctx.times(), [](const TimeVector&) { return Complex{}; });
  std::string csv = csv_header(grid);
  for (const auto& s : samples)
    csv_row(csv, grid, s.coords, s.tau.value(),
            s.tau.is_zero() ? -std::numeric_limits<double>::infinity() : s.tau.log_magnitude(), s.pole);
  return {kExitPass, {{"tau-grid.csv", std::move(csv)}}};
}

inline CommandResult run_u_grid(const CommandContext& ctx, const RankOneTriple& tr) {
  const TimeGrid grid = ctx.time_grid("u-grid");
  const auto samples = u_field(tr, grid, ctx.times());
  std::string csv = csv_header(grid);
  for (const auto& s : samples) {
    const double mag = std::abs(s.value);
    csv_row(csv, grid, s.coords, s.value, mag > 0 ? std::log(mag) : -std::numeric_limits<double>::infinity(), s.pole);
  }
  return {kExitPass, {{"u-grid.csv", std::move(csv)}}};
}

inline CommandResult run_psi_grid(const CommandContext& ctx, const RankOneTriple& tr) {
  const auto x = ctx.grid(ctx.flags.t1, ctx.scenario.options.grids.t1);
  const auto z = ctx.grid(ctx.flags.z, ctx.scenario.options.grids.z);
  if (!x || !z) throw UsageError("psi-grid needs t1 and z grids (--t1, --z or options.grids)");
  const TimeVector base = ctx.times();
  std::string csv = "t1,z,re,im,log_magnitude,pole\n";
  const double nan = std::nan("");
  for (int i = 0; i < x->count; ++i)
    for (int j = 0; j < z->count; ++j) {
      const double xi = x->at(i);
      const double zj = z->at(j);
      csv += format_double(xi) + "," + format_double(zj) + ",";
      bool pole = zj == 0.0;
      ScaledComplex value;
      if (!pole) {
        try {
          value = psi_time(tr, base.with(1, xi), zj).value;
        } catch (const PoleError&) {
          pole = true;
        }
      }
      if (pole) {
        csv += format_double(nan) + "," + format_double(nan) + "," + format_double(nan) + ",1\n";
      } else {
        const Complex v = value.value();
        csv += format_double(v.real()) + "," + format_double(v.imag()) + "," +
               format_double(value.is_zero() ? -std::numeric_limits<double>::infinity() : value.log_magnitude()) +
               ",0\n";
      }
    }
  return {kExitPass, {{"psi-grid.csv", std::move(csv)}}};
}

inline CommandResult run_verify_hbde(const CommandContext& ctx, const RankOneTriple& tr) {
  Xoshiro256 rng(ctx.seed());
  const double tol = ctx.tolerance(kHbdeTolerance);
  const TimeVector t = ctx.times();
  std::vector<VerificationReport> reports;
  for (int trial = 0; trial < ctx.trials(); ++trial) {
    const auto c = ctx.scenario.options.c ? *ctx.scenario.options.c : draw_lattice_parameters(rng, tr.B());
    const int corner = trial % 8;
    reports.push_back(hbde_residual(tr, t, c[0], c[1], c[2], corner & 1, (corner >> 1) & 1, corner >> 2, tol));
  }
  return reports_result("verify-hbde", ctx, reports);
}

inline CommandResult run_verify_kp(const CommandContext& ctx, const RankOneTriple& tr) {
  Xoshiro256 rng(ctx.seed());
  const double tol = ctx.tolerance(kKpTolerance);
  const TimeVector base = ctx.times();
  std::vector<VerificationReport> reports;
  for (int trial = 0; trial < ctx.trials(); ++trial) {
    const TimeVector t = trial_times(base, trial, rng);
    auto r = kp_residual(tr, t, tol);
    r.context["t1"] = complex_json(t(1));
    reports.push_back(std::move(r));
  }
  return reports_result("verify-kp", ctx, reports);
}

inline CommandResult run_verify_h3(const CommandContext& ctx, const RankOneTriple& tr) {
  const double tol = ctx.tolerance(kIdentityTolerance);
  const auto& mats = ctx.scenario.matrices;
  std::vector<VerificationReport> reports;
  if (mats.count("P") && mats.count("Q")) {
    const auto c = ctx.scenario.options.c.value_or(std::array<Complex, 3>{1.0, 2.0, 3.0});
    reports.push_back(h3_residual(mats.at("P"), mats.at("Q"), c[0], c[1], c[2], tol));
  } else {
    Xoshiro256 rng(ctx.seed());
    const Eigen::Index n = tr.n();
    for (int trial = 0; trial < ctx.trials(); ++trial) {
      const CMatrix p = random_matrix(rng, n, n);
      const CMatrix q = random_matrix(rng, n, 1) * random_matrix(rng, 1, n);
      const Complex c1 = 3.0 * rng.unit_square(), c2 = 3.0 * rng.unit_square(), c3 = 3.0 * rng.unit_square();
      reports.push_back(h3_residual(p, q, c1, c2, c3, tol));
    }
  }
  return reports_result("verify-h3", ctx, reports);
}

inline CommandResult run_bethe(const CommandContext& ctx) {
  if (ctx.scenario.kind != ScenarioKind::calogero_moser) throw ParseError("bethe needs a calogero_moser scenario");
  const auto& o = ctx.scenario.options;
  const auto report = bethe_check(calogero_moser_data(ctx.scenario), o.eta.value_or(1.0), o.lambda1.value_or(2.0),
                                  o.lambda2.value_or(3.0), o.m.value_or(1), ctx.tolerance(kBetheTolerance));
  return reports_result("bethe", ctx, {report});
}

inline CommandResult run_spectral(const CommandContext& ctx, const RankOneTriple& tr) {
  const auto support = grassmann_support(tr);
  Json points = Json::array();
  for (const auto& p : support.points) points.push_back({{"value", complex_json(p.value)}, {"multiplicity", p.multiplicity}});
  Json extra = {{"support", std::move(points)}, {"char_poly_degree", support.char_poly_degree}};
  PolynomialityOptions options;
  options.tolerance = ctx.tolerance(kHbdeTolerance);
  return reports_result("spectral", ctx, {polynomiality_check(tr, ctx.times(), options)}, std::move(extra));
}

inline CommandResult run_crosscheck(const CommandContext& ctx) {
  Xoshiro256 rng(ctx.seed());
  const double tol = ctx.tolerance(kIdentityTolerance);
  const TimeVector base = ctx.times();
  std::vector<VerificationReport> reports;
  for (int trial = 0; trial < ctx.trials(); ++trial) {
    const TimeVector t = trial_times(base, trial, rng);
    switch (ctx.scenario.kind) {
      case ScenarioKind::calogero_moser:
        reports.push_back(crosscheck_wilson(calogero_moser_data(ctx.scenario), t, tol));
        break;
      case ScenarioKind::intertwining:
        if (ctx.scenario.matrices.count("C")) throw ParseError("crosscheck needs the default C = [I I]");
        reports.push_back(crosscheck_intertwining(intertwining_data(ctx.scenario), t, tol));
        break;
      case ScenarioKind::kdv_pair:
        reports.push_back(crosscheck_intertwining(intertwining_data(ctx.scenario), t, tol));
        break;
      case ScenarioKind::general:
        throw ParseError("crosscheck needs a calogero_moser, intertwining or kdv_pair scenario");
    }
  }
  return reports_result("crosscheck", ctx, reports);
}

}  // namespace detail

/// Runs one command on a parsed scenario. Library errors propagate; run_cli
/// maps them to exit codes.
inline CommandResult run_command(const std::string& command, const Scenario& scenario, const CommandFlags& flags = {},
                                 const char* env_tolerance = std::getenv("KP_RANKONE_TOL")) {
  bool known = false;
  for (const auto& name : command_names()) known = known || name == command;
  if (!known) throw UsageError("unknown command \"" + command + "\"");
  if (flags.trials && *flags.trials < 1) throw UsageError("--trials must be >= 1");
  if (flags.truncation && *flags.truncation < 1) throw UsageError("--K must be >= 1");
  if (flags.tolerance && !(*flags.tolerance > 0)) throw UsageError("--tol must be positive");

  const detail::CommandContext ctx{scenario, flags, env_tolerance};
  if (command == "validate") return detail::run_validate(ctx);

  const RankOneTriple tr = materialize(scenario);
  if (command == "bethe") return detail::run_bethe(ctx);
  if (command == "crosscheck") return detail::run_crosscheck(ctx);
  if (command == "tau-grid") return detail::run_tau_grid(ctx, tr);
  if (command == "u-grid") return detail::run_u_grid(ctx, tr);
  if (command == "psi-grid") return detail::run_psi_grid(ctx, tr);
  if (command == "verify-hbde") return detail::run_verify_hbde(ctx, tr);
  if (command == "verify-kp") return detail::run_verify_kp(ctx, tr);
  if (command == "verify-h3") return detail::run_verify_h3(ctx, tr);
  return detail::run_spectral(ctx, tr);
}

inline void write_outputs(const CommandResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : result.files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / f.name).string());
    out << f.content;
  }
}

}  // namespace kp_rankone
