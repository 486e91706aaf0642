#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "kp_rankone/commands.hpp"
#include "oracles.hpp"

using namespace kp_rankone;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = KP_SCENARIO_DIR;

Scenario load(const std::string& name) { return parse_scenario_text(read_text_file((kScenarios / name).string())); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream cell_stream(line);
    std::string cell;
    while (std::getline(cell_stream, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

Json output_json(const CommandResult& r) { return Json::parse(r.files.at(0).content); }

int run_binary(const std::string& args) {
  const int status = std::system((std::string(KP_RANKONE_BIN) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(GridSpec, Parses) {
  const auto g = parse_grid_spec("-5:5:201");
  EXPECT_EQ(g.start, -5.0);
  EXPECT_EQ(g.end, 5.0);
  EXPECT_EQ(g.count, 201);
  EXPECT_EQ(g.at(0), -5.0);
  EXPECT_EQ(g.at(200), 5.0);
  EXPECT_EQ(parse_grid_spec("1.5e-1:2:1").start, 0.15);
  for (const char* bad : {"", "1:2", "1:2:3:4", "a:2:3", "1:2:0", "1:2:x", "1::3", "1:2:3.5"})
    EXPECT_THROW(parse_grid_spec(bad), ParseError) << bad;
}

TEST(Scenario, RoundTripsEveryShippedScenario) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const Scenario s = parse_scenario_text(read_text_file(entry.path().string()));
    const Scenario back = parse_scenario(Json::parse(serialize(s).dump()));
    EXPECT_TRUE(back == s) << entry.path();
    EXPECT_EQ(serialize(back).dump(), serialize(s).dump()) << entry.path();
  }
  EXPECT_GE(count, 5);
}

TEST(Scenario, RoundTripIsBitExact) {
  Xoshiro256 rng(51);
  Scenario s;
  s.kind = ScenarioKind::intertwining;
  s.matrices = {{"X", random_matrix(rng, 2, 3)}, {"Y", random_matrix(rng, 2, 2)}, {"Z", random_matrix(rng, 3, 3)},
                {"C", random_matrix(rng, 2, 5)}};
  s.times = {rng.unit_square() * 1e-300, rng.unit_square() * 1e300, Complex(1.0 / 3.0, -0.1)};
  s.options.tolerance = 1e-7 / 3.0;
  s.options.truncation = 3;
  s.options.seed = 18446744073709551615ULL;
  s.options.trials = 4;
  s.options.grids.t2 = GridRange{-0.1, 0.3, 7};
  s.options.c = std::array<Complex, 3>{rng.unit_square(), rng.unit_square(), rng.unit_square()};
  s.options.eta = rng.unit_square();
  s.options.m = -2;
  const Scenario back = parse_scenario_text(serialize(s).dump(2));
  EXPECT_TRUE(back == s);
  EXPECT_FALSE(back.options.lambda1.has_value());
  EXPECT_FALSE(back.options.grids.t1.has_value());
}

TEST(Scenario, ParseErrors) {
  EXPECT_THROW(parse_scenario_text("{\"kind\": \"general\",\n \"matrices\": {,}}"), ParseError);
  try {
    parse_scenario_text("{\n\"kind\": \"general\",\n\"matrices\": [}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_scenario_text(R"({"kind": "other", "matrices": {}})"), ParseError);
  EXPECT_THROW(parse_scenario_text(R"({"kind": "calogero_moser", "matrices": {}})"), ParseError);
  const std::string x = R"("X": {"rows": 1, "cols": 1, "data": [[[3, 0]]]})";
  EXPECT_THROW(parse_scenario_text(R"({"kind": "calogero_moser", "matrices": {)" + x +
                                   R"(, "Z": {"rows": 1, "cols": 1, "data": [[3]]}}})"),
               ParseError);
  EXPECT_THROW(parse_scenario_text(R"({"kind": "calogero_moser", "matrices": {)" + x +
                                   R"(, "Z": {"rows": 1, "cols": 2, "data": [[[3, 0]]]}}})"),
               DimensionError);
  EXPECT_THROW(parse_scenario_text(R"({"kind": "calogero_moser", "matrices": {)" + x + R"(, "Z": )" +
                                   x.substr(5) + R"(}, "options": {"seed": -1}})"),
               ParseError);
}

TEST(Scenario, LoadsAdmissibleGeneral) {
  const auto loaded = load_scenario((kScenarios / "one_soliton.json").string());
  EXPECT_EQ(loaded.triple.n(), 1);
  EXPECT_TRUE(validate_triple(loaded.triple).admissible);
}

TEST(Scenario, RejectsRankTwoCalogeroMoserWithReport) {
  try {
    (void)load_scenario((kScenarios / "calogero_moser_rank2.json").string());
    FAIL() << "expected rejection";
  } catch (const ScenarioRejected& e) {
    EXPECT_EQ(e.report().rank_of_ABUt, 2);
    EXPECT_FALSE(e.report().admissible);
    EXPECT_NE(std::string(e.what()).find("rank_of_ABUt"), std::string::npos);
  }
}

TEST(Scenario, TruncationKeepsNonzeroTimes) {
  Scenario s = load("one_soliton.json");
  s.times = {0.5, 0.0, 0.25};
  EXPECT_EQ(scenario_times(s, 5).size(), 5);
  EXPECT_EQ(scenario_times(s, 3).size(), 3);
  EXPECT_THROW(scenario_times(s, 2), DimensionError);
}

TEST(Commands, ValidateAdmissibleAndRejected) {
  const auto ok = run_command("validate", load("general_2x5.json"));
  EXPECT_EQ(ok.exit_code, kExitPass);
  EXPECT_EQ(ok.files.at(0).name, "validate.json");
  EXPECT_LE(output_json(ok)["report"]["rank_of_ABUt"].get<int>(), 1);

  const auto bad = run_command("validate", load("calogero_moser_rank2.json"));
  EXPECT_EQ(bad.exit_code, kExitFail);
  EXPECT_EQ(output_json(bad)["report"]["rank_of_ABUt"].get<int>(), 2);
  EXPECT_THROW(run_command("tau-grid", load("calogero_moser_rank2.json"), {.t1 = GridRange{0, 1, 2}}),
               InadmissibleError);
}

TEST(Commands, KdvTauGridMatchesSoliton) {
  const auto r = run_command("tau-grid", load("kdv_soliton.json"));
  const auto rows = parse_csv(r.files.at(0).content);
  ASSERT_EQ(rows.size(), 102u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t1", "re", "im", "log_magnitude", "pole"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t1 = std::stod(rows[i][0]);
    const double expected = std::exp(t1) + std::exp(-t1);
    EXPECT_LT(std::abs(std::stod(rows[i][1]) - expected), 1e-13 * expected) << t1;
    EXPECT_LT(std::abs(std::stod(rows[i][3]) - std::log(expected)), 1e-13);
    EXPECT_EQ(rows[i][4], "0");
  }
}

TEST(Commands, WilsonUGrid) {
  const auto r = run_command("u-grid", load("wilson_n1.json"), {.t1 = parse_grid_spec("-5:5:201")});
  const auto rows = parse_csv(r.files.at(0).content);
  ASSERT_EQ(rows.size(), 202u);
  int poles = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t1 = std::stod(rows[i][0]);
    if (rows[i][4] == "1") {
      ++poles;
      EXPECT_NEAR(t1, -3.0, 1e-12);
      EXPECT_EQ(rows[i][1], "nan");
      continue;
    }
    const double expected = -2.0 / ((t1 + 3) * (t1 + 3));
    EXPECT_LT(std::abs(std::stod(rows[i][1]) - expected), 1e-6 * std::max(1.0, std::abs(expected))) << t1;
  }
  EXPECT_EQ(poles, 1);
}

TEST(Commands, PsiGridWilson) {
  const auto r = run_command("psi-grid", load("wilson_n1.json"), {.t1 = GridRange{0, 1, 2}, .z = GridRange{1, 2, 2}});
  const auto rows = parse_csv(r.files.at(0).content);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "t1");
  EXPECT_EQ(rows[0][1], "z");
  // (t1, z) = (0, 1): psi = 2/3
  EXPECT_NEAR(std::stod(rows[1][2]), 2.0 / 3.0, 1e-15);
  // (1, 1): (1 - 1/4) e
  EXPECT_NEAR(std::stod(rows[3][2]), 0.75 * std::exp(1.0), 1e-14);
}

TEST(Commands, VerifyHbdeFiftyTrials) {
  const auto r = run_command("verify-hbde", load("general_2x5.json"), {.seed = 7, .trials = 50});
  EXPECT_EQ(r.exit_code, kExitPass);
  const Json doc = output_json(r);
  ASSERT_EQ(doc["reports"].size(), 50u);
  for (const auto& rep : doc["reports"]) {
    EXPECT_LT(rep["residual"].get<double>(), 1e-8);
    EXPECT_TRUE(rep["pass"].get<bool>());
  }
  EXPECT_TRUE(doc["all_pass"].get<bool>());
}

TEST(Commands, FailingReportsExitOne) {
  const auto r = run_command("verify-hbde", load("general_2x5.json"), {.trials = 3, .tolerance = 1e-300});
  EXPECT_EQ(r.exit_code, kExitFail);
  EXPECT_FALSE(output_json(r)["all_pass"].get<bool>());
}

TEST(Commands, VerifyKpAndH3) {
  const auto kp = run_command("verify-kp", load("one_soliton.json"), {.trials = 3});
  EXPECT_EQ(kp.exit_code, kExitPass);
  EXPECT_EQ(output_json(kp)["reports"].size(), 3u);

  const auto h3 = run_command("verify-h3", load("h3_scalar.json"));
  EXPECT_EQ(h3.exit_code, kExitPass);
  const Json doc = output_json(h3);
  EXPECT_EQ(doc["reports"][0]["residual"].get<double>(), 0.0);
  EXPECT_EQ(doc["reports"][0]["context"]["printed"][0].get<double>(), 8.0);

  const auto random_h3 = run_command("verify-h3", load("general_2x5.json"), {.trials = 20});
  EXPECT_EQ(random_h3.exit_code, kExitPass);
}

TEST(Commands, BetheSpectralCrosscheck) {
  const auto bethe = run_command("bethe", load("calogero_moser_n3.json"));
  EXPECT_EQ(bethe.exit_code, kExitPass);
  EXPECT_THROW(run_command("bethe", load("one_soliton.json")), ParseError);

  const auto spectral = run_command("spectral", load("one_soliton.json"));
  EXPECT_EQ(spectral.exit_code, kExitPass);
  const Json doc = output_json(spectral);
  ASSERT_EQ(doc["support"].size(), 2u);
  EXPECT_EQ(doc["char_poly_degree"].get<int>(), 2);

  const auto wilson = run_command("crosscheck", load("calogero_moser_n3.json"));
  EXPECT_EQ(wilson.exit_code, kExitPass);
  EXPECT_EQ(output_json(wilson)["reports"].size(), 5u);
  EXPECT_EQ(run_command("crosscheck", load("intertwining_scalar.json")).exit_code, kExitPass);
  EXPECT_EQ(run_command("crosscheck", load("kdv_soliton.json")).exit_code, kExitPass);
  EXPECT_THROW(run_command("crosscheck", load("one_soliton.json")), ParseError);
}

TEST(Commands, UsageErrors) {
  const Scenario s = load("one_soliton.json");
  EXPECT_THROW(run_command("frobnicate", s), UsageError);
  Scenario no_grid = s;
  no_grid.options.grids = {};
  EXPECT_THROW(run_command("u-grid", no_grid), UsageError);
  EXPECT_THROW(run_command("psi-grid", s), UsageError);
  EXPECT_THROW(run_command("verify-kp", s, {.trials = 0}), UsageError);
}

TEST(Commands, TolerancePrecedence) {
  Scenario s = load("one_soliton.json");
  EXPECT_EQ(resolve_tolerance({}, s, 1e-8, nullptr), 1e-8);
  EXPECT_EQ(resolve_tolerance({}, s, 1e-8, "1e-5"), 1e-5);
  s.options.tolerance = 1e-6;
  EXPECT_EQ(resolve_tolerance({}, s, 1e-8, "1e-5"), 1e-6);
  EXPECT_EQ(resolve_tolerance({.tolerance = 1e-3}, s, 1e-8, "1e-5"), 1e-3);
  s.options.tolerance.reset();
  EXPECT_THROW(resolve_tolerance({}, s, 1e-8, "abc"), UsageError);
  const auto r = run_command("verify-hbde", s, {}, "1e-4");
  EXPECT_EQ(output_json(r)["reports"][0]["tolerance"].get<double>(), 1e-4);
}

TEST(Commands, Deterministic) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"verify-hbde", "general_2x5.json"}, {"verify-kp", "general_2x5.json"}, {"verify-h3", "general_2x5.json"},
      {"tau-grid", "general_2x5.json"},    {"psi-grid", "general_2x5.json"},  {"spectral", "general_2x5.json"},
      {"u-grid", "wilson_n1.json"},        {"bethe", "calogero_moser_n3.json"}, {"crosscheck", "calogero_moser_n3.json"},
      {"validate", "general_2x5.json"}};
  for (const auto& [cmd, file] : cases) {
    const Scenario s = load(file);
    const auto a = run_command(cmd, s, {.seed = 99, .trials = 4});
    const auto b = run_command(cmd, load(file), {.seed = 99, .trials = 4});
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(a.files[i].content, b.files[i].content) << cmd;
  }
}

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
  Xoshiro256 rng(52);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), rng.uniform_int(-1000, 1000));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Binary, ExitCodesAndFiles) {
  const fs::path out = fs::temp_directory_path() / "kp_rankone_cli_test";
  fs::remove_all(out);
  const std::string scen = (kScenarios / "general_2x5.json").string();
  EXPECT_EQ(run_binary("verify-hbde " + scen + " --trials 50 --seed 7 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "verify-hbde.json"));
  EXPECT_EQ(run_binary("verify-hbde " + scen + " --trials 2 --tol 1e-300 --out " + out.string()), 1);
  EXPECT_EQ(run_binary("frobnicate " + scen + " --out " + out.string()), 2);
  EXPECT_EQ(run_binary("u-grid " + scen + " --t1 1:2 --out " + out.string()), 2);
  EXPECT_EQ(run_binary("validate " + (kScenarios / "missing.json").string() + " --out " + out.string()), 3);
  EXPECT_EQ(run_binary("tau-grid " + (kScenarios / "calogero_moser_rank2.json").string() + " --t1 0:1:2 --out " +
                       out.string()),
            3);
  EXPECT_EQ(run_binary("validate " + (kScenarios / "calogero_moser_rank2.json").string() + " --out " + out.string()),
            1);
  EXPECT_EQ(run_binary("u-grid " + (kScenarios / "wilson_n1.json").string() + " --t1 -5:5:201 --out " + out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "u-grid.csv"));
  fs::remove_all(out);
}
