#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "guided/errors.hpp"
#include "guided/io.hpp"

using namespace guided;
using nlohmann::json;

namespace {

json small_model() {
  return json::parse(R"({
    "version": "guided-model/1",
    "costs": {"miss": 3, "false_alarm": 1},
    "prior": 0.2,
    "lambda": 0.01,
    "grid": 201,
    "stages": [
      {"name": "cheap", "p0": [0.5, 0.3, 0.2], "p1": [0.2, 0.3, 0.5], "on_cost": 1, "off_cost": 0,
       "uncertainty": {"eps0": 0, "eps1": 0, "nu0": 0, "nu1": 0}},
      {"name": "full", "p0": [0.7, 0.2, 0.1], "p1": [0.1, 0.2, 0.7], "on_cost": 10, "off_cost": 1}
    ]
  })");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::input;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("load, dump, load round-trips") {
    const auto f = parse_model(small_model());
    const auto again = parse_model(json::parse(to_json(f).dump()));
    CHECK(to_json(again) == to_json(f));
    CHECK(config_hash(again) == config_hash(f));
    const auto fixture = make_fixture();
    const auto fx = parse_model(json::parse(to_json(fixture).dump()));
    CHECK(to_json(fx) == to_json(fixture));
    CHECK(config_hash(fx).size() == 16);
  }

  TEST_CASE("schema errors name the stage") {
    auto doc = small_model();
    doc["stages"][1]["p0"] = {0.25, 0.15, 0.1};
    try {
      parse_model(doc);
      FAIL("expected schema error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::schema);
      CHECK(std::string(e.what()).find("'full'") != std::string::npos);
    }
    auto version = small_model();
    version["version"] = "other/2";
    CHECK(kind_of([&] { parse_model(version); }) == ErrorKind::schema);
    auto missing = small_model();
    missing["stages"][0].erase("on_cost");
    CHECK(kind_of([&] { parse_model(missing); }) == ErrorKind::schema);
    auto lengths = small_model();
    lengths["stages"][0]["p1"] = {0.5, 0.5};
    CHECK(kind_of([&] { parse_model(lengths); }) == ErrorKind::schema);
    auto single = small_model();
    single["stages"].erase(1);
    CHECK(kind_of([&] { parse_model(single); }) == ErrorKind::schema);
  }

  TEST_CASE("slightly off PMFs are renormalized with a warning") {
    auto doc = small_model();
    doc["stages"][0]["p0"] = {0.5, 0.3, 0.2 + 5e-7};
    std::vector<std::string> warnings;
    const auto f = parse_model(doc, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("renormalized") != std::string::npos);
    double sum = 0;
    for (double x : f.stages[0].p0) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("robustify with zero uncertainty is the identity") {
    const auto f = parse_model(small_model());
    ModelFile out;
    const auto report = cmd_robustify(f, out);
    CHECK(out.stages[0].p0 == f.stages[0].p0);
    CHECK(out.stages[0].p1 == f.stages[0].p1);
    CHECK(report["stages"][0]["lower"].get<double>() == doctest::Approx(0.4));
    CHECK(report["stages"][0]["upper"].get<double>() == doctest::Approx(2.5));
    CHECK(out.robustified);
  }

  TEST_CASE("robustify on the fixture records tiny residuals") {
    ModelFile out;
    const auto report = cmd_robustify(make_fixture(), out);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(report["stages"][k]["residual0"].get<double>()) < 1e-8);
      CHECK(std::abs(report["stages"][k]["residual1"].get<double>()) < 1e-8);
    }
    // Already robustified files pass through unchanged.
    CHECK(to_json(robustify(out)) == to_json(out));
  }

  TEST_CASE("uncertainty on the final stage is ignored with a warning") {
    auto doc = small_model();
    doc["stages"][1]["uncertainty"] = {{"eps0", 0.1}, {"eps1", 0.1}, {"nu0", 0.0}, {"nu1", 0.0}};
    std::vector<std::string> warnings;
    const auto spec = build_system(parse_model(doc), 0.2, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(spec.stages[1].model.p0(0) == 0.7);
  }

  TEST_CASE("optimize emits the closed-form final threshold") {
    const auto out = cmd_optimize(make_fixture(), {});
    const auto th = out["policy"]["thresholds"].get<std::vector<double>>();
    CHECK(th.back() == 0.25);
    CHECK(out["tool_version"] == tool_version);
    CHECK(out["config_hash"] == config_hash(make_fixture()));
    OptimizeOptions zero;
    zero.lambda = 0.0;
    const auto free = cmd_optimize(make_fixture(), zero);
    const auto bounds = free["policy"]["bounds"];
    const auto t0 = free["policy"]["thresholds"].get<std::vector<double>>();
    CHECK(t0[0] == bounds[0][0].get<double>());
    CHECK(t0[1] == bounds[1][0].get<double>());
  }

  TEST_CASE("infeasible budgets and exit codes") {
    OptimizeOptions o;
    o.budget = 0.1;
    try {
      cmd_optimize(make_fixture(), o);
      FAIL("expected infeasible budget");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::infeasible_budget);
      CHECK(exit_code(e.kind()) == 4);
    }
    CHECK(exit_code(ErrorKind::schema) == 3);
    CHECK(exit_code(ErrorKind::numerical) == 5);
    CHECK(exit_code(ErrorKind::schema) != exit_code(ErrorKind::infeasible_band));
  }

  TEST_CASE("simulate is reproducible and honours a policy file") {
    const auto f = parse_model(small_model());
    SimulateOptions o;
    o.stream.n_frames = 50'000;
    o.stream.seed = 9;
    const auto a = cmd_simulate(f, nullptr, o).dump();
    const auto b = cmd_simulate(f, nullptr, o).dump();
    CHECK(a == b);
    const auto policy = cmd_optimize(f, {});
    const auto c = cmd_simulate(f, &policy, o).dump();
    CHECK(json::parse(c)["report"] == json::parse(a)["report"]);
    o.stream.n_frames = 1;
    const auto one = cmd_simulate(f, nullptr, o);
    CHECK(one["report"]["n_frames"] == 1);
    o.stream.mode = SimMode::adaptive;
    o.stream.burn_in = 100;
    o.stream.n_frames = 1000;
    const auto ad = cmd_simulate(f, nullptr, o);
    CHECK(ad["report"]["adaptive"]["final_eta"].size() == 2);
  }

  TEST_CASE("compare sweep rows") {
    CompareOptions o;
    o.n_frames = 200'000;
    const auto table = cmd_compare(make_fixture(), o);
    REQUIRE(table.rows.size() == 11);
    const auto grid = sweep_points(0.05, 0.15, 11);
    for (std::size_t i = 0; i < 11; ++i) {
      const auto& r = table.rows[i];
      CHECK(r.pi0 == grid[i]);
      if (r.dominance_total && r.dominance_saving) CHECK(r.gp_risk <= r.dc_ideal_risk);
      const double se = std::hypot(r.gp_sim.se_energy, r.dc_real_sim.se_energy);
      CHECK(std::abs(r.gp_sim.energy - r.dc_real_sim.energy) <= 3 * se);
    }
    CHECK(grid.front() == 0.05);
    CHECK(grid.back() == 0.15);
    const auto csv = compare_csv(table);
    std::istringstream lines(csv);
    std::string line;
    std::size_t rows = 0;
    bool hash = false;
    while (std::getline(lines, line)) {
      if (line.rfind("# config_hash: " + table.config_hash, 0) == 0) hash = true;
      if (!line.empty() && line[0] != '#') ++rows;
    }
    CHECK(hash);
    CHECK(rows == 12);
  }

  TEST_CASE("graph model files") {
    auto doc = small_model();
    doc["nodes"] = doc["stages"];
    doc.erase("stages");
    doc["nodes"].push_back(doc["nodes"][1]);
    doc["nodes"][2]["name"] = "alt";
    doc["edges"] = {{1, 2}, {1, 3}};
    const auto f = parse_model(doc);
    CHECK(f.is_graph());
    const auto out = cmd_optimize(f, {});
    CHECK(out["policy"]["kind"] == "graph");
    CHECK(out["policy"]["order"] == json::array({2, 3, 1}));
    doc["edges"] = {{1, 2}, {2, 1}};
    CHECK(kind_of([&] { cmd_optimize(parse_model(doc), {}); }) == ErrorKind::graph_invalid);
  }
}
