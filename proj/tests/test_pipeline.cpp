#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "platoon/errors.hpp"
#include "platoon/pipeline.hpp"

using namespace platoon;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig worked_config() {
  RunConfig cfg;
  cfg.scenario.network_file = PLATOON_FIXTURES "/worked_network.json";
  cfg.assignments_file = PLATOON_FIXTURES "/worked_assignments.json";
  return cfg;
}

RunConfig grid_config(std::size_t n, std::uint64_t seed) {
  RunConfig cfg;
  cfg.scenario.grid = {8, 8, 10000};
  cfg.scenario.assignments = n;
  cfg.scenario.seed = seed;
  return cfg;
}

double route_sum(const RoadNetwork& net, const RunResult& run) {
  double total = 0.0;
  for (const auto& p : run.default_plans) total += route_length(net, p.route);
  return total;
}

}  // namespace

TEST_CASE("config defaults, files and errors") {
  const RunConfig d = run_config_from_text("{}");
  CHECK(d.selection == SelectionRule::kGreedy);
  CHECK(d.scenario.start_window_s == 7200);
  CHECK(d.solver.max_iter == 200);
  CHECK(d.solver.tol == 1e-8);
  CHECK(d.fuel.v_max == doctest::Approx(25.0));

  const RunConfig c = run_config_from_text(R"({"selection": "random", "seed": 5,
    "exact": {"enabled": true, "limit": 12}, "solver": {"tol": 1e-9},
    "fuel": {"v_max_kmh": 85}, "scenario": {"assignments": 12, "network": {"type": "grid", "rows": 3, "cols": 4}}})");
  CHECK(c.selection == SelectionRule::kRandom);
  CHECK(c.seed == 5);
  CHECK(c.exact_enabled);
  CHECK(c.exact_limit == 12);
  CHECK(c.solver.tol == 1e-9);
  CHECK(c.fuel.v_max == doctest::Approx(85 / 3.6));
  CHECK(c.scenario.grid.cols == 4);

  CHECK_THROWS_WITH_AS(run_config_from_text("{\n  \"selection\": \"greedy\",\n  \"colour\": 1\n}", "c.json"),
                       doctest::Contains("c.json:3:"), InputError);
  CHECK_THROWS_AS(run_config_from_text("{\"selection\": \"best\"}"), InputError);
  CHECK_THROWS_AS(run_config_from_text("{\"solver\": {\"max_iter\": -1}}"), InputError);
  CHECK_THROWS_AS(run_config_from_text("{\"fuel\": {\"a0\": -1}}"), InputError);
  CHECK_THROWS_AS(run_config_from_text("[1,2"), InputError);

  const RunConfig round = run_config_from_text(run_config_to_json(c).dump());
  CHECK(run_config_to_json(round) == run_config_to_json(c));
}

TEST_CASE("settings and environment overrides") {
  RunConfig cfg;
  apply_setting(cfg, "solver.tol", "1e-7");
  apply_setting(cfg, "scenario.assignments", "33");
  apply_setting(cfg, "selection", "random");
  apply_setting(cfg, "output_dir", "elsewhere");
  CHECK(cfg.solver.tol == 1e-7);
  CHECK(cfg.scenario.assignments == 33);
  CHECK(cfg.selection == SelectionRule::kRandom);
  CHECK(cfg.output_dir == "elsewhere");
  apply_setting(cfg, "scenario.network.rows", "5");
  CHECK(cfg.scenario.grid.rows == 5);
  CHECK_THROWS_AS(apply_setting(cfg, "solver.nope", "1"), InputError);
  CHECK_THROWS_AS(apply_setting(cfg, "scenario.assignments", "many"), InputError);

  std::string a = "PLATOON_SOLVER__MAX_ITER=50", b = "PLATOON_SEED=77", c = "HOME=/root", e = "PLATOON_VERIFY=false";
  char* env[] = {a.data(), b.data(), c.data(), e.data(), nullptr};
  apply_env_overrides(cfg, env);
  CHECK(cfg.solver.max_iter == 50);
  CHECK(cfg.seed == 77);
  CHECK_FALSE(cfg.verify);
}

TEST_CASE("worked pair end to end") {
  RunConfig cfg = worked_config();
  cfg.exact_enabled = true;
  const RunInput in = prepare_input(cfg);
  const RunResult run = run_pipeline(in.net, in.assignments, cfg);
  const RunReport& r = run.report;
  CHECK(r.assignments == 2);
  CHECK(r.leaders == 1);
  CHECK(r.followers == 1);
  CHECK(r.fuel_default_kg - r.fuel_stage3_kg == doctest::Approx(2.98).epsilon(0.005 / 2.98));
  CHECK(r.objective_kg == doctest::Approx(r.fuel_default_kg - r.fuel_stage3_kg).epsilon(1e-9));
  CHECK(r.fuel_stage4_kg <= r.fuel_stage3_kg);
  CHECK(r.upper_bound_kg >= r.objective_kg);
  REQUIRE(r.exact_objective_kg);
  CHECK(*r.exact_objective_kg == doctest::Approx(r.objective_kg));
  REQUIRE(run.verification);
  CHECK(run.verification->ok());
  CHECK(run.verification->intervals_checked == 2);  // stage 3 and stage 4
  CHECK(run.roles[0] == Role::kFollower);
  CHECK(run.roles[1] == Role::kLeader);
}

TEST_CASE("empty and degenerate inputs") {
  RunConfig cfg = grid_config(0, 1);
  const RunInput in = prepare_input(cfg);
  const RunResult run = run_pipeline(in.net, in.assignments, cfg);
  CHECK(run.report.assignments == 0);
  CHECK(run.report.saving_stage4() == 0.0);
  CHECK(run.report.upper_bound_kg == 0.0);
  CHECK(run.stage4_plans.empty());

  RunConfig bad = worked_config();
  bad.assignments_file = PLATOON_FIXTURES "/infeasible_assignments.json";
  const RunInput bin = prepare_input(bad);
  CHECK_THROWS_AS(run_pipeline(bin.net, bin.assignments, bad), InfeasibleError);
}

TEST_CASE("unreachable assignments are disregarded") {
  RunConfig cfg = worked_config();
  RunInput in = prepare_input(cfg);
  // From the leader's last edge back to the follower's first: no path.
  in.assignments.push_back({42, {*in.net.find_edge(12), 5000}, {*in.net.find_edge(13), 9500}, 0, 1e5});
  const RunResult run = run_pipeline(in.net, in.assignments, cfg);
  CHECK(run.disregarded == std::vector<AssignmentId>{42});
  CHECK(run.report.assignments == 2);
  CHECK(run.report.disregarded == 1);
}

TEST_CASE("stage ordering and accounting on grid scenarios") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunConfig cfg = grid_config(60, seed);
    const RunInput in = prepare_input(cfg);
    const RunResult run = run_pipeline(in.net, in.assignments, cfg);
    const RunReport& r = run.report;
    CHECK(r.fuel_stage4_kg <= r.fuel_stage3_kg + 1e-9);
    CHECK(r.fuel_stage3_kg <= r.fuel_default_kg + 1e-9);
    CHECK(r.fuel_spontaneous_kg <= r.fuel_default_kg);
    CHECK(r.upper_bound_kg >= r.objective_kg - 1e-12);
    CHECK(r.objective_kg == doctest::Approx(r.fuel_default_kg - r.fuel_stage3_kg).epsilon(1e-9));
    double hist = 0.0;
    for (const auto& [size, meters] : r.histogram) hist += meters;
    CHECK(hist == doctest::Approx(route_sum(in.net, run)).epsilon(1e-12));
    REQUIRE(run.verification);
    CHECK(run.verification->ok());
  }
}

TEST_CASE("parallel and sequential runs agree") {
  RunConfig cfg = grid_config(80, 3);
  const RunInput in = prepare_input(cfg);
  const RunResult a = run_pipeline(in.net, in.assignments, cfg);
  cfg.jobs = 3;
  const RunResult b = run_pipeline(in.net, in.assignments, cfg);
  CHECK(report_to_json(a.report) == report_to_json(b.report));
}

TEST_CASE("output files are reproducible") {
  const auto root = std::filesystem::temp_directory_path() / "platoon_pipeline_test";
  std::filesystem::remove_all(root);
  RunConfig cfg = grid_config(40, 8);
  for (const char* name : {"a", "b"}) {
    const RunInput in = prepare_input(cfg);
    write_run(in.net, run_pipeline(in.net, in.assignments, cfg), (root / name).string());
  }
  for (const char* f : {"plans.json", "leaders.json", "report.json", "graph.csv", "histogram.csv", "savings.csv"}) {
    CHECK_MESSAGE(std::filesystem::exists(root / "a" / f), f);
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  }
  const auto report = nlohmann::json::parse(slurp(root / "a" / "report.json"));
  CHECK(report.at("verification").at("intervals_bad") == 0);
  std::filesystem::remove_all(root);
}

TEST_CASE("monte carlo rows are deterministic") {
  RunConfig cfg = grid_config(10, 21);
  const std::vector<std::size_t> sizes{10};
  const auto a = run_montecarlo(cfg, sizes, 3);
  const auto b = run_montecarlo(cfg, sizes, 3);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].seed == 21 + i);
    CHECK(a[i].status == "ok");
    CHECK(a[i].saving_stage3 == b[i].saving_stage3);
    CHECK(a[i].saving_stage4 == b[i].saving_stage4);
    CHECK(a[i].saving_spontaneous == b[i].saving_spontaneous);
    CHECK(a[i].upper_bound_rel == b[i].upper_bound_rel);
    CHECK(a[i].saving_stage4 >= a[i].saving_stage3);
  }
  const std::string csv = montecarlo_csv(a);
  CHECK(csv.rfind("size,seed,saving_stage3,saving_stage4,saving_spontaneous,upper_bound_rel,wallclock_s", 0) == 0);
  CHECK(montecarlo_summary_csv(a).find("\n10,3,0,") != std::string::npos);
}

TEST_CASE("monte carlo records failures and continues") {
  RunConfig cfg = grid_config(10, 1);
  cfg.scenario.grid = {3, 3, 10000};
  cfg.scenario.node_weights.assign(9, 0.0);
  cfg.scenario.node_weights[0] = 1.0;
  const std::vector<std::size_t> sizes{0, 4};
  const auto rows = run_montecarlo(cfg, sizes, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].status == "ok");
  CHECK(rows[2].status != "ok");
  CHECK(rows[3].status != "ok");
}
