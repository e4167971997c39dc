#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/platoon.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  platoon_string_free(s);
  return out;
}

struct Loaded {
  platoon_network* net = nullptr;
  platoon_assignments* as = nullptr;
  platoon_config* cfg = nullptr;
  Loaded() {
    REQUIRE(platoon_network_load(PLATOON_FIXTURES "/worked_network.json", &net) == PLATOON_OK);
    REQUIRE(platoon_assignments_load(net, PLATOON_FIXTURES "/worked_assignments.json", &as) == PLATOON_OK);
    REQUIRE(platoon_config_default(&cfg) == PLATOON_OK);
  }
  ~Loaded() {
    platoon_config_free(cfg);
    platoon_assignments_free(as);
    platoon_network_free(net);
  }
};

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(platoon_version()).size() > 0);
  platoon_network* net = nullptr;
  CHECK(platoon_network_load(PLATOON_FIXTURES "/malformed_network.json", &net) == PLATOON_ERR_INPUT);
  CHECK(net == nullptr);
  CHECK(std::string(platoon_last_error()).find("malformed_network.json") != std::string::npos);
  CHECK(platoon_network_load("/does/not/exist.json", &net) == PLATOON_ERR_INPUT);
  CHECK(platoon_network_grid(1, 5, 10.0, &net) == PLATOON_ERR_INPUT);
  CHECK(platoon_network_load(nullptr, &net) == PLATOON_ERR_INPUT);
  CHECK(platoon_network_node_count(nullptr) == 0);
  platoon_network_free(nullptr);
  platoon_string_free(nullptr);
}

TEST_CASE("config handles") {
  platoon_config* cfg = nullptr;
  REQUIRE(platoon_config_default(&cfg) == PLATOON_OK);
  CHECK(platoon_config_set(cfg, "solver.tol", "1e-9") == PLATOON_OK);
  CHECK(platoon_config_set(cfg, "selection", "random") == PLATOON_OK);
  CHECK(platoon_config_set(cfg, "selection", "sideways") == PLATOON_ERR_INPUT);
  CHECK(platoon_config_set(cfg, "no.such.key", "1") == PLATOON_ERR_INPUT);
  char* text = nullptr;
  REQUIRE(platoon_config_to_json(cfg, &text) == PLATOON_OK);
  const auto j = nlohmann::json::parse(take(text));
  CHECK(j.at("solver").at("tol") == 1e-9);
  CHECK(j.at("selection") == "random");
  platoon_config_free(cfg);

  platoon_config* parsed = nullptr;
  CHECK(platoon_config_parse("{\"seed\": 4}", &parsed) == PLATOON_OK);
  platoon_config_free(parsed);
  parsed = nullptr;
  CHECK(platoon_config_parse("{\"seed\": }", &parsed) == PLATOON_ERR_INPUT);
  CHECK(parsed == nullptr);
  CHECK(platoon_config_load(PLATOON_FIXTURES "/worked_config.json", &parsed) == PLATOON_OK);
  platoon_config_free(parsed);
}

TEST_CASE("worked pair through the C surface") {
  Loaded l;
  CHECK(platoon_network_node_count(l.net) == 6);
  CHECK(platoon_network_edge_count(l.net) == 5);
  CHECK(platoon_assignments_count(l.as) == 2);

  platoon_run* run = nullptr;
  REQUIRE(platoon_run_pipeline(l.cfg, l.net, l.as, &run) == PLATOON_OK);
  double def = 0, s3 = 0, s4 = 0, bad = -1;
  CHECK(platoon_run_metric(run, "fuel_default_kg", &def) == PLATOON_OK);
  CHECK(platoon_run_metric(run, "fuel_stage3_kg", &s3) == PLATOON_OK);
  CHECK(platoon_run_metric(run, "fuel_stage4_kg", &s4) == PLATOON_OK);
  CHECK(platoon_run_metric(run, "intervals_bad", &bad) == PLATOON_OK);
  CHECK(def - s3 == doctest::Approx(2.98).epsilon(0.005 / 2.98));
  CHECK(s4 <= s3);
  CHECK(bad == 0);
  double x;
  CHECK(platoon_run_metric(run, "happiness", &x) == PLATOON_ERR_INPUT);

  char* report = nullptr;
  REQUIRE(platoon_run_report_json(run, &report) == PLATOON_OK);
  CHECK(nlohmann::json::parse(take(report)).at("assignments") == 2);

  platoon_graph* g = nullptr;
  REQUIRE(platoon_run_graph(run, &g) == PLATOON_OK);
  CHECK(platoon_graph_node_count(g) == 2);
  CHECK(platoon_graph_edge_count(g) == 2);
  platoon_graph_free(g);

  const auto dir = std::filesystem::temp_directory_path() / "platoon_c_api_run";
  std::filesystem::remove_all(dir);
  CHECK(platoon_run_write(run, dir.c_str()) == PLATOON_OK);
  CHECK(std::filesystem::exists(dir / "report.json"));
  std::filesystem::remove_all(dir);
  platoon_run_free(run);
}

TEST_CASE("infeasible deadline status") {
  Loaded l;
  platoon_assignments* as = nullptr;
  REQUIRE(platoon_assignments_load(l.net, PLATOON_FIXTURES "/infeasible_assignments.json", &as) == PLATOON_OK);
  platoon_run* run = nullptr;
  CHECK(platoon_run_pipeline(l.cfg, l.net, as, &run) == PLATOON_ERR_INFEASIBLE);
  CHECK(run == nullptr);
  platoon_assignments_free(as);
}

TEST_CASE("assignments must belong to the network") {
  Loaded l;
  platoon_network* grid = nullptr;
  REQUIRE(platoon_network_grid(3, 3, 1000.0, &grid) == PLATOON_OK);
  platoon_run* run = nullptr;
  CHECK(platoon_run_pipeline(l.cfg, grid, l.as, &run) == PLATOON_ERR_INPUT);
  platoon_network_free(grid);
}

TEST_CASE("generate, save and reload") {
  platoon_config* cfg = nullptr;
  REQUIRE(platoon_config_default(&cfg) == PLATOON_OK);
  REQUIRE(platoon_config_set(cfg, "scenario.assignments", "25") == PLATOON_OK);
  REQUIRE(platoon_config_set(cfg, "scenario.network.rows", "4") == PLATOON_OK);
  platoon_network* net = nullptr;
  platoon_assignments* as = nullptr;
  REQUIRE(platoon_generate(cfg, &net, &as) == PLATOON_OK);
  CHECK(platoon_assignments_count(as) == 25);
  const auto dir = std::filesystem::temp_directory_path() / "platoon_c_api_gen";
  std::filesystem::create_directories(dir);
  const std::string np = (dir / "net.json").string(), ap = (dir / "as.json").string();
  REQUIRE(platoon_network_save(net, np.c_str()) == PLATOON_OK);
  REQUIRE(platoon_assignments_save(as, ap.c_str()) == PLATOON_OK);
  platoon_network* net2 = nullptr;
  platoon_assignments* as2 = nullptr;
  REQUIRE(platoon_network_load(np.c_str(), &net2) == PLATOON_OK);
  REQUIRE(platoon_assignments_load(net2, ap.c_str(), &as2) == PLATOON_OK);
  CHECK(platoon_network_edge_count(net2) == platoon_network_edge_count(net));
  CHECK(platoon_assignments_count(as2) == 25);
  platoon_assignments_free(as2);
  platoon_network_free(net2);
  platoon_assignments_free(as);
  platoon_network_free(net);
  platoon_config_free(cfg);
  std::filesystem::remove_all(dir);
}

TEST_CASE("graph operations") {
  platoon_graph* g = nullptr;
  REQUIRE(platoon_graph_load_csv(PLATOON_FIXTURES "/triangle.csv", &g) == PLATOON_OK);
  CHECK(platoon_graph_node_count(g) == 3);
  char* out = nullptr;
  REQUIRE(platoon_graph_cluster(g, PLATOON_SELECT_GREEDY, 0, &out) == PLATOON_OK);
  const auto greedy = nlohmann::json::parse(take(out));
  CHECK(greedy.at("leaders") == nlohmann::json::array({3}));
  CHECK(greedy.at("objective_kg") == 5.0);
  REQUIRE(platoon_graph_exact(g, 20, &out) == PLATOON_OK);
  CHECK(nlohmann::json::parse(take(out)).at("objective_kg") == 5.0);
  CHECK(platoon_graph_exact(g, 2, &out) == PLATOON_ERR_INPUT);
  double ub = 0;
  CHECK(platoon_graph_upper_bound(g, &ub) == PLATOON_OK);
  CHECK(ub == 6.0);
  platoon_graph_free(g);
}

namespace {
std::vector<std::string> g_lines;
void collect(const char* line, void*) { g_lines.emplace_back(line); }
}  // namespace

TEST_CASE("log handler and monte carlo") {
  g_lines.clear();
  platoon_set_log_handler(collect, nullptr);
  platoon_config* cfg = nullptr;
  REQUIRE(platoon_config_default(&cfg) == PLATOON_OK);
  REQUIRE(platoon_config_set(cfg, "scenario.network.rows", "5") == PLATOON_OK);
  REQUIRE(platoon_config_set(cfg, "scenario.network.cols", "5") == PLATOON_OK);
  const auto dir = std::filesystem::temp_directory_path() / "platoon_c_api_mc";
  std::filesystem::remove_all(dir);
  const size_t sizes[] = {5, 10};
  CHECK(platoon_montecarlo(cfg, sizes, 2, 2, dir.c_str()) == PLATOON_OK);
  CHECK(std::filesystem::exists(dir / "runs.csv"));
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  platoon_set_log_handler(nullptr, nullptr);
  CHECK_FALSE(g_lines.empty());
  for (const auto& line : g_lines) CHECK(nlohmann::json::parse(line).contains("event"));
  CHECK(platoon_montecarlo(cfg, nullptr, 1, 2, dir.c_str()) == PLATOON_ERR_INPUT);
  platoon_config_free(cfg);
  std::filesystem::remove_all(dir);
}
