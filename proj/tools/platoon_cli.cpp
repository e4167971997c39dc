// Command-line front end. Talks to the engine only through the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "platoon/platoon.h"

namespace {

struct Failure {
  int code;
};

void check(platoon_status s) {
  if (s == PLATOON_OK) return;
  nlohmann::json j{{"level", "error"}, {"event", "failed"}, {"status", static_cast<int>(s)},
                   {"message", platoon_last_error()}};
  std::cerr << j.dump() << '\n';
  throw Failure{static_cast<int>(s)};
}

void log_to_stderr(const char* line, void*) { std::cerr << line << '\n'; }

// Owns a handle and its free function.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};

using Config = Handle<platoon_config, platoon_config_free>;
using Network = Handle<platoon_network, platoon_network_free>;
using Assignments = Handle<platoon_assignments, platoon_assignments_free>;
using Run = Handle<platoon_run, platoon_run_free>;
using Graph = Handle<platoon_graph, platoon_graph_free>;

std::string take_string(char* s) {
  std::string out(s);
  platoon_string_free(s);
  return out;
}

struct ConfigFlags {
  std::string path;
  std::vector<std::string> settings;
  std::optional<std::string> selection;
  std::optional<unsigned long long> seed;
  std::optional<unsigned> jobs;
  std::optional<std::size_t> exact_limit;
  bool exact = false;
  std::optional<std::string> out;

  void add_to(CLI::App* cmd, bool run_flags) {
    cmd->add_option("-c,--config", path, "Run config JSON")->check(CLI::ExistingFile);
    cmd->add_option("--set", settings, "Override a config field, key=value (repeatable)");
    cmd->add_option("--seed", seed, "Seed (scenario and random selection)");
    cmd->add_option("-j,--jobs", jobs, "Worker threads");
    cmd->add_option("-o,--out", out, "Output directory");
    if (run_flags) {
      cmd->add_option("--selection", selection, "greedy or random")->check(CLI::IsMember({"greedy", "random"}));
      cmd->add_option("--exact-limit", exact_limit, "Node limit for the exact oracle");
      cmd->add_flag("--exact", exact, "Also solve leader selection exactly when small enough");
    }
  }

  void apply(Config& cfg) const {
    if (path.empty()) {
      check(platoon_config_default(&cfg.ptr));
    } else {
      check(platoon_config_load(path.c_str(), &cfg.ptr));
    }
    check(platoon_config_apply_env(cfg.ptr));
    for (const std::string& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << nlohmann::json{{"level", "error"}, {"message", "--set expects key=value, got '" + s + "'"}}.dump()
                  << '\n';
        throw Failure{PLATOON_ERR_INPUT};
      }
      check(platoon_config_set(cfg.ptr, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
    }
    if (selection) check(platoon_config_set(cfg.ptr, "selection", selection->c_str()));
    if (seed) {
      const std::string v = std::to_string(*seed);
      check(platoon_config_set(cfg.ptr, "seed", v.c_str()));
      check(platoon_config_set(cfg.ptr, "scenario.seed", v.c_str()));
    }
    if (jobs) check(platoon_config_set(cfg.ptr, "jobs", std::to_string(*jobs).c_str()));
    if (exact) check(platoon_config_set(cfg.ptr, "exact.enabled", "true"));
    if (exact_limit) check(platoon_config_set(cfg.ptr, "exact.limit", std::to_string(*exact_limit).c_str()));
    if (out) check(platoon_config_set(cfg.ptr, "output_dir", nlohmann::json(*out).dump().c_str()));
  }
};

std::string output_dir(const Config& cfg) {
  char* text = nullptr;
  check(platoon_config_to_json(cfg.ptr, &text));
  return nlohmann::json::parse(take_string(text)).at("output_dir").get<std::string>();
}

int cmd_generate(const ConfigFlags& flags, std::optional<std::size_t> count) {
  Config cfg;
  flags.apply(cfg);
  if (count) check(platoon_config_set(cfg.ptr, "scenario.assignments", std::to_string(*count).c_str()));
  Network net;
  Assignments list;
  check(platoon_generate(cfg.ptr, &net.ptr, &list.ptr));
  const std::string dir = output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string net_path = dir + "/network.json";
  const std::string list_path = dir + "/assignments.json";
  check(platoon_network_save(net.ptr, net_path.c_str()));
  check(platoon_assignments_save(list.ptr, list_path.c_str()));
  std::cout << nlohmann::json{{"network", net_path},
                              {"assignments", list_path},
                              {"nodes", platoon_network_node_count(net.ptr)},
                              {"edges", platoon_network_edge_count(net.ptr)},
                              {"count", platoon_assignments_count(list.ptr)}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_plan(const ConfigFlags& flags, const std::string& network_path, const std::string& assignments_path) {
  Config cfg;
  flags.apply(cfg);
  Network net;
  Assignments list;
  if (!assignments_path.empty()) {
    if (network_path.empty()) {
      std::cerr << nlohmann::json{{"level", "error"}, {"message", "--assignments needs --network"}}.dump() << '\n';
      return PLATOON_ERR_INPUT;
    }
    check(platoon_network_load(network_path.c_str(), &net.ptr));
    check(platoon_assignments_load(net.ptr, assignments_path.c_str(), &list.ptr));
  } else {
    if (!network_path.empty()) {
      check(platoon_config_set(cfg.ptr, "scenario.network_file", network_path.c_str()));
    }
    check(platoon_generate(cfg.ptr, &net.ptr, &list.ptr));
  }
  Run run;
  check(platoon_run_pipeline(cfg.ptr, net.ptr, list.ptr, &run.ptr));
  const std::string dir = output_dir(cfg);
  check(platoon_run_write(run.ptr, dir.c_str()));
  char* report = nullptr;
  check(platoon_run_report_json(run.ptr, &report));
  std::cout << take_string(report) << '\n';
  double invalid = 0.0, bad = 0.0;
  check(platoon_run_metric(run.ptr, "plans_invalid", &invalid));
  check(platoon_run_metric(run.ptr, "intervals_bad", &bad));
  return invalid > 0.0 || bad > 0.0 ? PLATOON_ERR_INFEASIBLE : 0;
}

int cmd_exact(const std::string& graph_path, std::size_t limit, unsigned long long seed) {
  Graph g;
  check(platoon_graph_load_csv(graph_path.c_str(), &g.ptr));
  char* exact = nullptr;
  check(platoon_graph_exact(g.ptr, limit, &exact));
  char* greedy = nullptr;
  check(platoon_graph_cluster(g.ptr, PLATOON_SELECT_GREEDY, seed, &greedy));
  double bound = 0.0;
  check(platoon_graph_upper_bound(g.ptr, &bound));
  nlohmann::json out{{"exact", nlohmann::json::parse(take_string(exact))},
                     {"greedy", nlohmann::json::parse(take_string(greedy))},
                     {"upper_bound_kg", bound}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_montecarlo(const ConfigFlags& flags, const std::vector<std::size_t>& sizes, std::size_t runs) {
  Config cfg;
  flags.apply(cfg);
  const std::string dir = output_dir(cfg);
  check(platoon_montecarlo(cfg.ptr, sizes.data(), sizes.size(), runs, dir.c_str()));
  std::ifstream summary(dir + "/summary.csv");
  std::cout << summary.rdbuf();
  return 0;
}

int cmd_report(const std::string& path, bool csv) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << nlohmann::json{{"level", "error"}, {"message", "cannot open " + path}}.dump() << '\n';
    return PLATOON_ERR_INPUT;
  }
  const nlohmann::json r = nlohmann::json::parse(in, nullptr, false);
  if (r.is_discarded() || !r.is_object()) {
    std::cerr << nlohmann::json{{"level", "error"}, {"message", path + ": not a JSON report"}}.dump() << '\n';
    return PLATOON_ERR_INPUT;
  }
  const char* keys[] = {"assignments",  "graph_edges",   "leaders",       "followers",         "fuel_default_kg",
                        "fuel_stage3_kg", "fuel_stage4_kg", "fuel_spontaneous_kg", "upper_bound_kg", "saving_stage3",
                        "saving_stage4", "saving_spontaneous", "upper_bound_rel"};
  if (csv) std::cout << "metric,value\n";
  for (const char* k : keys) {
    if (!r.contains(k)) continue;
    if (csv) {
      std::cout << k << ',' << r[k].dump() << '\n';
    } else {
      std::printf("%-22s %s\n", k, r[k].dump().c_str());
    }
  }
  if (r.contains("platoon_size_meters")) {
    if (!csv) std::printf("\nplatoon size    km\n");
    for (const auto& [size, meters] : r["platoon_size_meters"].items()) {
      if (csv) {
        std::cout << "size_" << size << "_m," << meters.dump() << '\n';
      } else {
        std::printf("%-15s %.1f\n", size.c_str(), meters.get<double>() / 1000.0);
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truck platoon coordination planner"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress JSON log lines on stderr");

  ConfigFlags gen_flags, plan_flags, mc_flags;
  auto* gen = app.add_subcommand("generate", "Write a network and random assignments");
  gen_flags.add_to(gen, false);
  std::optional<std::size_t> gen_count;
  gen->add_option("-n,--assignments", gen_count, "Number of assignments");

  auto* plan = app.add_subcommand("plan", "Run the four planning stages");
  plan_flags.add_to(plan, true);
  std::string network_path, assignments_path;
  plan->add_option("--network", network_path, "Network JSON")->check(CLI::ExistingFile);
  plan->add_option("--assignments", assignments_path, "Assignments JSON")->check(CLI::ExistingFile);

  auto* exact = app.add_subcommand("exact", "Exact leader selection on a graph CSV");
  std::string graph_path;
  std::size_t exact_limit = 20;
  unsigned long long exact_seed = 0;
  exact->add_option("graph", graph_path, "CSV src,dst,saving_kg")->required()->check(CLI::ExistingFile);
  exact->add_option("--exact-limit", exact_limit, "Maximum node count");
  exact->add_option("--seed", exact_seed, "Seed for the comparison run");

  auto* mc = app.add_subcommand("montecarlo", "Repeated runs over assignment counts");
  mc_flags.add_to(mc, true);
  std::vector<std::size_t> sizes{50, 200, 800};
  std::size_t runs = 30;
  mc->add_option("--sizes", sizes, "Assignment counts")->delimiter(',');
  mc->add_option("--runs", runs, "Runs per size");

  auto* report = app.add_subcommand("report", "Summarize a report.json");
  std::string report_path;
  bool report_csv = false;
  report->add_option("report", report_path, "report.json")->required();
  report->add_flag("--csv", report_csv, "metric,value output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : PLATOON_ERR_INPUT;
  }
  if (!quiet) platoon_set_log_handler(log_to_stderr, nullptr);

  try {
    if (*gen) return cmd_generate(gen_flags, gen_count);
    if (*plan) return cmd_plan(plan_flags, network_path, assignments_path);
    if (*exact) return cmd_exact(graph_path, exact_limit, exact_seed);
    if (*mc) return cmd_montecarlo(mc_flags, sizes, runs);
    if (*report) return cmd_report(report_path, report_csv);
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
