#include "platoon/platoon.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "platoon/errors.hpp"
#include "platoon/json_location.hpp"
#include "platoon/pipeline.hpp"

extern char** environ;

struct platoon_config {
  platoon::RunConfig cfg;
};

struct platoon_network {
  platoon::RoadNetwork net;
};

struct platoon_assignments {
  std::shared_ptr<const platoon::RoadNetwork> net;  // copy of the network used for loading
  std::vector<platoon::Assignment> list;
};

struct platoon_run {
  std::shared_ptr<const platoon::RoadNetwork> net;
  platoon::RunResult result;
};

struct platoon_graph {
  platoon::CoordinationGraph graph;
};

namespace {

thread_local std::string last_error;

std::mutex log_mutex;
platoon_log_fn log_fn = nullptr;
void* log_user = nullptr;

void log_json(const nlohmann::json& j) {
  std::lock_guard lock(log_mutex);
  if (log_fn) log_fn(j.dump().c_str(), log_user);
}

platoon::LogFn logger() {
  std::lock_guard lock(log_mutex);
  if (!log_fn) return {};
  return log_json;
}

template <typename F>
platoon_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return PLATOON_OK;
  } catch (const platoon::InfeasibleError& e) {
    last_error = e.what();
    return PLATOON_ERR_INFEASIBLE;
  } catch (const platoon::InputError& e) {
    last_error = e.what();
    return PLATOON_ERR_INPUT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PLATOON_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PLATOON_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return PLATOON_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw platoon::InputError(std::string(what) + " must not be NULL");
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw platoon::InputError("cannot write " + path);
  out << text;
  if (!out) throw platoon::InputError("failed writing " + path);
}

}  // namespace

extern "C" {

const char* platoon_version(void) { return "0.1.0"; }

const char* platoon_last_error(void) { return last_error.c_str(); }

void platoon_string_free(char* s) { std::free(s); }

void platoon_set_log_handler(platoon_log_fn fn, void* user) {
  std::lock_guard lock(log_mutex);
  log_fn = fn;
  log_user = user;
}

platoon_status platoon_config_default(platoon_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new platoon_config{};
  });
}

platoon_status platoon_config_load(const char* path, platoon_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new platoon_config{platoon::run_config_from_file(path)};
  });
}

platoon_status platoon_config_parse(const char* json_text, platoon_config** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    *out = new platoon_config{platoon::run_config_from_text(json_text)};
  });
}

platoon_status platoon_config_set(platoon_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    platoon::apply_setting(cfg->cfg, key, value);
  });
}

platoon_status platoon_config_apply_env(platoon_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    platoon::apply_env_overrides(cfg->cfg, environ);
  });
}

platoon_status platoon_config_to_json(const platoon_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = duplicate(platoon::run_config_to_json(cfg->cfg).dump(2));
  });
}

void platoon_config_free(platoon_config* cfg) { delete cfg; }

platoon_status platoon_network_load(const char* path, platoon_network** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new platoon_network{platoon::load_network_file(path)};
  });
}

platoon_status platoon_network_grid(size_t rows, size_t cols, double edge_length_m, platoon_network** out) {
  return guarded([&] {
    require(out, "out");
    if (!(edge_length_m > 0.0)) throw platoon::InputError("edge length must be positive");
    *out = new platoon_network{platoon::grid_network(rows, cols, edge_length_m)};
  });
}

platoon_status platoon_network_save(const platoon_network* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    write_text(path, platoon::network_to_json(net->net).dump(2) + "\n");
  });
}

size_t platoon_network_node_count(const platoon_network* net) { return net ? net->net.node_count() : 0; }

size_t platoon_network_edge_count(const platoon_network* net) { return net ? net->net.edge_count() : 0; }

void platoon_network_free(platoon_network* net) { delete net; }

platoon_status platoon_assignments_load(const platoon_network* net, const char* path, platoon_assignments** out) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    require(out, "out");
    auto list = platoon::load_assignments_file(net->net, path);
    *out = new platoon_assignments{std::make_shared<const platoon::RoadNetwork>(net->net), std::move(list)};
  });
}

platoon_status platoon_assignments_save(const platoon_assignments* a, const char* path) {
  return guarded([&] {
    require(a, "assignments");
    require(path, "path");
    write_text(path, platoon::assignments_to_json(*a->net, a->list).dump(2) + "\n");
  });
}

size_t platoon_assignments_count(const platoon_assignments* a) { return a ? a->list.size() : 0; }

void platoon_assignments_free(platoon_assignments* a) { delete a; }

platoon_status platoon_generate(const platoon_config* cfg, platoon_network** net_out,
                                platoon_assignments** assignments_out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(net_out, "net_out");
    require(assignments_out, "assignments_out");
    auto net = std::make_shared<const platoon::RoadNetwork>(platoon::scenario_network(cfg->cfg.scenario));
    auto list = platoon::generate_assignments(*net, cfg->cfg.scenario, cfg->cfg.fuel);
    auto owned_net = std::make_unique<platoon_network>(platoon_network{*net});
    *assignments_out = new platoon_assignments{net, std::move(list)};
    *net_out = owned_net.release();
  });
}

platoon_status platoon_run_pipeline(const platoon_config* cfg, const platoon_network* net,
                                    const platoon_assignments* assignments, platoon_run** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(net, "net");
    require(assignments, "assignments");
    require(out, "out");
    if (assignments->net->edge_count() != net->net.edge_count() ||
        assignments->net->node_count() != net->net.node_count()) {
      throw platoon::InputError("assignments were loaded against a different network");
    }
    auto shared = std::make_shared<const platoon::RoadNetwork>(net->net);
    auto result = platoon::run_pipeline(*shared, assignments->list, cfg->cfg, logger());
    *out = new platoon_run{std::move(shared), std::move(result)};
  });
}

platoon_status platoon_run_write(const platoon_run* run, const char* dir) {
  return guarded([&] {
    require(run, "run");
    require(dir, "dir");
    platoon::write_run(*run->net, run->result, dir);
  });
}

platoon_status platoon_run_report_json(const platoon_run* run, char** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = duplicate(platoon::report_to_json(run->result.report).dump(2));
  });
}

platoon_status platoon_run_metric(const platoon_run* run, const char* name, double* out) {
  return guarded([&] {
    require(run, "run");
    require(name, "name");
    require(out, "out");
    const platoon::RunReport& r = run->result.report;
    const std::string key(name);
    const auto& v = run->result.verification;
    if (key == "fuel_default_kg") *out = r.fuel_default_kg;
    else if (key == "fuel_stage3_kg") *out = r.fuel_stage3_kg;
    else if (key == "fuel_stage4_kg") *out = r.fuel_stage4_kg;
    else if (key == "fuel_spontaneous_kg") *out = r.fuel_spontaneous_kg;
    else if (key == "upper_bound_kg") *out = r.upper_bound_kg;
    else if (key == "objective_kg") *out = r.objective_kg;
    else if (key == "saving_stage3") *out = r.saving_stage3();
    else if (key == "saving_stage4") *out = r.saving_stage4();
    else if (key == "saving_spontaneous") *out = r.saving_spontaneous();
    else if (key == "upper_bound_rel") *out = r.upper_bound_rel();
    else if (key == "assignments") *out = static_cast<double>(r.assignments);
    else if (key == "followers") *out = static_cast<double>(r.followers);
    else if (key == "leaders") *out = static_cast<double>(r.leaders);
    else if (key == "graph_edges") *out = static_cast<double>(r.graph_edges);
    else if (key == "plans_invalid") *out = v ? static_cast<double>(v->plans_invalid) : 0.0;
    else if (key == "intervals_bad") *out = v ? static_cast<double>(v->intervals_bad) : 0.0;
    else throw platoon::InputError("unknown metric '" + key + "'");
  });
}

platoon_status platoon_run_graph(const platoon_run* run, platoon_graph** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = new platoon_graph{run->result.build.graph};
  });
}

void platoon_run_free(platoon_run* run) { delete run; }

platoon_status platoon_montecarlo(const platoon_config* cfg, const size_t* sizes, size_t n_sizes, size_t runs,
                                  const char* out_dir) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out_dir, "out_dir");
    if (n_sizes > 0) require(sizes, "sizes");
    std::vector<std::size_t> list(sizes, sizes + n_sizes);
    const auto rows = platoon::run_montecarlo(cfg->cfg, list, runs, logger());
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw platoon::InputError(std::string("cannot create ") + out_dir + ": " + ec.message());
    const std::filesystem::path dir(out_dir);
    write_text((dir / "runs.csv").string(), platoon::montecarlo_csv(rows));
    write_text((dir / "summary.csv").string(), platoon::montecarlo_summary_csv(rows));
  });
}

platoon_status platoon_graph_load_csv(const char* path, platoon_graph** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new platoon_graph{platoon::graph_from_csv(platoon::read_text_file(path), path)};
  });
}

platoon_status platoon_graph_save_csv(const platoon_graph* g, const char* path) {
  return guarded([&] {
    require(g, "graph");
    require(path, "path");
    write_text(path, platoon::graph_to_csv(g->graph));
  });
}

size_t platoon_graph_node_count(const platoon_graph* g) { return g ? g->graph.node_count() : 0; }

size_t platoon_graph_edge_count(const platoon_graph* g) { return g ? g->graph.edge_count() : 0; }

platoon_status platoon_graph_cluster(const platoon_graph* g, platoon_selection rule, uint64_t seed, char** out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    if (rule != PLATOON_SELECT_GREEDY && rule != PLATOON_SELECT_RANDOM) {
      throw platoon::InputError("unknown selection rule");
    }
    const auto r = platoon::cluster(g->graph, rule == PLATOON_SELECT_GREEDY ? platoon::SelectionRule::kGreedy
                                                                             : platoon::SelectionRule::kRandom,
                                    seed);
    *out = duplicate(platoon::leader_set_to_json(g->graph, r.set).dump(2));
  });
}

platoon_status platoon_graph_exact(const platoon_graph* g, size_t limit, char** out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    const auto set = platoon::exact_leaders(g->graph, limit);
    *out = duplicate(platoon::leader_set_to_json(g->graph, set).dump(2));
  });
}

platoon_status platoon_graph_upper_bound(const platoon_graph* g, double* out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    *out = platoon::upper_bound(g->graph);
  });
}

void platoon_graph_free(platoon_graph* g) { delete g; }

}  // extern "C"
