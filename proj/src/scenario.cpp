#include "platoon/scenario.hpp"

#include <cmath>
#include <random>
#include <string>

#include "platoon/errors.hpp"

namespace platoon {

void ScenarioConfig::validate() const {
  if (!network_file && (grid.rows < 2 || grid.cols < 2)) throw InputError("grid needs at least 2 rows and 2 columns");
  if (!network_file && !(grid.edge_length_m > 0.0 && std::isfinite(grid.edge_length_m))) {
    throw InputError("grid edge length must be positive");
  }
  if (!(start_window_s >= 0.0) || !std::isfinite(start_window_s)) throw InputError("start window must be >= 0");
  if (!(deadline_slack_s >= 0.0) || !std::isfinite(deadline_slack_s)) {
    throw InputError("deadline slack must be >= 0");
  }
  double sum = 0.0;
  for (double w : node_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("node weights must be finite and >= 0");
    sum += w;
  }
  if (!node_weights.empty() && !(sum > 0.0)) throw InputError("node weights must not all be zero");
}

RoadNetwork grid_network(std::size_t rows, std::size_t cols, double edge_length_m) {
  if (rows < 2 || cols < 2) throw InputError("grid needs at least 2 rows and 2 columns");
  RoadNetwork net;
  for (std::size_t k = 0; k < rows * cols; ++k) net.add_node(static_cast<std::int64_t>(k));
  std::int64_t edge_id = 0;
  auto link = [&](std::size_t a, std::size_t b) {
    net.add_edge(edge_id++, static_cast<std::int64_t>(a), static_cast<std::int64_t>(b), edge_length_m);
    net.add_edge(edge_id++, static_cast<std::int64_t>(b), static_cast<std::int64_t>(a), edge_length_m);
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t k = r * cols + c;
      if (c + 1 < cols) link(k, k + 1);
      if (r + 1 < rows) link(k, k + cols);
    }
  }
  return net;
}

RoadNetwork scenario_network(const ScenarioConfig& cfg) {
  if (cfg.network_file) return load_network_file(*cfg.network_file);
  return grid_network(cfg.grid.rows, cfg.grid.cols, cfg.grid.edge_length_m);
}

std::vector<Assignment> generate_assignments(const RoadNetwork& net, const ScenarioConfig& cfg, const FuelModel& m) {
  cfg.validate();
  const std::size_t nodes = net.node_count();
  if (!cfg.node_weights.empty() && cfg.node_weights.size() != nodes) {
    throw InputError("node_weights has " + std::to_string(cfg.node_weights.size()) + " entries, network has " +
                     std::to_string(nodes) + " nodes");
  }
  std::vector<Assignment> out;
  if (cfg.assignments == 0) return out;
  if (nodes < 2) throw InputError("network needs at least two nodes");

  std::mt19937_64 rng(cfg.seed);
  const std::vector<double> weights = cfg.node_weights.empty() ? std::vector<double>(nodes, 1.0) : cfg.node_weights;
  std::discrete_distribution<std::size_t> pick_node(weights.begin(), weights.end());
  std::uniform_real_distribution<double> pick_time(0.0, cfg.start_window_s);
  const std::size_t budget = 100 * cfg.assignments;
  std::size_t draws = 0;
  while (out.size() < cfg.assignments) {
    if (draws++ >= budget) {
      throw InputError("could not find " + std::to_string(cfg.assignments) + " reachable start/destination pairs in " +
                       std::to_string(budget) + " draws");
    }
    const auto from = static_cast<NodeIndex>(pick_node(rng));
    const auto to = static_cast<NodeIndex>(pick_node(rng));
    if (from == to) continue;
    const auto route = shortest_route(net, from, to);
    if (!route) continue;
    Assignment a;
    a.id = static_cast<AssignmentId>(out.size());
    a.start = {route->edges.front(), 0.0};
    a.dest = {route->edges.back(), net.length(route->edges.back())};
    a.t_start = pick_time(rng);
    a.t_deadline = a.t_start + route_length(net, *route) / m.v_default + cfg.deadline_slack_s;
    out.push_back(a);
  }
  return out;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  if (!j.is_object()) throw InputError("scenario block must be an object");
  try {
    if (j.contains("network")) {
      const auto& n = j["network"];
      const std::string type = n.value("type", "grid");
      if (type == "file") {
        cfg.network_file = n.at("path").get<std::string>();
      } else if (type == "grid") {
        cfg.grid.rows = n.value("rows", cfg.grid.rows);
        cfg.grid.cols = n.value("cols", cfg.grid.cols);
        cfg.grid.edge_length_m = n.value("edge_length_m", cfg.grid.edge_length_m);
      } else {
        throw InputError("scenario.network.type must be \"grid\" or \"file\"");
      }
    }
    if (j.contains("node_weights")) cfg.node_weights = j["node_weights"].get<std::vector<double>>();
    cfg.assignments = j.value("assignments", cfg.assignments);
    cfg.start_window_s = j.value("start_window_s", cfg.start_window_s);
    cfg.deadline_slack_s = j.value("deadline_slack_s", cfg.deadline_slack_s);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json network;
  if (cfg.network_file) {
    network = {{"type", "file"}, {"path", *cfg.network_file}};
  } else {
    network = {{"type", "grid"}, {"rows", cfg.grid.rows}, {"cols", cfg.grid.cols},
               {"edge_length_m", cfg.grid.edge_length_m}};
  }
  nlohmann::json j{{"network", network},
                   {"assignments", cfg.assignments},
                   {"start_window_s", cfg.start_window_s},
                   {"deadline_slack_s", cfg.deadline_slack_s},
                   {"seed", cfg.seed}};
  if (!cfg.node_weights.empty()) j["node_weights"] = cfg.node_weights;
  return j;
}

}  // namespace platoon
