#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/planning.hpp"

namespace platoon {

struct GridSpec {
  std::size_t rows = 20;
  std::size_t cols = 20;
  double edge_length_m = 10000.0;
};

struct ScenarioConfig {
  std::optional<std::string> network_file;  // otherwise a synthetic grid
  GridSpec grid;
  std::vector<double> node_weights;          // per node index; empty = uniform
  std::size_t assignments = 100;
  double start_window_s = 7200.0;
  double deadline_slack_s = 0.0;
  std::uint64_t seed = 1;

  /// InputError on bad dimensions, negative window/slack or weights.
  void validate() const;
};

/// Lattice with node id r*cols + c and one directed edge per neighbor pair
/// and direction.
RoadNetwork grid_network(std::size_t rows, std::size_t cols, double edge_length_m);

RoadNetwork scenario_network(const ScenarioConfig& cfg);

/// Start and destination nodes drawn with probability proportional to node
/// weight, redrawn when equal or unreachable; start time uniform on the
/// window; deadline at default-speed arrival plus slack. Ids are 0..N-1.
/// InputError after 100*N failed draws.
std::vector<Assignment> generate_assignments(const RoadNetwork& net, const ScenarioConfig& cfg, const FuelModel& m);

/// `{network:{type:"grid", rows, cols, edge_length_m} | {type:"file", path},
///   node_weights:[w per node], assignments, start_window_s, deadline_slack_s, seed}`.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

}  // namespace platoon
