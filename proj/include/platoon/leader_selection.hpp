#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "platoon/coordination_graph.hpp"

namespace platoon {

/// Flips must gain more than this to count as an improvement.
inline constexpr double kMinGain = 1e-12;

struct LeaderSet {
  std::vector<std::uint8_t> is_leader;                    // per node
  std::vector<std::optional<std::uint32_t>> follower_of;  // best leader of each non-leader
  double objective = 0.0;                                 // kg

  std::vector<std::uint32_t> leaders() const;
};

/// Fills follower_of and objective from a leader mask.
LeaderSet make_leader_set(const CoordinationGraph& g, std::vector<std::uint8_t> is_leader);

/// Sum over non-leaders of their best weight towards a leader.
double leader_objective(const CoordinationGraph& g, const std::vector<std::uint8_t>& is_leader);

/// Objective change from toggling n's leader membership.
double delta_u(const CoordinationGraph& g, const std::vector<std::uint8_t>& is_leader, std::uint32_t n);

enum class SelectionRule { kGreedy, kRandom };

struct ClusterResult {
  LeaderSet set;
  std::vector<double> trace;  // objective after every flip
  std::vector<std::uint32_t> flips;
};

/// Local search from the empty leader set. Greedy flips the largest gain
/// (ties: smallest id); random picks uniformly among positive gains.
ClusterResult cluster(const CoordinationGraph& g, SelectionRule rule, std::uint64_t seed = 0);

/// Global optimum by enumeration. Ties prefer fewer leaders, then the
/// lexicographically smallest leader list. InputError above `limit` nodes.
LeaderSet exact_leaders(const CoordinationGraph& g, std::size_t limit = 20);

/// Every node paired with its best out-neighbor.
double upper_bound(const CoordinationGraph& g);

struct SetCoverInstance {
  std::size_t universe = 0;                       // elements 0..universe-1
  std::vector<std::vector<std::size_t>> family;   // subsets
};

struct SetCoverGraph {
  CoordinationGraph graph;
  std::vector<std::uint32_t> element_node;
  std::vector<std::uint32_t> subset_node;
  std::uint32_t sink_node = 0;
};

/// Elements, then subsets, then one sink. element -> covering subset
/// (weight 1), subset -> sink (weight 0.5).
SetCoverGraph reduce_set_cover(const SetCoverInstance& inst);

/// `{leaders:[ids], follower_of:{id: id}, objective_kg}`.
nlohmann::json leader_set_to_json(const CoordinationGraph& g, const LeaderSet& set);

}  // namespace platoon
