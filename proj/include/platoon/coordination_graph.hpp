#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "platoon/planning.hpp"

namespace platoon {

/// Savings at or below this are treated as "no edge".
inline constexpr double kMinEdgeWeight = 1e-12;

/// Weighted digraph over assignment ids. Node indices follow ascending id
/// order, so comparing indices compares ids.
class CoordinationGraph {
 public:
  struct Arc {
    std::uint32_t node;
    double weight;
  };

  CoordinationGraph() = default;
  /// `ids` must be strictly increasing.
  explicit CoordinationGraph(std::vector<std::int64_t> ids);
  /// Nodes 0..n-1 with ids equal to their index.
  static CoordinationGraph with_nodes(std::size_t n);

  /// Throws std::invalid_argument on self-loops, duplicates, bad indices or
  /// weight <= kMinEdgeWeight.
  void add_edge(std::uint32_t src, std::uint32_t dst, double weight);

  std::size_t node_count() const { return ids_.size(); }
  std::size_t edge_count() const { return edges_; }
  std::int64_t id(std::uint32_t n) const { return ids_[n]; }
  std::optional<std::uint32_t> index_of(std::int64_t id) const;
  /// Sorted by neighbor index.
  std::span<const Arc> out(std::uint32_t n) const { return out_[n]; }
  std::span<const Arc> in(std::uint32_t n) const { return in_[n]; }
  std::optional<double> weight(std::uint32_t src, std::uint32_t dst) const;

 private:
  std::vector<std::int64_t> ids_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> in_;
  std::size_t edges_ = 0;
};

inline std::uint64_t pair_key(std::uint32_t follower, std::uint32_t leader) {
  return (static_cast<std::uint64_t>(follower) << 32) | leader;
}

/// Graph plus the adapted plan behind every edge.
struct CoordinationBuild {
  CoordinationGraph graph;
  std::unordered_map<std::uint64_t, AdaptedPlan> plans;  // pair_key(follower, leader)

  const AdaptedPlan* plan(std::uint32_t follower, std::uint32_t leader) const;
};

/// Ordered (follower, leader) index pairs that can possibly produce an edge:
/// a shared full edge on which the leader's passage overlaps the follower's
/// reachable time window. Never drops a pair that would carry an edge.
std::vector<std::pair<std::uint32_t, std::uint32_t>> prune_pairs(const RoadNetwork& net,
                                                                 std::span<const Assignment> assignments,
                                                                 std::span<const VehiclePlan> default_plans,
                                                                 const FuelModel& m);

/// Evaluates adapted_plan for every ordered pair (or only `candidates`).
/// Assignments must be sorted by strictly increasing id; index i of every
/// span refers to the same truck. `jobs` > 1 splits pairs over threads.
CoordinationBuild build_coordination_graph(const RoadNetwork& net, std::span<const Assignment> assignments,
                                           std::span<const VehiclePlan> default_plans, const FuelModel& m,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>* candidates,
                                           unsigned jobs = 1);

/// CSV `src,dst,saving_kg` with node ids.
std::string graph_to_csv(const CoordinationGraph& g);
/// Nodes are the ids mentioned in the file. Errors carry "<source>:<line>:".
CoordinationGraph graph_from_csv(std::string_view text, std::string_view source = "<graph>");

}  // namespace platoon
