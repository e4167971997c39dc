#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace platoon {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct Edge {
  std::int64_t id = 0;
  NodeIndex from = 0;
  NodeIndex to = 0;
  double length_m = 0.0;
};

/// A point on the road network: `offset_m` meters along `edge`.
struct Position {
  EdgeIndex edge = 0;
  double offset_m = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// Connected edge sequence. The truck enters the first edge at
/// `start_offset_m` and stops on the last edge at `dest_offset_m`.
struct Route {
  std::vector<EdgeIndex> edges;
  double start_offset_m = 0.0;
  double dest_offset_m = 0.0;

  friend bool operator==(const Route&, const Route&) = default;
};

/// A maximal run of full edges traversed contiguously, in the same order,
/// by two routes. Index ranges are half-open.
struct SharedSegment {
  std::size_t a_begin = 0;
  std::size_t a_end = 0;
  std::size_t b_begin = 0;
  std::size_t b_end = 0;
  double length_m = 0.0;

  friend bool operator==(const SharedSegment&, const SharedSegment&) = default;
};

/// Directed road graph. External node/edge ids are arbitrary integers; all
/// internal references use dense indices.
class RoadNetwork {
 public:
  NodeIndex add_node(std::int64_t id);
  /// Throws InputError on unknown nodes, duplicate ids, duplicate node pairs,
  /// or non-positive / non-finite length.
  EdgeIndex add_edge(std::int64_t id, std::int64_t from_id, std::int64_t to_id, double length_m);

  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::int64_t node_id(NodeIndex n) const { return node_ids_.at(n); }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }
  double length(EdgeIndex e) const { return edges_[e].length_m; }
  std::span<const EdgeIndex> out_edges(NodeIndex n) const { return out_[n]; }

  std::optional<NodeIndex> find_node(std::int64_t id) const;
  std::optional<EdgeIndex> find_edge(std::int64_t id) const;
  std::optional<EdgeIndex> edge_between(NodeIndex from, NodeIndex to) const;

  bool is_valid(const Position& p) const;

 private:
  std::vector<std::int64_t> node_ids_;
  std::unordered_map<std::int64_t, NodeIndex> node_index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::int64_t, EdgeIndex> edge_index_;
  std::unordered_map<std::uint64_t, EdgeIndex> pair_index_;
  std::vector<std::vector<EdgeIndex>> out_;
};

/// Arrival-condition distance: sum of all but the last edge length, plus the
/// destination offset, minus the start offset.
double route_length(const RoadNetwork& net, const Route& route);

/// Empty when the route is connected, inside offset bounds, and has positive
/// length; otherwise a description of the first problem found.
std::optional<std::string> route_problem(const RoadNetwork& net, const Route& route);

/// Dijkstra on edge lengths. Mid-edge positions are handled by treating the
/// start edge's head and the destination edge's tail as virtual source and
/// sink. Returns nullopt when unreachable; InputError on invalid positions or
/// start == destination.
std::optional<Route> shortest_route(const RoadNetwork& net, const Position& from, const Position& to);

/// Node-to-node variant used by scenario generation: the route starts at
/// offset 0 of its first edge and ends at the full length of its last edge.
std::optional<Route> shortest_route(const RoadNetwork& net, NodeIndex from, NodeIndex to);

/// Maximal shared runs of full edges (partially traversed first/last edges
/// never participate).
std::vector<SharedSegment> common_subpaths(const RoadNetwork& net, const Route& a, const Route& b);

/// Prefix sums along a route for arc-length <-> position conversion.
class RouteGeometry {
 public:
  RouteGeometry(const RoadNetwork& net, const Route& route);

  double length() const { return length_; }
  std::size_t edge_count() const { return edge_start_.size(); }
  /// Arc position (from the start position) at which edge i is entered;
  /// negative for i == 0 when the start offset is positive.
  double edge_start_arc(std::size_t i) const { return edge_start_[i]; }
  bool is_full_edge(std::size_t i) const;
  /// Position at arc `arc`; the edge is the last one whose start arc is
  /// strictly below `arc` (the first edge at arc 0).
  Position position_at(double arc) const;

 private:
  const Route* route_;
  std::vector<double> edge_start_;
  std::vector<double> edge_length_;
  double length_ = 0.0;
};

/// Loads `{nodes:[{id}], edges:[{id, from, to, length_m}]}`. Errors carry
/// "<source>:<line>:" prefixes.
RoadNetwork load_network_json(std::string_view text, std::string_view source = "<network>");
RoadNetwork load_network_file(const std::string& path);
nlohmann::json network_to_json(const RoadNetwork& net);

/// Route <-> JSON using external edge ids.
nlohmann::json route_to_json(const RoadNetwork& net, const Route& route);

}  // namespace platoon
