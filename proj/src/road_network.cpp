#include "platoon/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include "platoon/errors.hpp"
#include "platoon/json_location.hpp"

namespace platoon {
namespace {

std::uint64_t pair_key(NodeIndex from, NodeIndex to) {
  return (static_cast<std::uint64_t>(from) << 32) | to;
}

// Dijkstra from `source` to `target`; edge list of a shortest path, or
// nullopt. Ties resolve by node index through the heap ordering, so results
// are deterministic.
std::optional<std::vector<EdgeIndex>> dijkstra_path(const RoadNetwork& net, NodeIndex source,
                                                    NodeIndex target) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr EdgeIndex kNone = std::numeric_limits<EdgeIndex>::max();
  std::vector<double> dist(net.node_count(), kInf);
  std::vector<EdgeIndex> via(net.node_count(), kNone);
  using Entry = std::pair<double, NodeIndex>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, n] = heap.top();
    heap.pop();
    if (d > dist[n]) continue;
    if (n == target) break;
    for (EdgeIndex e : net.out_edges(n)) {
      const Edge& edge = net.edge(e);
      const double nd = d + edge.length_m;
      if (nd < dist[edge.to]) {
        dist[edge.to] = nd;
        via[edge.to] = e;
        heap.emplace(nd, edge.to);
      }
    }
  }
  if (dist[target] == kInf) return std::nullopt;
  std::vector<EdgeIndex> path;
  for (NodeIndex n = target; n != source;) {
    const EdgeIndex e = via[n];
    path.push_back(e);
    n = net.edge(e).from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::int64_t require_int(const nlohmann::json& obj, const char* key, const nlohmann::json::json_pointer& at,
                         std::string_view source, std::string_view text) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError(located_message(source, text, at, std::string("missing field '") + key + "'"));
  }
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw InputError(located_message(source, text, at / key, std::string("field '") + key + "' must be an integer"));
  }
  return v.get<std::int64_t>();
}

}  // namespace

NodeIndex RoadNetwork::add_node(std::int64_t id) {
  if (node_index_.contains(id)) {
    throw InputError("duplicate node id " + std::to_string(id));
  }
  const auto index = static_cast<NodeIndex>(node_ids_.size());
  node_ids_.push_back(id);
  node_index_.emplace(id, index);
  out_.emplace_back();
  return index;
}

EdgeIndex RoadNetwork::add_edge(std::int64_t id, std::int64_t from_id, std::int64_t to_id, double length_m) {
  const auto from = find_node(from_id);
  const auto to = find_node(to_id);
  if (!from) throw InputError("edge " + std::to_string(id) + " references unknown node " + std::to_string(from_id));
  if (!to) throw InputError("edge " + std::to_string(id) + " references unknown node " + std::to_string(to_id));
  if (edge_index_.contains(id)) throw InputError("duplicate edge id " + std::to_string(id));
  if (!(length_m > 0.0) || !std::isfinite(length_m)) {
    throw InputError("edge " + std::to_string(id) + " has non-positive length");
  }
  const auto key = pair_key(*from, *to);
  if (pair_index_.contains(key)) {
    throw InputError("edge " + std::to_string(id) + " duplicates the node pair (" + std::to_string(from_id) + ", " +
                     std::to_string(to_id) + ")");
  }
  const auto index = static_cast<EdgeIndex>(edges_.size());
  edges_.push_back(Edge{id, *from, *to, length_m});
  edge_index_.emplace(id, index);
  pair_index_.emplace(key, index);
  out_[*from].push_back(index);
  return index;
}

std::optional<NodeIndex> RoadNetwork::find_node(std::int64_t id) const {
  if (auto it = node_index_.find(id); it != node_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<EdgeIndex> RoadNetwork::find_edge(std::int64_t id) const {
  if (auto it = edge_index_.find(id); it != edge_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<EdgeIndex> RoadNetwork::edge_between(NodeIndex from, NodeIndex to) const {
  if (auto it = pair_index_.find(pair_key(from, to)); it != pair_index_.end()) return it->second;
  return std::nullopt;
}

bool RoadNetwork::is_valid(const Position& p) const {
  return p.edge < edges_.size() && std::isfinite(p.offset_m) && p.offset_m >= 0.0 &&
         p.offset_m <= edges_[p.edge].length_m;
}

double route_length(const RoadNetwork& net, const Route& route) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < route.edges.size(); ++i) sum += net.length(route.edges[i]);
  return sum + route.dest_offset_m - route.start_offset_m;
}

std::optional<std::string> route_problem(const RoadNetwork& net, const Route& route) {
  if (route.edges.empty()) return "route has no edges";
  for (EdgeIndex e : route.edges) {
    if (e >= net.edge_count()) return "route references an unknown edge";
  }
  for (std::size_t i = 0; i + 1 < route.edges.size(); ++i) {
    if (net.edge(route.edges[i]).to != net.edge(route.edges[i + 1]).from) {
      return "route is not connected between edges " + std::to_string(net.edge(route.edges[i]).id) + " and " +
             std::to_string(net.edge(route.edges[i + 1]).id);
    }
  }
  if (!net.is_valid(Position{route.edges.front(), route.start_offset_m})) return "start offset out of range";
  if (!net.is_valid(Position{route.edges.back(), route.dest_offset_m})) return "destination offset out of range";
  if (!(route_length(net, route) > 0.0)) return "route length is not positive";
  return std::nullopt;
}

std::optional<Route> shortest_route(const RoadNetwork& net, const Position& from, const Position& to) {
  if (!net.is_valid(from)) throw InputError("invalid start position");
  if (!net.is_valid(to)) throw InputError("invalid destination position");
  if (from.edge == to.edge) {
    if (to.offset_m > from.offset_m) return Route{{from.edge}, from.offset_m, to.offset_m};
    if (to.offset_m == from.offset_m) throw InputError("start and destination coincide");
  }
  const NodeIndex source = net.edge(from.edge).to;
  const NodeIndex sink = net.edge(to.edge).from;
  std::vector<EdgeIndex> middle;
  if (source != sink) {
    auto path = dijkstra_path(net, source, sink);
    if (!path) return std::nullopt;
    middle = std::move(*path);
  }
  Route route;
  route.edges.reserve(middle.size() + 2);
  route.edges.push_back(from.edge);
  route.edges.insert(route.edges.end(), middle.begin(), middle.end());
  route.edges.push_back(to.edge);
  route.start_offset_m = from.offset_m;
  route.dest_offset_m = to.offset_m;
  return route;
}

std::optional<Route> shortest_route(const RoadNetwork& net, NodeIndex from, NodeIndex to) {
  if (from >= net.node_count() || to >= net.node_count()) throw InputError("invalid node index");
  if (from == to) return std::nullopt;
  auto path = dijkstra_path(net, from, to);
  if (!path) return std::nullopt;
  Route route;
  route.edges = std::move(*path);
  route.start_offset_m = 0.0;
  route.dest_offset_m = net.length(route.edges.back());
  return route;
}

std::vector<SharedSegment> common_subpaths(const RoadNetwork& net, const Route& a, const Route& b) {
  const RouteGeometry ga(net, a);
  const RouteGeometry gb(net, b);
  const auto matches = [&](std::size_t i, std::size_t j) {
    return a.edges[i] == b.edges[j] && ga.is_full_edge(i) && gb.is_full_edge(j);
  };
  std::vector<SharedSegment> out;
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    for (std::size_t j = 0; j < b.edges.size(); ++j) {
      if (!matches(i, j)) continue;
      if (i > 0 && j > 0 && matches(i - 1, j - 1)) continue;  // not the start of a run
      SharedSegment seg{i, i, j, j, 0.0};
      while (seg.a_end < a.edges.size() && seg.b_end < b.edges.size() && matches(seg.a_end, seg.b_end)) {
        seg.length_m += net.length(a.edges[seg.a_end]);
        ++seg.a_end;
        ++seg.b_end;
      }
      out.push_back(seg);
    }
  }
  return out;
}

RouteGeometry::RouteGeometry(const RoadNetwork& net, const Route& route) : route_(&route) {
  edge_start_.reserve(route.edges.size());
  edge_length_.reserve(route.edges.size());
  double arc = -route.start_offset_m;
  for (EdgeIndex e : route.edges) {
    edge_start_.push_back(arc);
    edge_length_.push_back(net.length(e));
    arc += net.length(e);
  }
  length_ = route_length(net, route);
}

bool RouteGeometry::is_full_edge(std::size_t i) const {
  const bool first_ok = i > 0 || route_->start_offset_m == 0.0;
  const bool last_ok = i + 1 < edge_start_.size() || route_->dest_offset_m == edge_length_.back();
  return first_ok && last_ok;
}

Position RouteGeometry::position_at(double arc) const {
  auto it = std::lower_bound(edge_start_.begin(), edge_start_.end(), arc);
  std::size_t j = it == edge_start_.begin() ? 0 : static_cast<std::size_t>(it - edge_start_.begin()) - 1;
  const double offset = std::clamp(arc - edge_start_[j], 0.0, edge_length_[j]);
  return Position{route_->edges[j], offset};
}

RoadNetwork load_network_json(std::string_view text, std::string_view source) {
  using Ptr = nlohmann::json::json_pointer;
  const nlohmann::json doc = parse_json_document(text, source);
  if (!doc.is_object()) throw InputError(located_message(source, text, Ptr{}, "network must be a JSON object"));
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw InputError(located_message(source, text, Ptr{}, "missing array 'nodes'"));
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw InputError(located_message(source, text, Ptr{}, "missing array 'edges'"));
  }
  RoadNetwork net;
  const auto& nodes = doc["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Ptr at = Ptr("/nodes") / i;
    const auto id = require_int(nodes[i], "id", at, source, text);
    try {
      net.add_node(id);
    } catch (const InputError& e) {
      throw InputError(located_message(source, text, at, e.what()));
    }
  }
  const auto& edges = doc["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Ptr at = Ptr("/edges") / i;
    const auto id = require_int(edges[i], "id", at, source, text);
    const auto from = require_int(edges[i], "from", at, source, text);
    const auto to = require_int(edges[i], "to", at, source, text);
    if (!edges[i].contains("length_m") || !edges[i]["length_m"].is_number()) {
      throw InputError(located_message(source, text, at, "missing numeric field 'length_m'"));
    }
    try {
      net.add_edge(id, from, to, edges[i]["length_m"].get<double>());
    } catch (const InputError& e) {
      throw InputError(located_message(source, text, at, e.what()));
    }
  }
  return net;
}

RoadNetwork load_network_file(const std::string& path) { return load_network_json(read_text_file(path), path); }

nlohmann::json network_to_json(const RoadNetwork& net) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeIndex n = 0; n < net.node_count(); ++n) nodes.push_back({{"id", net.node_id(n)}});
  nlohmann::json edges = nlohmann::json::array();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const Edge& edge = net.edge(e);
    edges.push_back({{"id", edge.id},
                     {"from", net.node_id(edge.from)},
                     {"to", net.node_id(edge.to)},
                     {"length_m", edge.length_m}});
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

nlohmann::json route_to_json(const RoadNetwork& net, const Route& route) {
  nlohmann::json ids = nlohmann::json::array();
  for (EdgeIndex e : route.edges) ids.push_back(net.edge(e).id);
  return {{"edges", std::move(ids)},
          {"start_offset_m", route.start_offset_m},
          {"dest_offset_m", route.dest_offset_m},
          {"length_m", route_length(net, route)}};
}

}  // namespace platoon
