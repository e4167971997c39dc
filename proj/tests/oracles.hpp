#pragma once

// Slow, independent reference implementations used only by tests.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "platoon/joint_optimization.hpp"
#include "platoon/planning.hpp"

namespace oracle {

using platoon::CoordinationGroup;
using platoon::FuelModel;

// Shortest node-to-node distance by enumerating every simple path.
inline std::optional<double> path_enum_distance(const platoon::RoadNetwork& net, platoon::NodeIndex from,
                                                platoon::NodeIndex to) {
  std::optional<double> best;
  std::vector<char> seen(net.node_count(), 0);
  std::function<void(platoon::NodeIndex, double)> walk = [&](platoon::NodeIndex n, double d) {
    if (n == to) {
      if (!best || d < *best) best = d;
      return;
    }
    seen[n] = 1;
    for (platoon::EdgeIndex e : net.out_edges(n)) {
      const auto& edge = net.edge(e);
      if (!seen[edge.to]) walk(edge.to, d + edge.length_m);
    }
    seen[n] = 0;
  };
  walk(from, 0.0);
  return best;
}

// Fuel of a plan by midpoint quadrature over time, reading speed and follower
// flag from the trajectory sampler.
inline double quadrature_fuel(const platoon::RoadNetwork& net, const FuelModel& m, const platoon::VehiclePlan& plan,
                              int steps_per_piece = 256) {
  const platoon::PlanSampler sampler(net, plan);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < plan.times.size(); ++i) {
    const double t0 = plan.times[i];
    const double h = (plan.times[i + 1] - t0) / steps_per_piece;
    for (int k = 0; k < steps_per_piece; ++k) {
      const auto s = sampler.sample(t0 + (k + 0.5) * h);
      const double a = s.follower ? m.ap : m.a0;
      const double b = s.follower ? m.bp : m.b0;
      total += (a * s.speed + b) * s.speed * h;
    }
  }
  return total;
}

struct Edge {
  std::uint32_t src;
  std::uint32_t dst;
  double w;
};

// Leader-selection objective straight from the definition.
inline double leader_objective(std::size_t n, const std::vector<Edge>& edges, std::uint64_t mask) {
  std::vector<double> best(n, 0.0);
  for (const Edge& e : edges) {
    if ((mask >> e.src & 1) == 0 && (mask >> e.dst & 1) == 1) best[e.src] = std::max(best[e.src], e.w);
  }
  double total = 0.0;
  for (double b : best) total += b;
  return total;
}

inline double best_leader_objective(std::size_t n, const std::vector<Edge>& edges) {
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    best = std::max(best, leader_objective(n, edges, mask));
  }
  return best;
}

// Minimum number of subsets covering 0..universe-1, by enumeration.
inline std::size_t min_set_cover(std::size_t universe, const std::vector<std::vector<std::size_t>>& family) {
  const std::uint64_t all = universe == 0 ? 0 : (std::uint64_t{1} << universe) - 1;
  std::size_t best = family.size() + 1;
  for (std::uint64_t pick = 0; pick < (std::uint64_t{1} << family.size()); ++pick) {
    std::uint64_t covered = 0;
    for (std::size_t s = 0; s < family.size(); ++s) {
      if (pick >> s & 1) {
        for (std::size_t e : family[s]) covered |= std::uint64_t{1} << e;
      }
    }
    if (covered == all) best = std::min<std::size_t>(best, std::popcount(pick));
  }
  return best;
}

// Joint-optimization model evaluated member by member from the group data:
// traversal times, speed bounds, deadlines, synchronized merge and shared
// platoon timing.
struct GroupPoint {
  std::vector<double> events;
  std::vector<double> arrivals;
};

inline std::vector<double> member_times(const CoordinationGroup& g, const GroupPoint& p, std::size_t k) {
  std::vector<double> t;
  if (k == 0) {
    for (std::size_t i = 0; i + 1 < p.events.size(); ++i) t.push_back(p.events[i + 1] - p.events[i]);
    return t;
  }
  const auto& f = g.followers[k - 1];
  if (f.has_pre) t.push_back(p.events[f.merge_index] - f.t_start);
  for (std::size_t i = f.merge_index; i < f.split_index; ++i) t.push_back(p.events[i + 1] - p.events[i]);
  if (f.has_tail) t.push_back(p.arrivals[k - 1] - p.events[f.split_index]);
  return t;
}

inline const platoon::GroupMember& member(const CoordinationGroup& g, std::size_t k) {
  return k == 0 ? g.leader : g.followers[k - 1];
}

inline double group_fuel(const CoordinationGroup& g, const FuelModel& m, const GroupPoint& p) {
  double total = 0.0;
  for (std::size_t k = 0; k <= g.followers.size(); ++k) {
    const auto& mem = member(g, k);
    const auto t = member_times(g, p, k);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double w = mem.distances[i];
      const double a = mem.flags[i] ? m.ap : m.a0;
      const double b = mem.flags[i] ? m.bp : m.b0;
      total += (a * w / t[i] + b) * w;
    }
  }
  return total;
}

inline bool group_feasible(const CoordinationGroup& g, const FuelModel& m, const GroupPoint& p, double tol = 1e-9) {
  if (std::abs(p.events.front() - g.leader.t_start) > tol) return false;
  for (std::size_t k = 0; k <= g.followers.size(); ++k) {
    const auto& mem = member(g, k);
    const auto t = member_times(g, p, k);
    if (t.size() != mem.distances.size()) return false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double w = mem.distances[i];
      if (t[i] < w / m.v_max - tol || t[i] > w / m.v_min + tol) return false;
    }
    if (k > 0) {
      const auto& f = g.followers[k - 1];
      if (!f.has_pre && std::abs(p.events[f.merge_index] - f.t_start) > tol) return false;
      const double arrive = f.has_tail ? p.arrivals[k - 1] : p.events[f.split_index];
      if (arrive > f.t_deadline + tol) return false;
    }
  }
  return p.events.back() <= g.leader.t_deadline + tol;
}

// Coordinates a grid search may move: leader events (minus those pinned to a
// follower's start) and follower arrivals after a solo tail.
struct FreeCoord {
  bool arrival;
  std::size_t index;
};

inline std::vector<FreeCoord> free_coordinates(const CoordinationGroup& g) {
  std::vector<char> pinned(g.event_arcs.size(), 0);
  pinned[0] = 1;
  for (const auto& f : g.followers) {
    if (!f.has_pre) pinned[f.merge_index] = 1;
  }
  std::vector<FreeCoord> out;
  for (std::size_t i = 0; i < pinned.size(); ++i) {
    if (!pinned[i]) out.push_back({false, i});
  }
  for (std::size_t f = 0; f < g.followers.size(); ++f) {
    if (g.followers[f].has_tail) out.push_back({true, f});
  }
  return out;
}

// Nested grid search: a (2*half+1)^d lattice around the incumbent, shrinking
// by `shrink` per level. Starts from the group's initial (feasible) point.
inline double grid_search(const CoordinationGroup& g, const FuelModel& m, int half = 10, int levels = 40,
                          double shrink = 0.3) {
  const auto coords = free_coordinates(g);
  GroupPoint best{g.initial_events, g.initial_arrivals};
  double best_f = group_fuel(g, m, best);
  const std::size_t d = coords.size();
  double h = 0.0;
  for (const auto& c : coords) {
    const double lo = c.arrival ? g.followers[c.index].t_start : g.leader.t_start;
    const double hi = c.arrival ? g.followers[c.index].t_deadline : g.leader.t_deadline;
    h = std::max(h, hi - lo);
  }
  h /= half;
  auto at = [](GroupPoint& p, const FreeCoord& c) -> double& {
    return c.arrival ? p.arrivals[c.index] : p.events[c.index];
  };
  for (int level = 0; level < levels && d > 0; ++level) {
    const GroupPoint center = best;
    std::vector<int> idx(d, -half);
    while (true) {
      GroupPoint p = center;
      for (std::size_t k = 0; k < d; ++k) at(p, coords[k]) += idx[k] * h;
      if (group_feasible(g, m, p)) {
        const double f = group_fuel(g, m, p);
        if (f < best_f) {
          best_f = f;
          best = p;
        }
      }
      std::size_t k = 0;
      while (k < d && ++idx[k] > half) idx[k++] = -half;
      if (k == d) break;
    }
    h *= shrink;
  }
  return best_f;
}

}  // namespace oracle
