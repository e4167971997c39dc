#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "platoon/fuel_model.hpp"
#include "platoon/road_network.hpp"

namespace platoon {

using AssignmentId = std::int64_t;

struct Assignment {
  AssignmentId id = 0;
  Position start;
  Position dest;
  double t_start = 0.0;     // s
  double t_deadline = 0.0;  // s
};

/// Route plus piecewise-constant speed schedule. Piece i runs at speeds[i]
/// on [times[i], times[i+1]) with follower flag follower_flags[i].
struct VehiclePlan {
  Route route;
  std::vector<double> speeds;
  std::vector<double> times;
  std::vector<std::uint8_t> follower_flags;
  std::optional<AssignmentId> leader;  // platoon leader while following

  std::size_t pieces() const { return speeds.size(); }
  double start_time() const { return times.front(); }
  double arrival_time() const { return times.back(); }
  /// Sum of speed * duration over all pieces.
  double distance() const;
};

struct TrajectorySample {
  Position position;
  double speed = 0.0;
  bool follower = false;
};

/// A plan for one truck that follows another truck's (unchanged) default plan
/// for one contiguous stretch.
struct AdaptedPlan {
  VehiclePlan plan;
  double saving_kg = 0.0;     // fuel(default) - fuel(plan)
  AssignmentId leader = 0;
  double merge_arc_m = 0.0;   // merge/split as arc positions on the leader's route
  double split_arc_m = 0.0;
  double arc_offset_m = 0.0;  // follower arc minus leader arc along the shared stretch
  double merge_time = 0.0;
  double split_time = 0.0;
  double platoon_speed = 0.0;
};

/// Constant-speed plan at the cheapest solo speed that meets the deadline.
/// Throws InfeasibleError when even v_max is too slow.
VehiclePlan default_plan(const RoadNetwork& net, const Assignment& a, const Route& route, const FuelModel& m);

/// Slowest admissible constant speed max(v_min, D / (t_D - t_S)); no upper
/// check.
double lowest_constant_speed(double distance_m, const Assignment& a, const FuelModel& m);

/// Plan for `follower` that merges with `leader_plan` as early as possible and
/// splits as late as possible on each shared stretch; the best-saving stretch
/// wins. nullopt when routes do not overlap, timing is infeasible, or no
/// candidate saves fuel. `leader_plan` must be a single-piece default plan.
std::optional<AdaptedPlan> adapted_plan(const RoadNetwork& net, const Assignment& follower,
                                        const Route& follower_route, const VehiclePlan& leader_plan,
                                        AssignmentId leader_id, const FuelModel& m);

/// Trajectory queries against one plan; caches route prefix sums.
class PlanSampler {
 public:
  PlanSampler(const RoadNetwork& net, const VehiclePlan& plan);

  /// Right-open domain [t_1, t_{K+1}); throws std::out_of_range outside.
  TrajectorySample sample(double t) const;
  /// Distance traveled since t_1 at time t in [t_1, t_{K+1}].
  double arc_at(double t) const;
  const RouteGeometry& geometry() const { return geometry_; }

 private:
  const VehiclePlan* plan_;
  RouteGeometry geometry_;
  std::vector<double> cumulative_;  // arc at each breakpoint
};

TrajectorySample sample(const RoadNetwork& net, const VehiclePlan& plan, double t);

/// Same physical point: equal offsets on one edge, or both at the same node
/// (an edge end and another edge's start, or two edges ending there).
bool positions_coincide(const RoadNetwork& net, const Position& a, const Position& b, double tol_m);

enum class ViolationKind {
  kShape,
  kRoute,
  kStartPosition,
  kDestination,
  kStartTime,
  kDeadline,
  kTimeOrder,
  kSpeedBound,
  kDistance,
  kFollowerPattern,
};

struct PlanViolation {
  ViolationKind kind;
  std::string message;
};

std::string_view to_string(ViolationKind kind);

/// Every violated plan invariant (empty means valid).
std::vector<PlanViolation> validate(const RoadNetwork& net, const VehiclePlan& plan, const Assignment& a,
                                    const FuelModel& m);

/// JSON list `[{id, start:{edge, offset_m}, dest:{edge, offset_m}, t_start_s, t_deadline_s}]`
/// with external edge ids. Errors carry "<source>:<line>:" prefixes.
std::vector<Assignment> load_assignments_json(const RoadNetwork& net, std::string_view text,
                                              std::string_view source = "<assignments>");
std::vector<Assignment> load_assignments_file(const RoadNetwork& net, const std::string& path);
nlohmann::json assignments_to_json(const RoadNetwork& net, std::span<const Assignment> assignments);

nlohmann::json plan_to_json(const RoadNetwork& net, const VehiclePlan& plan);

}  // namespace platoon
