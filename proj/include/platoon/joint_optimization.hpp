#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "platoon/planning.hpp"

namespace platoon {

/// One truck's segment sequence inside a coordination group.
struct GroupMember {
  AssignmentId id = 0;
  Route route;
  double t_start = 0.0;
  double t_deadline = 0.0;
  std::vector<double> distances;        // W, meters, all > 0
  std::vector<std::uint8_t> flags;      // p: 1 while following
  // Followers only: leader segments [merge_index, split_index) are driven in
  // the platoon. has_pre / has_tail mark the solo catch-up and finish pieces.
  std::size_t merge_index = 0;
  std::size_t split_index = 0;
  bool has_pre = false;
  bool has_tail = false;
};

/// A leader (unchanged route, default plan as the starting point) and the
/// followers adapted to it.
struct CoordinationGroup {
  GroupMember leader;
  std::vector<GroupMember> followers;
  double leader_speed = 0.0;          // of the default plan
  std::vector<double> event_arcs;     // leader arc of every event, size K+1
  std::vector<double> initial_events; // event times in the pairwise plans
  std::vector<double> initial_arrivals;  // per follower
};

struct FollowerInput {
  const Assignment* assignment;
  const AdaptedPlan* plan;
};

/// Events closer than 1e-7 m on the leader route are merged. Throws
/// InputError when a follower is not adapted to this leader.
CoordinationGroup build_group(const RoadNetwork& net, const Assignment& leader, const VehiclePlan& leader_plan,
                              std::span<const FollowerInput> followers);

struct SolverOptions {
  double tol = 1e-8;       // relative duality gap
  int max_iter = 200;      // Newton steps
  double barrier_mu = 20.0;
};

/// Event times on the leader timeline plus follower arrival times; enough to
/// recover every traversal time of the group.
struct TimingSolution {
  std::vector<double> events;
  std::vector<double> arrivals;  // per follower (equals the split event without tail)
  double objective_kg = 0.0;
  double initial_objective_kg = 0.0;
  double kkt_residual = 0.0;
  int newton_steps = 0;
  std::size_t free_variables = 0;
  bool converged = false;
  bool kept_initial = false;  // optimizer did not beat the pairwise plans

  /// Traversal times of member k (0 = leader, k = follower k-1).
  std::vector<double> durations(const CoordinationGroup& g, std::size_t member) const;
};

/// The pairwise plans expressed as a solution.
TimingSolution initial_solution(const CoordinationGroup& g, const FuelModel& m);

/// Sum of per-segment fuel over all members for given event/arrival times.
double group_objective(const CoordinationGroup& g, const FuelModel& m, std::span<const double> events,
                       std::span<const double> arrivals);

/// Minimizes group fuel under speed bounds, deadlines, merge synchronization
/// and shared platoon timing. Never returns worse than the initial point.
/// Throws InfeasibleError if the constraints admit no solution.
TimingSolution solve_group(const CoordinationGroup& g, const FuelModel& m, const SolverOptions& options = {});

/// Leader first, then followers in group order. Adjacent pieces with equal
/// speed and flag are merged.
std::vector<VehiclePlan> extract_plans(const CoordinationGroup& g, const TimingSolution& sol);

}  // namespace platoon
