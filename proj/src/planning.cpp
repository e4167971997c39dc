#include "platoon/planning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "platoon/errors.hpp"
#include "platoon/json_location.hpp"

namespace platoon {
namespace {

constexpr double kArcTol = 1e-9;       // m, degenerate merge/split pieces
constexpr double kTimeTol = 1e-9;      // s
constexpr double kSpeedRelTol = 1e-9;  // relative slack on speed bounds
constexpr double kDistanceTol = 1e-6;  // m, distance conservation
constexpr double kDeadlineTol = 1e-6;  // s
constexpr double kSlopeTol = 1e-12;

bool speed_in_bounds(double v, const FuelModel& m) {
  return v >= m.v_min * (1.0 - kSpeedRelTol) && v <= m.v_max * (1.0 + kSpeedRelTol);
}

// Feasible window [lo, hi] of the shared-stretch parameter s for one linear
// constraint `coef * s <= rhs`.
struct Window {
  double lo;
  double hi;
  bool empty = false;

  void constrain(double coef, double rhs, double scale) {
    if (std::abs(coef) <= kSlopeTol) {
      if (rhs < -kArcTol * std::max(1.0, scale)) empty = true;
    } else if (coef > 0.0) {
      hi = std::min(hi, rhs / coef);
    } else {
      lo = std::max(lo, rhs / coef);
    }
  }
};

struct Candidate {
  VehiclePlan plan;
  double merge_arc = 0.0;
  double split_arc = 0.0;
  double arc_offset = 0.0;
  double merge_time = 0.0;
  double split_time = 0.0;
};

}  // namespace

double VehiclePlan::distance() const {
  double d = 0.0;
  for (std::size_t i = 0; i < speeds.size(); ++i) d += speeds[i] * (times[i + 1] - times[i]);
  return d;
}

double lowest_constant_speed(double distance_m, const Assignment& a, const FuelModel& m) {
  const double window = a.t_deadline - a.t_start;
  if (!(window > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(m.v_min, distance_m / window);
}

VehiclePlan default_plan(const RoadNetwork& net, const Assignment& a, const Route& route, const FuelModel& m) {
  const double distance = route_length(net, route);
  const double v_lowest = lowest_constant_speed(distance, a, m);
  if (v_lowest > m.v_max * (1.0 + kSpeedRelTol)) {
    std::ostringstream msg;
    msg << "assignment " << a.id << " needs " << v_lowest << " m/s to meet its deadline (v_max " << m.v_max << ")";
    throw InfeasibleError(msg.str());
  }
  // f_0 is affine with a0 >= 0, hence non-decreasing: the argmin over
  // [v_lowest, v_max] is its left end (ties go to the smaller speed).
  const double v = std::min(v_lowest, m.v_max);
  VehiclePlan plan;
  plan.route = route;
  plan.speeds = {v};
  plan.times = {a.t_start, a.t_start + distance / v};
  plan.follower_flags = {0};
  return plan;
}

std::optional<AdaptedPlan> adapted_plan(const RoadNetwork& net, const Assignment& follower,
                                        const Route& follower_route, const VehiclePlan& leader_plan,
                                        AssignmentId leader_id, const FuelModel& m) {
  if (leader_plan.pieces() != 1 || leader_plan.follower_flags.front() != 0) {
    throw std::invalid_argument("adapted_plan: leader plan must be a constant-speed default plan");
  }
  const auto segments = common_subpaths(net, follower_route, leader_plan.route);
  if (segments.empty()) return std::nullopt;

  const VehiclePlan own_default = default_plan(net, follower, follower_route, m);
  const double own_fuel = plan_fuel(m, own_default);
  const double v_default = own_default.speeds.front();

  const RouteGeometry follower_geo(net, follower_route);
  const RouteGeometry leader_geo(net, leader_plan.route);
  const double v_lead = leader_plan.speeds.front();
  const double t_lead = leader_plan.times.front();
  const double t_start = follower.t_start;
  const double t_deadline = follower.t_deadline;
  const double total = follower_geo.length();

  std::optional<AdaptedPlan> best;
  for (const SharedSegment& seg : segments) {
    // Shared stretch parameter s in [0, length]: follower arc a_f + s,
    // leader arc a_l + s, leader passes it at t_lead + (a_l + s) / v_lead.
    const double a_f = follower_geo.edge_start_arc(seg.a_begin);
    const double a_l = leader_geo.edge_start_arc(seg.b_begin);
    const double lag = t_lead + a_l / v_lead - t_start;  // leader time at s = 0, relative to follower start
    const double remaining = total - a_f;
    const double slack_to_deadline = t_deadline - t_lead - a_l / v_lead;
    const double scale = std::max({1.0, a_f, seg.length_m, remaining});

    Window w{0.0, seg.length_m};
    // Pre-merge speed (a_f + s) / (lag + s / v_lead) at most v_max ...
    w.constrain(1.0 - m.v_max / v_lead, m.v_max * lag - a_f, scale);
    // ... and at least v_min.
    w.constrain(m.v_min / v_lead - 1.0, a_f - m.v_min * lag, scale);
    // After splitting, the rest of the route must fit before the deadline at v_max.
    w.constrain(m.v_max / v_lead - 1.0, m.v_max * slack_to_deadline - remaining, scale);
    if (w.empty || !(w.hi - w.lo > kArcTol)) continue;

    const double s_merge = w.lo;
    const double s_split = w.hi;
    Candidate c;
    c.merge_arc = a_l + s_merge;
    c.split_arc = a_l + s_split;
    c.arc_offset = a_f - a_l;
    c.merge_time = t_lead + c.merge_arc / v_lead;
    c.split_time = t_lead + c.split_arc / v_lead;

    VehiclePlan& plan = c.plan;
    plan.route = follower_route;
    plan.leader = leader_id;
    plan.times.push_back(t_start);

    const double pre = a_f + s_merge;
    const double pre_duration = c.merge_time - t_start;
    if (pre <= kArcTol) {
      if (std::abs(pre_duration) > kTimeTol * std::max(1.0, std::abs(t_start))) continue;
      c.merge_time = t_start;
    } else {
      if (!(pre_duration > 0.0)) continue;
      const double v1 = pre / pre_duration;
      if (!speed_in_bounds(v1, m)) continue;
      plan.speeds.push_back(v1);
      plan.follower_flags.push_back(0);
      plan.times.push_back(c.merge_time);
    }

    plan.speeds.push_back(v_lead);
    plan.follower_flags.push_back(1);
    plan.times.push_back(c.split_time);

    const double tail = total - (a_f + s_split);
    if (tail > kArcTol) {
      const double available = t_deadline - c.split_time;
      if (!(available > 0.0)) continue;
      const double v3 = std::max(v_default, tail / available);
      if (!speed_in_bounds(v3, m)) continue;
      plan.speeds.push_back(v3);
      plan.follower_flags.push_back(0);
      plan.times.push_back(c.split_time + tail / v3);
    } else if (c.split_time > t_deadline + kDeadlineTol) {
      continue;
    }

    const double saving = own_fuel - plan_fuel(m, plan);
    if (!(saving > 0.0)) continue;
    if (!best || saving > best->saving_kg) {
      best = AdaptedPlan{std::move(c.plan), saving, leader_id, c.merge_arc, c.split_arc,
                         c.arc_offset,      c.merge_time, c.split_time, v_lead};
    }
  }
  return best;
}

PlanSampler::PlanSampler(const RoadNetwork& net, const VehiclePlan& plan)
    : plan_(&plan), geometry_(net, plan.route) {
  cumulative_.reserve(plan.times.size());
  double arc = 0.0;
  cumulative_.push_back(arc);
  for (std::size_t i = 0; i < plan.speeds.size(); ++i) {
    arc += plan.speeds[i] * (plan.times[i + 1] - plan.times[i]);
    cumulative_.push_back(arc);
  }
}

double PlanSampler::arc_at(double t) const {
  const auto& times = plan_->times;
  if (t < times.front() || t > times.back()) throw std::out_of_range("time outside plan");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  i = std::min(i == 0 ? 0 : i - 1, plan_->speeds.size() - 1);
  return cumulative_[i] + plan_->speeds[i] * (t - times[i]);
}

TrajectorySample PlanSampler::sample(double t) const {
  const auto& times = plan_->times;
  if (plan_->speeds.empty() || t < times.front() || t >= times.back()) {
    throw std::out_of_range("time outside plan domain");
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double arc = cumulative_[i] + plan_->speeds[i] * (t - times[i]);
  return TrajectorySample{geometry_.position_at(arc), plan_->speeds[i], plan_->follower_flags[i] != 0};
}

TrajectorySample sample(const RoadNetwork& net, const VehiclePlan& plan, double t) {
  return PlanSampler(net, plan).sample(t);
}

bool positions_coincide(const RoadNetwork& net, const Position& a, const Position& b, double tol_m) {
  if (a.edge == b.edge) return std::abs(a.offset_m - b.offset_m) <= tol_m;
  // Different edges can only meet at a shared node.
  struct NodeGap {
    NodeIndex node;
    double gap;
  };
  const auto ends = [&](const Position& p) {
    const Edge& e = net.edge(p.edge);
    return std::array<NodeGap, 2>{NodeGap{e.from, p.offset_m}, NodeGap{e.to, e.length_m - p.offset_m}};
  };
  for (const NodeGap& x : ends(a)) {
    for (const NodeGap& y : ends(b)) {
      if (x.node == y.node && x.gap + y.gap <= tol_m) return true;
    }
  }
  return false;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kShape: return "shape";
    case ViolationKind::kRoute: return "route";
    case ViolationKind::kStartPosition: return "start_position";
    case ViolationKind::kDestination: return "destination";
    case ViolationKind::kStartTime: return "start_time";
    case ViolationKind::kDeadline: return "deadline";
    case ViolationKind::kTimeOrder: return "time_order";
    case ViolationKind::kSpeedBound: return "speed_bound";
    case ViolationKind::kDistance: return "distance";
    case ViolationKind::kFollowerPattern: return "follower_pattern";
  }
  return "unknown";
}

std::vector<PlanViolation> validate(const RoadNetwork& net, const VehiclePlan& plan, const Assignment& a,
                                    const FuelModel& m) {
  std::vector<PlanViolation> out;
  auto add = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  const std::size_t k = plan.speeds.size();
  if (k == 0 || plan.times.size() != k + 1 || plan.follower_flags.size() != k) {
    add(ViolationKind::kShape, "plan needs K >= 1 speeds, K+1 times and K follower flags");
    return out;
  }
  if (auto problem = route_problem(net, plan.route)) {
    add(ViolationKind::kRoute, *problem);
    return out;
  }
  if (!(plan.route.edges.front() == a.start.edge && plan.route.start_offset_m == a.start.offset_m)) {
    add(ViolationKind::kStartPosition, "route does not begin at the assignment start");
  }
  if (!(plan.route.edges.back() == a.dest.edge && plan.route.dest_offset_m == a.dest.offset_m)) {
    add(ViolationKind::kDestination, "route does not end at the assignment destination");
  }
  if (std::abs(plan.times.front() - a.t_start) > kTimeTol * std::max(1.0, std::abs(a.t_start))) {
    add(ViolationKind::kStartTime, "plan starts at " + std::to_string(plan.times.front()) + " s, assignment at " +
                                       std::to_string(a.t_start) + " s");
  }
  if (plan.times.back() > a.t_deadline + kDeadlineTol) {
    add(ViolationKind::kDeadline, "arrival " + std::to_string(plan.times.back()) + " s after deadline " +
                                      std::to_string(a.t_deadline) + " s");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(plan.times[i + 1] > plan.times[i])) {
      add(ViolationKind::kTimeOrder, "breakpoints not strictly increasing at piece " + std::to_string(i));
    }
    if (!speed_in_bounds(plan.speeds[i], m)) {
      add(ViolationKind::kSpeedBound, "piece " + std::to_string(i) + " speed " + std::to_string(plan.speeds[i]) +
                                          " m/s outside [v_min, v_max]");
    }
  }
  const double expected = route_length(net, plan.route);
  const double driven = plan.distance();
  if (std::abs(driven - expected) > kDistanceTol) {
    add(ViolationKind::kDistance, "plan covers " + std::to_string(driven) + " m, route is " +
                                      std::to_string(expected) + " m");
  }
  std::size_t runs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (plan.follower_flags[i] > 1) add(ViolationKind::kFollowerPattern, "follower flag must be 0 or 1");
    if (plan.follower_flags[i] == 1 && (i == 0 || plan.follower_flags[i - 1] != 1)) ++runs;
  }
  if (runs > 1) add(ViolationKind::kFollowerPattern, "more than one platoon episode");
  if (runs == 1 && !plan.leader) add(ViolationKind::kFollowerPattern, "follower pieces without a platoon leader");
  return out;
}

namespace {

Position parse_position(const RoadNetwork& net, const nlohmann::json& j, const nlohmann::json::json_pointer& at,
                        std::string_view source, std::string_view text) {
  if (!j.is_object() || !j.contains("edge") || !j["edge"].is_number_integer()) {
    throw InputError(located_message(source, text, at, "position needs an integer 'edge'"));
  }
  if (!j.contains("offset_m") || !j["offset_m"].is_number()) {
    throw InputError(located_message(source, text, at, "position needs a numeric 'offset_m'"));
  }
  const auto edge = net.find_edge(j["edge"].get<std::int64_t>());
  if (!edge) throw InputError(located_message(source, text, at / "edge", "unknown edge id"));
  Position p{*edge, j["offset_m"].get<double>()};
  if (!net.is_valid(p)) throw InputError(located_message(source, text, at / "offset_m", "offset outside the edge"));
  return p;
}

nlohmann::json position_to_json(const RoadNetwork& net, const Position& p) {
  return {{"edge", net.edge(p.edge).id}, {"offset_m", p.offset_m}};
}

}  // namespace

std::vector<Assignment> load_assignments_json(const RoadNetwork& net, std::string_view text,
                                              std::string_view source) {
  using Ptr = nlohmann::json::json_pointer;
  const nlohmann::json doc = parse_json_document(text, source);
  if (!doc.is_array()) throw InputError(located_message(source, text, Ptr{}, "assignments must be a JSON array"));
  std::vector<Assignment> out;
  out.reserve(doc.size());
  std::unordered_map<AssignmentId, std::size_t> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Ptr at = Ptr{} / i;
    const auto& j = doc[i];
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
      throw InputError(located_message(source, text, at, "assignment needs an integer 'id'"));
    }
    for (const char* key : {"start", "dest"}) {
      if (!j.contains(key)) throw InputError(located_message(source, text, at, std::string("missing '") + key + "'"));
    }
    for (const char* key : {"t_start_s", "t_deadline_s"}) {
      if (!j.contains(key) || !j[key].is_number()) {
        throw InputError(located_message(source, text, at, std::string("missing numeric '") + key + "'"));
      }
    }
    Assignment a;
    a.id = j["id"].get<AssignmentId>();
    if (!seen.emplace(a.id, i).second) {
      throw InputError(located_message(source, text, at / "id", "duplicate assignment id"));
    }
    a.start = parse_position(net, j["start"], at / "start", source, text);
    a.dest = parse_position(net, j["dest"], at / "dest", source, text);
    a.t_start = j["t_start_s"].get<double>();
    a.t_deadline = j["t_deadline_s"].get<double>();
    if (!(a.t_deadline > a.t_start)) {
      throw InputError(located_message(source, text, at / "t_deadline_s", "deadline must be after start time"));
    }
    if (a.start == a.dest) throw InputError(located_message(source, text, at, "start and destination coincide"));
    out.push_back(a);
  }
  return out;
}

std::vector<Assignment> load_assignments_file(const RoadNetwork& net, const std::string& path) {
  return load_assignments_json(net, read_text_file(path), path);
}

nlohmann::json assignments_to_json(const RoadNetwork& net, std::span<const Assignment> assignments) {
  nlohmann::json out = nlohmann::json::array();
  for (const Assignment& a : assignments) {
    out.push_back({{"id", a.id},
                   {"start", position_to_json(net, a.start)},
                   {"dest", position_to_json(net, a.dest)},
                   {"t_start_s", a.t_start},
                   {"t_deadline_s", a.t_deadline}});
  }
  return out;
}

nlohmann::json plan_to_json(const RoadNetwork& net, const VehiclePlan& plan) {
  nlohmann::json j{{"route", route_to_json(net, plan.route)},
                   {"speeds_mps", plan.speeds},
                   {"breakpoints_s", plan.times},
                   {"follower_flags", plan.follower_flags}};
  j["leader"] = plan.leader ? nlohmann::json(*plan.leader) : nlohmann::json(nullptr);
  return j;
}

}  // namespace platoon
