#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/planning.hpp"

namespace platoon {

/// Trucks entering the same edge within this gap of the previous one drive it
/// together in the spontaneous baseline.
inline constexpr double kSpontaneousGap = 60.0;  // s

struct EdgeArrival {
  EdgeIndex edge;
  std::size_t truck;
  double time;
};

/// Entry times into every fully traversed edge of every plan.
std::vector<EdgeArrival> edge_arrivals(const RoadNetwork& net, std::span<const VehiclePlan> plans);

/// Fuel saved when trucks on unchanged constant-speed plans platoon on every
/// edge they happen to enter within 60 s chains of each other.
double spontaneous_saving(const RoadNetwork& net, std::span<const VehiclePlan> default_plans, const FuelModel& m);

/// One follower's platoon stretch on its leader's route.
struct PlatoonInterval {
  double begin_arc_m = 0.0;
  double end_arc_m = 0.0;
  double follower_distance_m = 0.0;  // follower's whole route
};

/// A truck that is not a follower, with everyone following it.
struct PlatoonSummary {
  double leader_distance_m = 0.0;
  std::vector<PlatoonInterval> followers;
};

/// Meters driven at each platoon size (1 = solo), counting every member.
std::map<std::size_t, double> platoon_size_histogram(std::span<const PlatoonSummary> groups);

struct RunReport {
  std::size_t assignments = 0;
  std::size_t disregarded = 0;
  std::size_t graph_edges = 0;
  std::size_t leaders = 0;
  std::size_t followers = 0;
  double fuel_default_kg = 0.0;
  double fuel_stage3_kg = 0.0;
  double fuel_stage4_kg = 0.0;
  double fuel_spontaneous_kg = 0.0;
  double upper_bound_kg = 0.0;
  double objective_kg = 0.0;
  std::optional<double> exact_objective_kg;
  std::map<std::size_t, double> histogram;

  double saving_stage3() const { return relative(fuel_stage3_kg); }
  double saving_stage4() const { return relative(fuel_stage4_kg); }
  double saving_spontaneous() const { return relative(fuel_spontaneous_kg); }
  double upper_bound_rel() const { return fuel_default_kg > 0.0 ? upper_bound_kg / fuel_default_kg : 0.0; }

 private:
  double relative(double fuel) const { return fuel_default_kg > 0.0 ? 1.0 - fuel / fuel_default_kg : 0.0; }
};

nlohmann::json report_to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);
/// `size,meters`.
std::string histogram_csv(const RunReport& r);
/// `metric,value`.
std::string savings_csv(const RunReport& r);

}  // namespace platoon
