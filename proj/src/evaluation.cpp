#include "platoon/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "platoon/errors.hpp"

namespace platoon {

std::vector<EdgeArrival> edge_arrivals(const RoadNetwork& net, std::span<const VehiclePlan> plans) {
  std::vector<EdgeArrival> out;
  for (std::size_t t = 0; t < plans.size(); ++t) {
    const VehiclePlan& plan = plans[t];
    const RouteGeometry geo(net, plan.route);
    // Walk the pieces alongside the edges to invert the arc-time map.
    std::size_t piece = 0;
    double piece_arc = 0.0;
    for (std::size_t k = 0; k < geo.edge_count(); ++k) {
      if (!geo.is_full_edge(k)) continue;
      const double arc = geo.edge_start_arc(k);
      while (piece + 1 < plan.pieces() &&
             piece_arc + plan.speeds[piece] * (plan.times[piece + 1] - plan.times[piece]) <= arc) {
        piece_arc += plan.speeds[piece] * (plan.times[piece + 1] - plan.times[piece]);
        ++piece;
      }
      out.push_back({plan.route.edges[k], t, plan.times[piece] + (arc - piece_arc) / plan.speeds[piece]});
    }
  }
  return out;
}

double spontaneous_saving(const RoadNetwork& net, std::span<const VehiclePlan> default_plans, const FuelModel& m) {
  auto arrivals = edge_arrivals(net, default_plans);
  std::sort(arrivals.begin(), arrivals.end(), [](const EdgeArrival& a, const EdgeArrival& b) {
    return a.edge != b.edge ? a.edge < b.edge : (a.time != b.time ? a.time < b.time : a.truck < b.truck);
  });
  double saving = 0.0;
  std::size_t i = 0;
  while (i < arrivals.size()) {
    std::size_t j = i + 1;
    while (j < arrivals.size() && arrivals[j].edge == arrivals[i].edge &&
           arrivals[j].time - arrivals[j - 1].time <= kSpontaneousGap) {
      ++j;
    }
    if (j - i > 1) {
      // Everybody but one member follows; the cheapest choice of front truck
      // is the one that would save the least.
      const double len = net.length(arrivals[i].edge);
      double sum = 0.0;
      double least = std::numeric_limits<double>::infinity();
      for (std::size_t k = i; k < j; ++k) {
        const double v = default_plans[arrivals[k].truck].speeds.front();
        const double s = (m.per_distance(v, false) - m.per_distance(v, true)) * len;
        sum += s;
        least = std::min(least, s);
      }
      saving += sum - least;
    }
    i = j;
  }
  return saving;
}

std::map<std::size_t, double> platoon_size_histogram(std::span<const PlatoonSummary> groups) {
  std::map<std::size_t, double> hist;
  for (const PlatoonSummary& g : groups) {
    std::vector<std::pair<double, int>> marks{{0.0, 0}, {g.leader_distance_m, 0}};
    for (const PlatoonInterval& f : g.followers) {
      marks.emplace_back(f.begin_arc_m, +1);
      marks.emplace_back(f.end_arc_m, -1);
      const double solo = f.follower_distance_m - (f.end_arc_m - f.begin_arc_m);
      if (solo > 0.0) hist[1] += solo;
    }
    std::sort(marks.begin(), marks.end());
    int active = 0;
    for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
      active += marks[k].second;
      const double len = marks[k + 1].first - marks[k].first;
      if (len <= 0.0) continue;
      const std::size_t size = 1 + static_cast<std::size_t>(std::max(active, 0));
      hist[size] += len * static_cast<double>(size);
    }
  }
  return hist;
}

nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [size, meters] : r.histogram) hist[std::to_string(size)] = meters;
  nlohmann::json j{{"assignments", r.assignments},
                   {"disregarded", r.disregarded},
                   {"graph_edges", r.graph_edges},
                   {"leaders", r.leaders},
                   {"followers", r.followers},
                   {"fuel_default_kg", r.fuel_default_kg},
                   {"fuel_stage3_kg", r.fuel_stage3_kg},
                   {"fuel_stage4_kg", r.fuel_stage4_kg},
                   {"fuel_spontaneous_kg", r.fuel_spontaneous_kg},
                   {"upper_bound_kg", r.upper_bound_kg},
                   {"objective_kg", r.objective_kg},
                   {"saving_stage3", r.saving_stage3()},
                   {"saving_stage4", r.saving_stage4()},
                   {"saving_spontaneous", r.saving_spontaneous()},
                   {"upper_bound_rel", r.upper_bound_rel()},
                   {"platoon_size_meters", hist}};
  j["exact_objective_kg"] = r.exact_objective_kg ? nlohmann::json(*r.exact_objective_kg) : nlohmann::json(nullptr);
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  try {
    r.assignments = j.at("assignments").get<std::size_t>();
    r.disregarded = j.at("disregarded").get<std::size_t>();
    r.graph_edges = j.at("graph_edges").get<std::size_t>();
    r.leaders = j.at("leaders").get<std::size_t>();
    r.followers = j.at("followers").get<std::size_t>();
    r.fuel_default_kg = j.at("fuel_default_kg").get<double>();
    r.fuel_stage3_kg = j.at("fuel_stage3_kg").get<double>();
    r.fuel_stage4_kg = j.at("fuel_stage4_kg").get<double>();
    r.fuel_spontaneous_kg = j.at("fuel_spontaneous_kg").get<double>();
    r.upper_bound_kg = j.at("upper_bound_kg").get<double>();
    r.objective_kg = j.at("objective_kg").get<double>();
    if (j.contains("exact_objective_kg") && !j["exact_objective_kg"].is_null()) {
      r.exact_objective_kg = j["exact_objective_kg"].get<double>();
    }
    for (const auto& [size, meters] : j.at("platoon_size_meters").items()) {
      r.histogram[std::stoul(size)] = meters.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed run report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw InputError(std::string("malformed run report: ") + e.what());
  }
  return r;
}

std::string histogram_csv(const RunReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "size,meters\n";
  for (const auto& [size, meters] : r.histogram) out << size << ',' << meters << '\n';
  return out.str();
}

std::string savings_csv(const RunReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "metric,value\n";
  out << "fuel_default_kg," << r.fuel_default_kg << '\n';
  out << "fuel_stage3_kg," << r.fuel_stage3_kg << '\n';
  out << "fuel_stage4_kg," << r.fuel_stage4_kg << '\n';
  out << "fuel_spontaneous_kg," << r.fuel_spontaneous_kg << '\n';
  out << "upper_bound_kg," << r.upper_bound_kg << '\n';
  out << "saving_stage3," << r.saving_stage3() << '\n';
  out << "saving_stage4," << r.saving_stage4() << '\n';
  out << "saving_spontaneous," << r.saving_spontaneous() << '\n';
  out << "upper_bound_rel," << r.upper_bound_rel() << '\n';
  return out.str();
}

}  // namespace platoon
