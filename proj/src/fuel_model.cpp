#include "platoon/fuel_model.hpp"

#include <stdexcept>
#include <string>

#include "platoon/errors.hpp"
#include "platoon/planning.hpp"

namespace platoon {

namespace {
constexpr double kSpeedSlack = 1e-9;
}

void FuelModel::validate() const {
  if (!(a0 >= 0.0) || !(ap >= 0.0)) throw InputError("fuel model slopes a0 and ap must be non-negative");
  if (!(v_min > 0.0) || !(v_min <= v_max)) throw InputError("fuel model requires 0 < v_min <= v_max");
  if (!(v_default >= v_min && v_default <= v_max)) {
    throw InputError("fuel model default speed must lie in [v_min, v_max]");
  }
  // Affine functions: checking both ends of the speed window is enough.
  for (double v : {v_min, v_max}) {
    if (!(per_distance_unchecked(v, true) < per_distance_unchecked(v, false))) {
      throw InputError("fuel model must make following cheaper than driving solo on [v_min, v_max]");
    }
  }
}

double FuelModel::per_distance(double v, bool follower) const {
  if (v < v_min * (1.0 - kSpeedSlack) || v > v_max * (1.0 + kSpeedSlack)) {
    throw std::out_of_range("speed " + std::to_string(v) + " m/s outside [v_min, v_max]");
  }
  return per_distance_unchecked(v, follower);
}

double FuelModel::follower_saving_ratio(double v) const {
  return 1.0 - per_distance(v, true) / per_distance(v, false);
}

double plan_fuel(const FuelModel& model, const VehiclePlan& plan) {
  double total = 0.0;
  for (std::size_t i = 0; i < plan.speeds.size(); ++i) {
    const double v = plan.speeds[i];
    total += model.per_distance(v, plan.follower_flags[i] != 0) * v * (plan.times[i + 1] - plan.times[i]);
  }
  return total;
}

FuelModel fuel_model_from_json(const nlohmann::json& j) {
  FuelModel m;
  if (!j.is_object()) throw InputError("fuel block must be an object");
  auto number = [&](const char* key, double& target, bool kmh) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw InputError(std::string("fuel.") + key + " must be a number");
    const double v = j[key].get<double>();
    target = kmh ? kmh_to_mps(v) : v;
  };
  number("a0", m.a0, false);
  number("b0", m.b0, false);
  number("ap", m.ap, false);
  number("bp", m.bp, false);
  number("v_min_kmh", m.v_min, true);
  number("v_max_kmh", m.v_max, true);
  number("v_default_kmh", m.v_default, true);
  return m;
}

nlohmann::json fuel_model_to_json(const FuelModel& m) {
  return {{"a0", m.a0},
          {"b0", m.b0},
          {"ap", m.ap},
          {"bp", m.bp},
          {"v_min_kmh", mps_to_kmh(m.v_min)},
          {"v_max_kmh", mps_to_kmh(m.v_max)},
          {"v_default_kmh", mps_to_kmh(m.v_default)}};
}

}  // namespace platoon
