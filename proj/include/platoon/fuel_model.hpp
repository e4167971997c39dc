#pragma once

#include <json.hpp>

namespace platoon {

struct VehiclePlan;

constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }
constexpr double mps_to_kmh(double mps) { return mps * 3.6; }

/// Affine fuel use per meter: a*v + b, with separate coefficients for solo
/// (or platoon-leading) trucks and for platoon followers. Defaults are the
/// linearization around 80 km/h used throughout the project.
struct FuelModel {
  double a0 = 8.4159e-6;  // kg*s/m^2
  double b0 = 4.8021e-5;  // kg/m
  double ap = 5.0495e-6;
  double bp = 8.5426e-5;
  double v_min = kmh_to_mps(70.0);
  double v_max = kmh_to_mps(90.0);
  double v_default = kmh_to_mps(80.0);

  /// Throws InputError unless a0, ap >= 0, 0 < v_min <= v_default <= v_max
  /// and following is strictly cheaper than driving solo on [v_min, v_max].
  void validate() const;

  /// kg/m at speed v. Throws std::out_of_range outside [v_min, v_max]
  /// (relative slack 1e-9 absorbs rounding in derived speeds).
  double per_distance(double v, bool follower) const;
  double per_distance_unchecked(double v, bool follower) const {
    return follower ? ap * v + bp : a0 * v + b0;
  }
  /// 1 - f_p(v)/f_0(v).
  double follower_saving_ratio(double v) const;
};

/// Integral of per-distance fuel times speed over the plan's pieces (kg).
double plan_fuel(const FuelModel& model, const VehiclePlan& plan);

/// Config block `{a0, b0, ap, bp, v_min_kmh, v_max_kmh, v_default_kmh}`;
/// absent keys keep their defaults.
FuelModel fuel_model_from_json(const nlohmann::json& j);
nlohmann::json fuel_model_to_json(const FuelModel& m);

}  // namespace platoon
