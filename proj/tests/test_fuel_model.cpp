#include <doctest.h>

#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "platoon/errors.hpp"
#include "platoon/fuel_model.hpp"
#include "platoon/planning.hpp"

using namespace platoon;

namespace {

const double kV80 = kmh_to_mps(80.0);

RoadNetwork line(double length_m) {
  RoadNetwork net;
  net.add_node(0);
  net.add_node(1);
  net.add_edge(0, 0, 1, length_m);
  return net;
}

VehiclePlan constant_plan(double length_m, double v, bool follower) {
  VehiclePlan p;
  p.route = Route{{0}, 0.0, length_m};
  p.speeds = {v};
  p.times = {0.0, length_m / v};
  p.follower_flags = {static_cast<std::uint8_t>(follower)};
  return p;
}

// Random pieces covering `length_m` with speeds in [v_min, v_max].
VehiclePlan random_plan(std::mt19937_64& rng, const FuelModel& m, double length_m) {
  std::uniform_real_distribution<double> speed(m.v_min, m.v_max);
  std::uniform_real_distribution<double> cut(0.0, 1.0);
  const int pieces = 1 + static_cast<int>(rng() % 6);
  std::vector<double> cuts{0.0, length_m};
  for (int i = 1; i < pieces; ++i) cuts.push_back(cut(rng) * length_m);
  std::sort(cuts.begin(), cuts.end());
  VehiclePlan p;
  p.route = Route{{0}, 0.0, length_m};
  p.times = {100.0 * cut(rng)};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double d = cuts[i + 1] - cuts[i];
    if (d <= 1.0) continue;
    const double v = speed(rng);
    p.speeds.push_back(v);
    p.follower_flags.push_back(rng() % 2);
    p.times.push_back(p.times.back() + d / v);
  }
  return p;
}

}  // namespace

TEST_CASE("follower saving ratio at 80 km/h") {
  const FuelModel m;
  CHECK(m.follower_saving_ratio(kV80) == doctest::Approx(0.159).epsilon(0.0005 / 0.159));
}

TEST_CASE("identical solo and follower curves save nothing") {
  FuelModel m;
  m.ap = m.a0;
  m.bp = m.b0;
  for (double v : {m.v_min, kV80, m.v_max}) CHECK(m.follower_saving_ratio(v) == 0.0);
  CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("per-distance values") {
  const FuelModel m;
  CHECK(m.per_distance(kmh_to_mps(70.0), false) == doctest::Approx(2.1166e-4).epsilon(1e-4));
  CHECK(m.per_distance(kV80, true) == doctest::Approx(m.ap * kV80 + m.bp));
  CHECK_THROWS_AS(m.per_distance(m.v_max + 0.1, false), std::out_of_range);
  CHECK_THROWS_AS(m.per_distance(m.v_min - 0.1, true), std::out_of_range);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("model validation") {
  FuelModel m;
  m.a0 = -1e-6;
  CHECK_THROWS_AS(m.validate(), InputError);
  m = FuelModel{};
  m.v_min = m.v_max + 1.0;
  CHECK_THROWS_AS(m.validate(), InputError);
  m = FuelModel{};
  m.v_default = m.v_max + 1.0;
  CHECK_THROWS_AS(m.validate(), InputError);
}

TEST_CASE("plan fuel of simple plans") {
  const FuelModel m;
  const RoadNetwork net = line(1e5);
  const VehiclePlan solo = constant_plan(1e5, kV80, false);
  CHECK(plan_fuel(m, solo) == doctest::Approx(m.per_distance(kV80, false) * 1e5).epsilon(1e-12));
  CHECK(plan_fuel(m, solo) == doctest::Approx(oracle::quadrature_fuel(net, m, solo)).epsilon(1e-9));

  const VehiclePlan follower = constant_plan(1e5, kV80, true);
  CHECK(plan_fuel(m, follower) == doctest::Approx(m.per_distance(kV80, true) * 1e5).epsilon(1e-12));
  CHECK(1.0 - plan_fuel(m, follower) / plan_fuel(m, solo) == doctest::Approx(0.159).epsilon(0.0005 / 0.159));

  VehiclePlan empty;
  empty.route = Route{{0}, 0.0, 0.0};
  empty.times = {5.0};
  CHECK(plan_fuel(m, empty) == 0.0);
}

TEST_CASE("plan fuel matches quadrature on random plans") {
  const FuelModel m;
  const RoadNetwork net = line(2e5);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    VehiclePlan p = random_plan(rng, m, 2e5);
    p.route.dest_offset_m = p.distance();
    CHECK(plan_fuel(m, p) == doctest::Approx(oracle::quadrature_fuel(net, m, p)).epsilon(1e-9));
  }
}

TEST_CASE("slowing a solo piece never costs fuel") {
  const FuelModel m;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    VehiclePlan p = random_plan(rng, m, 5e4);
    const double before = plan_fuel(m, p);
    for (std::size_t k = 0; k < p.pieces(); ++k) {
      if (p.follower_flags[k]) continue;
      VehiclePlan q = p;
      const double d = q.speeds[k] * (q.times[k + 1] - q.times[k]);
      const double v = std::max(m.v_min, q.speeds[k] * 0.95);
      q.speeds[k] = v;
      // Keep the distance of the piece; later breakpoints shift.
      const double shift = d / v - (q.times[k + 1] - q.times[k]);
      for (std::size_t j = k + 1; j < q.times.size(); ++j) q.times[j] += shift;
      CHECK(plan_fuel(m, q) <= before + 1e-12 * before);
    }
  }
}

TEST_CASE("fleet fuel is additive over plans") {
  const FuelModel m;
  std::mt19937_64 rng(9);
  double sum = 0.0;
  VehiclePlan joined;
  joined.route = Route{{0}, 0.0, 0.0};
  joined.times = {0.0};
  for (int i = 0; i < 20; ++i) {
    const VehiclePlan p = random_plan(rng, m, 1e4);
    sum += plan_fuel(m, p);
    for (std::size_t k = 0; k < p.pieces(); ++k) {
      joined.speeds.push_back(p.speeds[k]);
      joined.follower_flags.push_back(p.follower_flags[k]);
      joined.times.push_back(joined.times.back() + p.times[k + 1] - p.times[k]);
    }
  }
  CHECK(plan_fuel(m, joined) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("fuel config block uses km/h") {
  const FuelModel m = fuel_model_from_json({{"v_min_kmh", 60.0}, {"a0", 9e-6}});
  CHECK(m.v_min == doctest::Approx(60.0 / 3.6));
  CHECK(m.a0 == 9e-6);
  CHECK(m.b0 == FuelModel{}.b0);
  const FuelModel back = fuel_model_from_json(fuel_model_to_json(m));
  CHECK(back.v_min == doctest::Approx(m.v_min));
  CHECK(back.v_max == doctest::Approx(m.v_max));
  CHECK_THROWS_AS(fuel_model_from_json({{"v_min_kmh", "fast"}}), InputError);
}
