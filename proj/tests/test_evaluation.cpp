#include <doctest.h>

#include <random>

#include "platoon/evaluation.hpp"

using namespace platoon;

namespace {

const FuelModel kModel;
const double kV80 = kmh_to_mps(80.0);

RoadNetwork line(double length_m) {
  RoadNetwork net;
  net.add_node(0);
  net.add_node(1);
  net.add_edge(0, 0, 1, length_m);
  return net;
}

VehiclePlan on_edge(double length_m, double t0, double v = kV80) {
  VehiclePlan p;
  p.route = Route{{0}, 0.0, length_m};
  p.speeds = {v};
  p.times = {t0, t0 + length_m / v};
  p.follower_flags = {0};
  return p;
}

double pair_gain(double v, double meters) {
  return (kModel.per_distance(v, false) - kModel.per_distance(v, true)) * meters;
}

}  // namespace

TEST_CASE("spontaneous platoons form in 60 s chains") {
  const RoadNetwork net = line(1e4);
  SUBCASE("two of three") {
    const std::vector<VehiclePlan> plans{on_edge(1e4, 0), on_edge(1e4, 30), on_edge(1e4, 100)};
    CHECK(spontaneous_saving(net, plans, kModel) == doctest::Approx(pair_gain(kV80, 1e4)).epsilon(1e-12));
  }
  SUBCASE("chain of three") {
    const std::vector<VehiclePlan> plans{on_edge(1e4, 0), on_edge(1e4, 50), on_edge(1e4, 100)};
    CHECK(spontaneous_saving(net, plans, kModel) == doctest::Approx(2 * pair_gain(kV80, 1e4)).epsilon(1e-12));
  }
  SUBCASE("alone") {
    const std::vector<VehiclePlan> plans{on_edge(1e4, 0)};
    CHECK(spontaneous_saving(net, plans, kModel) == 0.0);
  }
  SUBCASE("exactly one minute apart still counts") {
    const std::vector<VehiclePlan> plans{on_edge(1e4, 0), on_edge(1e4, 60)};
    CHECK(spontaneous_saving(net, plans, kModel) > 0.0);
    const std::vector<VehiclePlan> apart{on_edge(1e4, 0), on_edge(1e4, 60.5)};
    CHECK(spontaneous_saving(net, apart, kModel) == 0.0);
  }
  SUBCASE("the member with the smallest gain leads") {
    const std::vector<VehiclePlan> plans{on_edge(1e4, 0, kModel.v_min), on_edge(1e4, 10, kModel.v_max)};
    const double lo = pair_gain(kModel.v_min, 1e4), hi = pair_gain(kModel.v_max, 1e4);
    CHECK(spontaneous_saving(net, plans, kModel) == doctest::Approx(std::max(lo, hi)).epsilon(1e-12));
  }
}

TEST_CASE("edge arrivals skip partial edges") {
  RoadNetwork net;
  for (int i = 0; i < 4; ++i) net.add_node(i);
  net.add_edge(1, 0, 1, 1000);
  net.add_edge(2, 1, 2, 2000);
  net.add_edge(3, 2, 3, 3000);
  VehiclePlan p;
  p.route = Route{{0, 1, 2}, 500, 3000};
  p.speeds = {20.0};
  p.times = {0.0, 5500.0 / 20.0};
  p.follower_flags = {0};
  const auto arr = edge_arrivals(net, std::vector<VehiclePlan>{p});
  REQUIRE(arr.size() == 2);
  CHECK(arr[0].edge == 1);
  CHECK(arr[0].time == doctest::Approx(25.0));
  CHECK(arr[1].edge == 2);
  CHECK(arr[1].time == doctest::Approx(125.0));
}

TEST_CASE("platoon size histogram") {
  SUBCASE("one follower for 80 km") {
    const std::vector<PlatoonSummary> g{{100000, {{10000, 90000, 99500}}}};
    const auto h = platoon_size_histogram(g);
    CHECK(h.at(2) == doctest::Approx(160000));
    CHECK(h.at(1) == doctest::Approx(20000 + 19500));
    CHECK_FALSE(h.contains(3));
  }
  SUBCASE("nobody platoons") {
    const std::vector<PlatoonSummary> g{{5000, {}}, {7000, {}}};
    const auto h = platoon_size_histogram(g);
    CHECK(h.size() == 1);
    CHECK(h.at(1) == 12000);
  }
  SUBCASE("disjoint followers never make size 3") {
    const std::vector<PlatoonSummary> g{{100000, {{0, 40000, 40000}, {40000, 90000, 60000}}}};
    const auto h = platoon_size_histogram(g);
    CHECK_FALSE(h.contains(3));
    CHECK(h.at(2) == doctest::Approx(2 * 90000));
    CHECK(h.at(1) == doctest::Approx(10000 + 10000));
  }
  SUBCASE("overlap") {
    const std::vector<PlatoonSummary> g{{100000, {{0, 60000, 60000}, {20000, 100000, 80000}}}};
    const auto h = platoon_size_histogram(g);
    CHECK(h.at(3) == doctest::Approx(3 * 40000));
    CHECK(h.at(2) == doctest::Approx(2 * 20000 + 2 * 40000));
  }
}

TEST_CASE("histogram conserves distance") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PlatoonSummary> groups(1 + rng() % 5);
    double total = 0.0;
    for (auto& g : groups) {
      g.leader_distance_m = 1000 + 99000 * u(rng);
      total += g.leader_distance_m;
      const int n = rng() % 4;
      for (int k = 0; k < n; ++k) {
        double a = u(rng) * g.leader_distance_m, b = u(rng) * g.leader_distance_m;
        if (a > b) std::swap(a, b);
        const double own = (b - a) + 50000 * u(rng);
        g.followers.push_back({a, b, own});
        total += own;
      }
    }
    double sum = 0.0;
    for (const auto& [size, meters] : platoon_size_histogram(groups)) sum += meters;
    CHECK(sum == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("run report") {
  RunReport r;
  CHECK(r.saving_stage4() == 0.0);
  CHECK(r.upper_bound_rel() == 0.0);
  r.assignments = 3;
  r.fuel_default_kg = 100;
  r.fuel_stage3_kg = 97;
  r.fuel_stage4_kg = 96;
  r.fuel_spontaneous_kg = 99;
  r.upper_bound_kg = 5;
  r.objective_kg = 3;
  r.exact_objective_kg = 3.5;
  r.histogram = {{1, 10.0}, {2, 20.0}};
  CHECK(r.saving_stage3() == doctest::Approx(0.03));
  CHECK(r.saving_stage4() == doctest::Approx(0.04));
  CHECK(r.saving_spontaneous() == doctest::Approx(0.01));
  CHECK(r.upper_bound_rel() == doctest::Approx(0.05));
  const RunReport back = report_from_json(report_to_json(r));
  CHECK(back.fuel_stage4_kg == 96);
  CHECK(back.exact_objective_kg == std::optional<double>{3.5});
  CHECK(back.histogram == r.histogram);
  CHECK(histogram_csv(r) == "size,meters\n1,10\n2,20\n");
  CHECK(savings_csv(r).rfind("metric,value\n", 0) == 0);
  CHECK(savings_csv(r).find("saving_stage4,0.04") != std::string::npos);
}
