#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "platoon/coordination_graph.hpp"
#include "platoon/evaluation.hpp"
#include "platoon/joint_optimization.hpp"
#include "platoon/leader_selection.hpp"
#include "platoon/scenario.hpp"

namespace platoon {

struct RunConfig {
  FuelModel fuel;
  ScenarioConfig scenario;
  std::optional<std::string> assignments_file;  // instead of generating
  SelectionRule selection = SelectionRule::kGreedy;
  std::uint64_t seed = 1;  // random leader selection
  bool exact_enabled = false;
  std::size_t exact_limit = 20;
  SolverOptions solver;
  bool prune_pairs = true;
  bool verify = true;
  std::string output_dir = "out";
  unsigned jobs = 1;
};

/// Errors carry "<source>:<line>:" prefixes. Unknown keys are rejected.
RunConfig run_config_from_text(std::string_view text, std::string_view source = "<config>");
RunConfig run_config_from_file(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Sets one field by dotted path ("solver.tol", "scenario.assignments", ...).
/// The value is read as JSON when it parses, as a string otherwise.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// PLATOON_<PATH> variables, "__" separating nesting levels
/// (PLATOON_SOLVER__TOL -> solver.tol).
void apply_env_overrides(RunConfig& cfg, char** environ);

using LogFn = std::function<void(const nlohmann::json&)>;

struct Verification {
  std::size_t plans_checked = 0;
  std::size_t plans_invalid = 0;
  std::size_t intervals_checked = 0;
  std::size_t intervals_bad = 0;
  std::vector<std::string> problems;  // first few, for diagnostics

  bool ok() const { return plans_invalid == 0 && intervals_bad == 0; }
};

/// Validates every plan and samples each platoon interval on a 1 s grid,
/// comparing follower and leader positions (1e-6 m).
Verification verify_plans(const RoadNetwork& net, std::span<const Assignment> assignments,
                          std::span<const VehiclePlan> plans, const FuelModel& m);

struct GroupOutcome {
  AssignmentId leader = 0;
  std::size_t followers = 0;
  std::size_t free_variables = 0;
  int newton_steps = 0;
  double objective_before_kg = 0.0;
  double objective_after_kg = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  bool kept_initial = false;
};

enum class Role { kSolo, kLeader, kFollower };

struct RunResult {
  FuelModel fuel;
  std::vector<Assignment> assignments;     // routable ones, sorted by id
  std::vector<AssignmentId> disregarded;   // no route
  std::vector<VehiclePlan> default_plans;
  CoordinationBuild build;
  LeaderSet leaders;
  std::vector<double> cluster_trace;
  std::vector<Role> roles;
  std::vector<VehiclePlan> stage3_plans;
  std::vector<CoordinationGroup> groups;
  std::vector<TimingSolution> solutions;
  std::vector<GroupOutcome> outcomes;
  std::vector<VehiclePlan> stage4_plans;
  RunReport report;
  std::optional<Verification> verification;
};

/// Stages 1-4 plus baseline, bound and optional verification.
/// InfeasibleError if some assignment cannot meet its deadline.
RunResult run_pipeline(const RoadNetwork& net, std::vector<Assignment> assignments, const RunConfig& cfg,
                       const LogFn& log = {});

/// plans.json, leaders.json, report.json, graph.csv, histogram.csv,
/// savings.csv under `dir` (created if missing).
void write_run(const RoadNetwork& net, const RunResult& run, const std::string& dir);

/// Network and assignments from the config: loaded files or a generated
/// scenario.
struct RunInput {
  RoadNetwork net;
  std::vector<Assignment> assignments;
};
RunInput prepare_input(const RunConfig& cfg);

struct MonteCarloRow {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double saving_stage3 = 0.0;
  double saving_stage4 = 0.0;
  double saving_spontaneous = 0.0;
  double upper_bound_rel = 0.0;
  double wallclock_s = 0.0;
  std::size_t plans_invalid = 0;
  std::size_t intervals_bad = 0;
};

/// One full pipeline per (size, run) with scenario and selection seed
/// base_seed + run; the network is shared. Failures become status rows.
std::vector<MonteCarloRow> run_montecarlo(const RunConfig& cfg, std::span<const std::size_t> sizes, std::size_t runs,
                                          const LogFn& log = {});
std::string montecarlo_csv(std::span<const MonteCarloRow> rows);
/// Per-size means over successful runs.
std::string montecarlo_summary_csv(std::span<const MonteCarloRow> rows);

}  // namespace platoon
