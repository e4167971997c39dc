#include "platoon/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "platoon/errors.hpp"
#include "platoon/json_location.hpp"

namespace platoon {
namespace {

using json = nlohmann::json;
using Ptr = json::json_pointer;
using Where = std::function<std::string(const Ptr&, std::string_view)>;

void check_keys(const json& j, const Ptr& at, std::initializer_list<const char*> allowed, const Where& where) {
  if (!j.is_object()) throw InputError(where(at, "expected an object"));
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InputError(where(at / key, "unknown key '" + key + "'"));
    }
  }
}

template <typename T>
T field(const json& j, const Ptr& at, const char* key, T fallback, const Where& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j[key];
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw InputError(where(at / key, std::string("'") + key + "' must be true or false"));
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw InputError(where(at / key, std::string("'") + key + "' must be a string"));
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw InputError(where(at / key, std::string("'") + key + "' must be a non-negative integer"));
    }
  } else {
    if (!v.is_number()) throw InputError(where(at / key, std::string("'") + key + "' must be a number"));
  }
  return v.get<T>();
}

RunConfig config_from_json(const json& j, const Where& where) {
  const Ptr root;
  check_keys(j, root,
             {"fuel", "scenario", "assignments_file", "selection", "seed", "exact", "solver", "prune_pairs", "verify",
              "output_dir", "jobs"},
             where);
  RunConfig cfg;
  if (j.contains("fuel")) {
    const Ptr at = root / "fuel";
    check_keys(j["fuel"], at, {"a0", "b0", "ap", "bp", "v_min_kmh", "v_max_kmh", "v_default_kmh"}, where);
    try {
      cfg.fuel = fuel_model_from_json(j["fuel"]);
    } catch (const InputError& e) {
      throw InputError(where(at, e.what()));
    }
  }
  try {
    cfg.fuel.validate();
  } catch (const InputError& e) {
    throw InputError(where(j.contains("fuel") ? root / "fuel" : root, e.what()));
  }
  if (j.contains("scenario")) {
    const Ptr at = root / "scenario";
    const json& s = j["scenario"];
    check_keys(s, at, {"network", "node_weights", "assignments", "start_window_s", "deadline_slack_s", "seed"}, where);
    if (s.contains("network")) check_keys(s["network"], at / "network", {"type", "path", "rows", "cols", "edge_length_m"}, where);
    try {
      cfg.scenario = scenario_from_json(s);
    } catch (const InputError& e) {
      throw InputError(where(at, e.what()));
    }
  }
  if (j.contains("assignments_file") && !j["assignments_file"].is_null()) {
    cfg.assignments_file = field<std::string>(j, root, "assignments_file", "", where);
  }
  const std::string rule = field<std::string>(j, root, "selection", "greedy", where);
  if (rule == "greedy") {
    cfg.selection = SelectionRule::kGreedy;
  } else if (rule == "random") {
    cfg.selection = SelectionRule::kRandom;
  } else {
    throw InputError(where(root / "selection", "selection must be \"greedy\" or \"random\""));
  }
  cfg.seed = field<std::uint64_t>(j, root, "seed", cfg.seed, where);
  if (j.contains("exact")) {
    const Ptr at = root / "exact";
    check_keys(j["exact"], at, {"enabled", "limit"}, where);
    cfg.exact_enabled = field<bool>(j["exact"], at, "enabled", cfg.exact_enabled, where);
    cfg.exact_limit = field<std::size_t>(j["exact"], at, "limit", cfg.exact_limit, where);
  }
  if (j.contains("solver")) {
    const Ptr at = root / "solver";
    const json& s = j["solver"];
    check_keys(s, at, {"tol", "max_iter", "barrier_mu"}, where);
    cfg.solver.tol = field<double>(s, at, "tol", cfg.solver.tol, where);
    cfg.solver.max_iter = static_cast<int>(field<std::uint64_t>(s, at, "max_iter", cfg.solver.max_iter, where));
    cfg.solver.barrier_mu = field<double>(s, at, "barrier_mu", cfg.solver.barrier_mu, where);
    if (!(cfg.solver.tol > 0.0)) throw InputError(where(at / "tol", "tol must be positive"));
    if (cfg.solver.max_iter < 1) throw InputError(where(at / "max_iter", "max_iter must be at least 1"));
    if (!(cfg.solver.barrier_mu > 1.0)) throw InputError(where(at / "barrier_mu", "barrier_mu must exceed 1"));
  }
  cfg.prune_pairs = field<bool>(j, root, "prune_pairs", cfg.prune_pairs, where);
  cfg.verify = field<bool>(j, root, "verify", cfg.verify, where);
  cfg.output_dir = field<std::string>(j, root, "output_dir", cfg.output_dir, where);
  cfg.jobs = static_cast<unsigned>(field<std::uint64_t>(j, root, "jobs", cfg.jobs, where));
  if (cfg.jobs == 0) throw InputError(where(root / "jobs", "jobs must be at least 1"));
  return cfg;
}

// Runs body(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void emit(const LogFn& log, json entry) {
  if (log) log(entry);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  if (!out) throw InputError("failed writing " + path.string());
}

std::string_view role_name(Role r) {
  switch (r) {
    case Role::kSolo: return "solo";
    case Role::kLeader: return "leader";
    case Role::kFollower: return "follower";
  }
  return "solo";
}

}  // namespace

RunConfig run_config_from_text(std::string_view text, std::string_view source) {
  const json j = parse_json_document(text, source);
  return config_from_json(j, [&](const Ptr& at, std::string_view msg) {
    return located_message(source, text, at, msg);
  });
}

RunConfig run_config_from_file(const std::string& path) { return run_config_from_text(read_text_file(path), path); }

json run_config_to_json(const RunConfig& cfg) {
  json j{{"fuel", fuel_model_to_json(cfg.fuel)},
         {"scenario", scenario_to_json(cfg.scenario)},
         {"selection", cfg.selection == SelectionRule::kGreedy ? "greedy" : "random"},
         {"seed", cfg.seed},
         {"exact", {{"enabled", cfg.exact_enabled}, {"limit", cfg.exact_limit}}},
         {"solver", {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}, {"barrier_mu", cfg.solver.barrier_mu}}},
         {"prune_pairs", cfg.prune_pairs},
         {"verify", cfg.verify},
         {"output_dir", cfg.output_dir},
         {"jobs", cfg.jobs}};
  j["assignments_file"] = cfg.assignments_file ? json(*cfg.assignments_file) : json(nullptr);
  return j;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  if (key.empty()) throw InputError("empty setting name");
  json j = run_config_to_json(cfg);
  if (key == "scenario.network_file") {
    j["scenario"]["network"] = {{"type", "file"}, {"path", std::string(value)}};
  } else {
    std::string pointer;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = key.find('.', start);
      pointer += '/';
      pointer += key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
      if (dot == std::string_view::npos) break;
      start = dot + 1;
    }
    if (key.rfind("scenario.network.", 0) == 0 && key != "scenario.network.type") {
      j["scenario"]["network"]["type"] = key == "scenario.network.path" ? "file" : "grid";
    }
    json parsed = json::parse(value, nullptr, false);
    j[Ptr(pointer)] = parsed.is_discarded() ? json(std::string(value)) : parsed;
  }
  const std::string name(key);
  cfg = config_from_json(j, [&](const Ptr&, std::string_view msg) { return "setting " + name + ": " + std::string(msg); });
}

void apply_env_overrides(RunConfig& cfg, char** environ) {
  if (!environ) return;
  constexpr std::string_view prefix = "PLATOON_";
  std::vector<std::pair<std::string, std::string>> settings;
  for (char** e = environ; *e; ++e) {
    std::string_view entry(*e);
    if (entry.rfind(prefix, 0) != 0) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    std::string key(entry.substr(prefix.size(), eq - prefix.size()));
    std::string path;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (key[i] == '_' && i + 1 < key.size() && key[i + 1] == '_') {
        path += '.';
        ++i;
      } else {
        path += static_cast<char>(std::tolower(static_cast<unsigned char>(key[i])));
      }
    }
    settings.emplace_back(path, std::string(entry.substr(eq + 1)));
  }
  std::sort(settings.begin(), settings.end());
  for (const auto& [key, value] : settings) apply_setting(cfg, key, value);
}

Verification verify_plans(const RoadNetwork& net, std::span<const Assignment> assignments,
                          std::span<const VehiclePlan> plans, const FuelModel& m) {
  constexpr double kCoincidence = 1e-6;  // m
  constexpr std::size_t kMaxProblems = 20;
  Verification v;
  std::map<AssignmentId, std::size_t> index;
  for (std::size_t i = 0; i < assignments.size(); ++i) index[assignments[i].id] = i;
  auto note = [&](std::string msg) {
    if (v.problems.size() < kMaxProblems) v.problems.push_back(std::move(msg));
  };
  for (std::size_t i = 0; i < plans.size(); ++i) {
    ++v.plans_checked;
    const auto violations = validate(net, plans[i], assignments[i], m);
    if (!violations.empty()) {
      ++v.plans_invalid;
      note("assignment " + std::to_string(assignments[i].id) + ": " + violations.front().message);
    }
  }
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const VehiclePlan& plan = plans[i];
    if (!plan.leader) continue;
    std::size_t first = plan.pieces();
    std::size_t last = 0;
    for (std::size_t k = 0; k < plan.pieces(); ++k) {
      if (plan.follower_flags[k]) {
        first = std::min(first, k);
        last = k + 1;
      }
    }
    if (first >= last) continue;
    ++v.intervals_checked;
    auto it = index.find(*plan.leader);
    if (it == index.end()) {
      ++v.intervals_bad;
      note("assignment " + std::to_string(assignments[i].id) + " follows an unknown leader");
      continue;
    }
    const VehiclePlan& lead = plans[it->second];
    const PlanSampler fs(net, plan);
    const PlanSampler ls(net, lead);
    const double t_merge = plan.times[first];
    const double t_split = plan.times[last];
    bool bad = false;
    for (double t = t_merge; t < t_split && !bad; t += 1.0) {
      try {
        const Position a = fs.sample(t).position;
        const Position b = ls.sample(t).position;
        bad = !positions_coincide(net, a, b, kCoincidence);
      } catch (const std::out_of_range&) {
        bad = true;
      }
      if (bad) {
        note("assignment " + std::to_string(assignments[i].id) + " leaves its leader at t=" + std::to_string(t));
      }
    }
    if (bad) ++v.intervals_bad;
  }
  return v;
}

RunResult run_pipeline(const RoadNetwork& net, std::vector<Assignment> assignments, const RunConfig& cfg,
                       const LogFn& log) {
  const FuelModel& m = cfg.fuel;
  m.validate();
  RunResult run;
  run.fuel = m;
  std::sort(assignments.begin(), assignments.end(),
            [](const Assignment& a, const Assignment& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < assignments.size(); ++i) {
    if (assignments[i].id == assignments[i - 1].id) {
      throw InputError("duplicate assignment id " + std::to_string(assignments[i].id));
    }
  }

  // Stage 1: routes and default plans.
  auto clock = std::chrono::steady_clock::now();
  std::vector<std::optional<Route>> routes(assignments.size());
  parallel_for(assignments.size(), cfg.jobs,
               [&](std::size_t i) { routes[i] = shortest_route(net, assignments[i].start, assignments[i].dest); });
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (!routes[i]) {
      run.disregarded.push_back(assignments[i].id);
      continue;
    }
    run.default_plans.push_back(default_plan(net, assignments[i], *routes[i], m));
    run.assignments.push_back(assignments[i]);
  }
  const std::size_t n = run.assignments.size();
  emit(log, {{"event", "stage"}, {"stage", 1}, {"assignments", n}, {"disregarded", run.disregarded.size()},
             {"elapsed_s", seconds_since(clock)}});

  // Stage 2: pairwise adapted plans and the coordination graph.
  clock = std::chrono::steady_clock::now();
  std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> candidates;
  if (cfg.prune_pairs) candidates = prune_pairs(net, run.assignments, run.default_plans, m);
  run.build = build_coordination_graph(net, run.assignments, run.default_plans, m,
                                       candidates ? &*candidates : nullptr, cfg.jobs);
  emit(log, {{"event", "stage"}, {"stage", 2}, {"candidate_pairs", candidates ? candidates->size() : (n > 0 ? n * (n - 1) : 0)},
             {"edges", run.build.graph.edge_count()}, {"elapsed_s", seconds_since(clock)}});

  // Stage 3: leader selection.
  clock = std::chrono::steady_clock::now();
  const CoordinationGraph& g = run.build.graph;
  ClusterResult clustered = cluster(g, cfg.selection, cfg.seed);
  run.leaders = std::move(clustered.set);
  run.cluster_trace = std::move(clustered.trace);
  run.roles.assign(n, Role::kSolo);
  std::vector<std::vector<std::uint32_t>> followers_of(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!run.leaders.is_leader[i] && run.leaders.follower_of[i]) {
      run.roles[i] = Role::kFollower;
      followers_of[*run.leaders.follower_of[i]].push_back(i);
    }
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!followers_of[i].empty()) run.roles[i] = Role::kLeader;
  }
  run.stage3_plans = run.default_plans;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (run.roles[i] == Role::kFollower) run.stage3_plans[i] = run.build.plan(i, *run.leaders.follower_of[i])->plan;
  }
  emit(log, {{"event", "stage"}, {"stage", 3}, {"leaders", run.leaders.leaders().size()},
             {"flips", run.cluster_trace.size()}, {"objective_kg", run.leaders.objective},
             {"elapsed_s", seconds_since(clock)}});

  // Stage 4: joint optimization per coordination group.
  clock = std::chrono::steady_clock::now();
  std::vector<std::uint32_t> group_leaders;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (run.roles[i] == Role::kLeader) group_leaders.push_back(i);
  }
  run.groups.resize(group_leaders.size());
  run.solutions.resize(group_leaders.size());
  parallel_for(group_leaders.size(), cfg.jobs, [&](std::size_t k) {
    const std::uint32_t l = group_leaders[k];
    std::vector<FollowerInput> inputs;
    for (std::uint32_t f : followers_of[l]) inputs.push_back({&run.assignments[f], run.build.plan(f, l)});
    run.groups[k] = build_group(net, run.assignments[l], run.default_plans[l], inputs);
    run.solutions[k] = solve_group(run.groups[k], m, cfg.solver);
  });
  run.stage4_plans = run.default_plans;
  for (std::size_t k = 0; k < group_leaders.size(); ++k) {
    const std::uint32_t l = group_leaders[k];
    auto plans = extract_plans(run.groups[k], run.solutions[k]);
    run.stage4_plans[l] = std::move(plans[0]);
    for (std::size_t f = 0; f < followers_of[l].size(); ++f) run.stage4_plans[followers_of[l][f]] = std::move(plans[f + 1]);
    const TimingSolution& s = run.solutions[k];
    GroupOutcome o{run.assignments[l].id, followers_of[l].size(), s.free_variables, s.newton_steps,
                   s.initial_objective_kg, s.objective_kg, s.kkt_residual, s.converged, s.kept_initial};
    run.outcomes.push_back(o);
    emit(log, {{"event", "group"}, {"leader", o.leader}, {"followers", o.followers},
               {"free_variables", o.free_variables}, {"iterations", o.newton_steps},
               {"objective_before_kg", o.objective_before_kg}, {"objective_after_kg", o.objective_after_kg},
               {"kkt_residual", o.kkt_residual}, {"converged", o.converged}});
  }
  emit(log, {{"event", "stage"}, {"stage", 4}, {"groups", group_leaders.size()}, {"elapsed_s", seconds_since(clock)}});

  // Metrics.
  RunReport& r = run.report;
  r.assignments = n;
  r.disregarded = run.disregarded.size();
  r.graph_edges = g.edge_count();
  r.leaders = group_leaders.size();
  r.followers = static_cast<std::size_t>(std::count(run.roles.begin(), run.roles.end(), Role::kFollower));
  for (std::size_t i = 0; i < n; ++i) {
    r.fuel_default_kg += plan_fuel(m, run.default_plans[i]);
    r.fuel_stage3_kg += plan_fuel(m, run.stage3_plans[i]);
    r.fuel_stage4_kg += plan_fuel(m, run.stage4_plans[i]);
  }
  r.fuel_spontaneous_kg = r.fuel_default_kg - spontaneous_saving(net, run.default_plans, m);
  r.upper_bound_kg = upper_bound(g);
  r.objective_kg = run.leaders.objective;
  if (cfg.exact_enabled) {
    if (n <= cfg.exact_limit) {
      r.exact_objective_kg = exact_leaders(g, cfg.exact_limit).objective;
    } else {
      emit(log, {{"event", "exact_skipped"}, {"nodes", n}, {"limit", cfg.exact_limit}});
    }
  }
  std::vector<PlatoonSummary> summaries;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (run.roles[i] == Role::kFollower) continue;
    PlatoonSummary s{route_length(net, run.default_plans[i].route), {}};
    for (std::uint32_t f : followers_of[i]) {
      const AdaptedPlan* p = run.build.plan(f, i);
      s.followers.push_back({p->merge_arc_m, p->split_arc_m, route_length(net, p->plan.route)});
    }
    summaries.push_back(std::move(s));
  }
  r.histogram = platoon_size_histogram(summaries);

  if (cfg.verify) {
    clock = std::chrono::steady_clock::now();
    Verification v3 = verify_plans(net, run.assignments, run.stage3_plans, m);
    Verification v4 = verify_plans(net, run.assignments, run.stage4_plans, m);
    Verification v = v4;
    v.plans_checked += v3.plans_checked;
    v.plans_invalid += v3.plans_invalid;
    v.intervals_checked += v3.intervals_checked;
    v.intervals_bad += v3.intervals_bad;
    v.problems.insert(v.problems.end(), v3.problems.begin(), v3.problems.end());
    emit(log, {{"event", "verify"}, {"plans_checked", v.plans_checked}, {"plans_invalid", v.plans_invalid},
               {"intervals_checked", v.intervals_checked}, {"intervals_bad", v.intervals_bad},
               {"elapsed_s", seconds_since(clock)}});
    for (const std::string& p : v.problems) emit(log, {{"event", "verify_problem"}, {"level", "warn"}, {"message", p}});
    run.verification = std::move(v);
  }
  return run;
}

void write_run(const RoadNetwork& net, const RunResult& run, const std::string& dir) {
  const std::filesystem::path out(dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());

  json plans = json::array();
  for (std::size_t i = 0; i < run.assignments.size(); ++i) {
    json p = plan_to_json(net, run.stage4_plans[i]);
    p["id"] = run.assignments[i].id;
    p["role"] = role_name(run.roles[i]);
    p["fuel_kg"] = plan_fuel(run.fuel, run.stage4_plans[i]);
    plans.push_back(std::move(p));
  }
  json report = report_to_json(run.report);
  report["disregarded_ids"] = run.disregarded;
  if (run.verification) {
    report["verification"] = {{"plans_checked", run.verification->plans_checked},
                              {"plans_invalid", run.verification->plans_invalid},
                              {"intervals_checked", run.verification->intervals_checked},
                              {"intervals_bad", run.verification->intervals_bad}};
  }
  json groups = json::array();
  for (const GroupOutcome& o : run.outcomes) {
    groups.push_back({{"leader", o.leader}, {"followers", o.followers}, {"free_variables", o.free_variables},
                      {"iterations", o.newton_steps}, {"objective_before_kg", o.objective_before_kg},
                      {"objective_after_kg", o.objective_after_kg}, {"kkt_residual", o.kkt_residual},
                      {"converged", o.converged}});
  }
  report["groups"] = groups;
  write_file(out / "plans.json", plans.dump(2) + "\n");
  write_file(out / "leaders.json", leader_set_to_json(run.build.graph, run.leaders).dump(2) + "\n");
  write_file(out / "report.json", report.dump(2) + "\n");
  write_file(out / "graph.csv", graph_to_csv(run.build.graph));
  write_file(out / "histogram.csv", histogram_csv(run.report));
  write_file(out / "savings.csv", savings_csv(run.report));
}

RunInput prepare_input(const RunConfig& cfg) {
  RunInput in{scenario_network(cfg.scenario), {}};
  if (cfg.assignments_file) {
    in.assignments = load_assignments_file(in.net, *cfg.assignments_file);
  } else {
    in.assignments = generate_assignments(in.net, cfg.scenario, cfg.fuel);
  }
  return in;
}

std::vector<MonteCarloRow> run_montecarlo(const RunConfig& cfg, std::span<const std::size_t> sizes, std::size_t runs,
                                          const LogFn& log) {
  const RoadNetwork net = scenario_network(cfg.scenario);
  std::vector<MonteCarloRow> rows(sizes.size() * runs);
  std::mutex log_mutex;
  LogFn locked_log;
  if (log) {
    locked_log = [&](const json& j) {
      std::lock_guard lock(log_mutex);
      log(j);
    };
  }
  parallel_for(rows.size(), cfg.jobs, [&](std::size_t k) {
    MonteCarloRow& row = rows[k];
    row.size = sizes[k / runs];
    row.seed = cfg.scenario.seed + k % runs;
    RunConfig rc = cfg;
    rc.jobs = 1;
    rc.scenario.assignments = row.size;
    rc.scenario.seed = row.seed;
    rc.seed = row.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      auto assignments = generate_assignments(net, rc.scenario, rc.fuel);
      const RunResult run = run_pipeline(net, std::move(assignments), rc);
      row.saving_stage3 = run.report.saving_stage3();
      row.saving_stage4 = run.report.saving_stage4();
      row.saving_spontaneous = run.report.saving_spontaneous();
      row.upper_bound_rel = run.report.upper_bound_rel();
      if (run.verification) {
        row.plans_invalid = run.verification->plans_invalid;
        row.intervals_bad = run.verification->intervals_bad;
        if (!run.verification->ok()) row.status = "verification_failed";
      }
    } catch (const InfeasibleError& e) {
      row.status = "infeasible";
      emit(locked_log, {{"event", "run_failed"}, {"level", "error"}, {"size", row.size}, {"seed", row.seed},
                        {"message", e.what()}});
    } catch (const std::exception& e) {
      row.status = "error";
      emit(locked_log, {{"event", "run_failed"}, {"level", "error"}, {"size", row.size}, {"seed", row.seed},
                        {"message", e.what()}});
    }
    row.wallclock_s = seconds_since(start);
    emit(locked_log, {{"event", "run"}, {"size", row.size}, {"seed", row.seed}, {"status", row.status},
                      {"saving_stage4", row.saving_stage4}, {"wallclock_s", row.wallclock_s}});
  });
  return rows;
}

std::string montecarlo_csv(std::span<const MonteCarloRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "size,seed,saving_stage3,saving_stage4,saving_spontaneous,upper_bound_rel,wallclock_s,status,plans_invalid,"
         "intervals_bad\n";
  for (const MonteCarloRow& r : rows) {
    out << r.size << ',' << r.seed << ',' << r.saving_stage3 << ',' << r.saving_stage4 << ',' << r.saving_spontaneous
        << ',' << r.upper_bound_rel << ',' << r.wallclock_s << ',' << r.status << ',' << r.plans_invalid << ','
        << r.intervals_bad << '\n';
  }
  return out.str();
}

std::string montecarlo_summary_csv(std::span<const MonteCarloRow> rows) {
  struct Sum {
    std::size_t runs = 0, failed = 0;
    double s3 = 0, s4 = 0, sp = 0, ub = 0, wall = 0;
  };
  std::map<std::size_t, Sum> by_size;
  for (const MonteCarloRow& r : rows) {
    Sum& s = by_size[r.size];
    if (r.status != "ok") {
      ++s.failed;
      continue;
    }
    ++s.runs;
    s.s3 += r.saving_stage3;
    s.s4 += r.saving_stage4;
    s.sp += r.saving_spontaneous;
    s.ub += r.upper_bound_rel;
    s.wall += r.wallclock_s;
  }
  std::ostringstream out;
  out.precision(17);
  out << "size,runs,failed,saving_stage3,saving_stage4,saving_spontaneous,upper_bound_rel,wallclock_s\n";
  for (const auto& [size, s] : by_size) {
    const double k = s.runs ? static_cast<double>(s.runs) : 1.0;
    out << size << ',' << s.runs << ',' << s.failed << ',' << s.s3 / k << ',' << s.s4 / k << ',' << s.sp / k << ','
        << s.ub / k << ',' << s.wall / k << '\n';
  }
  return out.str();
}

}  // namespace platoon
