#include "platoon/joint_optimization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "platoon/errors.hpp"

namespace platoon {
namespace {

constexpr double kEventTol = 1e-7;   // m, leader events closer than this are one event
constexpr double kPieceTol = 1e-9;   // m, shorter solo pieces are dropped
constexpr double kTightTol = 1e-7;   // s, cycles this tight pin their nodes together
constexpr double kInf = std::numeric_limits<double>::infinity();

// Difference constraint x[j] - x[i] <= c.
struct Constraint {
  std::size_t i, j;
  double c;
};

// Fuel term q / T + (linear part kept separately) with T = x[j] - x[i] + d.
struct Term {
  std::size_t i, j;
  double d;
  double q;
};

// Node 0 is the time origin. Nodes 1..K+1 are the leader events, followed by
// one arrival node per follower with a tail piece.
struct Network {
  std::size_t nodes = 0;
  std::vector<Constraint> constraints;
  std::vector<Term> terms;
  double constant = 0.0;
  std::vector<std::size_t> arrival_node;  // per follower, 0 when no tail
};

std::size_t event_node(std::size_t e) { return e + 1; }

Network build_network(const CoordinationGroup& g, const FuelModel& m) {
  Network net;
  const std::size_t k = g.leader.distances.size();
  net.nodes = k + 2;
  net.arrival_node.assign(g.followers.size(), 0);
  for (std::size_t f = 0; f < g.followers.size(); ++f) {
    if (g.followers[f].has_tail) net.arrival_node[f] = net.nodes++;
  }
  auto between = [&](std::size_t i, std::size_t j, double lo, double hi) {
    net.constraints.push_back({i, j, hi});
    net.constraints.push_back({j, i, -lo});
  };
  auto solo = [&](std::size_t i, std::size_t j, double d, double w) {
    net.terms.push_back({i, j, d, m.a0 * w * w});
    net.constant += m.b0 * w;
  };

  between(0, event_node(0), g.leader.t_start, g.leader.t_start);
  std::vector<int> followers_on(k, 0);
  for (const GroupMember& f : g.followers) {
    for (std::size_t i = f.merge_index; i < f.split_index; ++i) ++followers_on[i];
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double w = g.leader.distances[i];
    between(event_node(i), event_node(i + 1), w / m.v_max, w / m.v_min);
    const double a = m.a0 + followers_on[i] * m.ap;
    net.terms.push_back({event_node(i), event_node(i + 1), 0.0, a * w * w});
    net.constant += (m.b0 + followers_on[i] * m.bp) * w;
  }
  net.constraints.push_back({0, event_node(k), g.leader.t_deadline});

  for (std::size_t f = 0; f < g.followers.size(); ++f) {
    const GroupMember& mem = g.followers[f];
    const std::size_t merge = event_node(mem.merge_index);
    const std::size_t split = event_node(mem.split_index);
    if (mem.has_pre) {
      const double w = mem.distances.front();
      between(0, merge, mem.t_start + w / m.v_max, mem.t_start + w / m.v_min);
      solo(0, merge, -mem.t_start, w);
    } else {
      between(0, merge, mem.t_start, mem.t_start);
    }
    if (mem.has_tail) {
      const double w = mem.distances.back();
      const std::size_t arrive = net.arrival_node[f];
      between(split, arrive, w / m.v_max, w / m.v_min);
      net.constraints.push_back({0, arrive, mem.t_deadline});
      solo(split, arrive, 0.0, w);
    } else {
      net.constraints.push_back({0, split, mem.t_deadline});
    }
  }
  return net;
}

std::vector<double> node_times(const Network& net, std::span<const double> events, std::span<const double> arrivals) {
  std::vector<double> x(net.nodes, 0.0);
  for (std::size_t e = 0; e < events.size(); ++e) x[event_node(e)] = events[e];
  for (std::size_t f = 0; f < net.arrival_node.size(); ++f) {
    if (net.arrival_node[f] != 0) x[net.arrival_node[f]] = arrivals[f];
  }
  return x;
}

double objective_at(const Network& net, const std::vector<double>& x) {
  double total = net.constant;
  for (const Term& t : net.terms) total += t.q / (x[t.j] - x[t.i] + t.d);
  return total;
}

// Linear form over the reduced variables: value = coef_j * v[j] - coef_i * v[i] + shift,
// where an index of -1 stands for a fixed (origin-class) node.
struct Form {
  int plus = -1;
  int minus = -1;
  double shift = 0.0;

  double eval(const Eigen::VectorXd& v) const {
    double r = shift;
    if (plus >= 0) r += v[plus];
    if (minus >= 0) r -= v[minus];
    return r;
  }
  double along(const Eigen::VectorXd& dv) const {
    double r = 0.0;
    if (plus >= 0) r += dv[plus];
    if (minus >= 0) r -= dv[minus];
    return r;
  }
};

struct Reduced {
  std::vector<std::size_t> cls;     // node -> class
  std::vector<double> offset;       // node -> offset from the class representative
  std::vector<int> var;             // class -> variable index, -1 for the origin class
  std::size_t vars = 0;
  std::vector<Form> slack;          // constraint c - (x_j - x_i) >= 0
  std::vector<Form> duration;       // per term: T
  std::vector<double> q;
  std::vector<Constraint> quotient; // constraints between classes
  std::size_t classes = 0;
};

Reduced presolve(const Network& net) {
  const std::size_t n = net.nodes;
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const Constraint& c : net.constraints) d[c.i][c.j] = std::min(d[c.i][c.j], c.c);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i][k] == kInf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (d[k][j] != kInf && d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i][i] < -kTightTol) throw InfeasibleError("coordination group timing constraints are inconsistent");
  }

  Reduced r;
  r.cls.assign(n, n);
  r.offset.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (r.cls[i] != n) continue;
    const std::size_t c = r.classes++;
    for (std::size_t j = i; j < n; ++j) {
      if (r.cls[j] == n && d[i][j] != kInf && d[j][i] != kInf && d[i][j] + d[j][i] <= kTightTol) {
        r.cls[j] = c;
        // Shortest-path offsets satisfy every constraint inside the class.
        r.offset[j] = d[i][j];
      }
    }
  }
  r.var.assign(r.classes, -1);
  for (std::size_t c = 1; c < r.classes; ++c) r.var[c] = static_cast<int>(r.vars++);

  auto form = [&](std::size_t i, std::size_t j, double shift) {
    return Form{r.var[r.cls[j]], r.var[r.cls[i]], shift + r.offset[j] - r.offset[i]};
  };
  for (const Constraint& c : net.constraints) {
    if (r.cls[c.i] == r.cls[c.j]) continue;
    Form f = form(c.i, c.j, 0.0);
    // slack = c - value
    r.slack.push_back(Form{f.minus, f.plus, c.c - f.shift});
    r.quotient.push_back({r.cls[c.i], r.cls[c.j], c.c - (r.offset[c.j] - r.offset[c.i])});
  }
  for (const Term& t : net.terms) {
    r.duration.push_back(form(t.i, t.j, t.d));
    r.q.push_back(t.q);
  }
  return r;
}

// Minimum mean cycle weight (Karp) of the class graph; +inf without cycles.
double min_mean_cycle(std::size_t n, const std::vector<Constraint>& edges) {
  std::vector<std::vector<double>> dk(n + 1, std::vector<double>(n, kInf));
  std::fill(dk[0].begin(), dk[0].end(), 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    for (const Constraint& e : edges) {
      if (dk[k - 1][e.i] != kInf) dk[k][e.j] = std::min(dk[k][e.j], dk[k - 1][e.i] + e.c);
    }
  }
  double best = kInf;
  for (std::size_t v = 0; v < n; ++v) {
    if (dk[n][v] == kInf) continue;
    double worst = -kInf;
    for (std::size_t k = 0; k < n; ++k) {
      if (dk[k][v] != kInf) worst = std::max(worst, (dk[n][v] - dk[k][v]) / static_cast<double>(n - k));
    }
    best = std::min(best, worst);
  }
  return best;
}

// A point with every class constraint slack by at least eps.
Eigen::VectorXd interior_point(const Reduced& r) {
  const double lambda = min_mean_cycle(r.classes, r.quotient);
  if (lambda <= 0.0) throw InfeasibleError("coordination group has no strictly feasible timing");
  const double eps = std::isfinite(lambda) ? 0.5 * lambda : 1.0;
  std::vector<double> dist(r.classes, 0.0);
  for (std::size_t round = 0; round < r.classes; ++round) {
    bool changed = false;
    for (const Constraint& e : r.quotient) {
      const double cand = dist[e.i] + e.c - eps;
      if (cand < dist[e.j]) {
        dist[e.j] = cand;
        changed = true;
      }
    }
    if (!changed) break;
  }
  Eigen::VectorXd v(r.vars);
  for (std::size_t c = 1; c < r.classes; ++c) v[r.var[c]] = dist[c] - dist[0];
  return v;
}

struct Barrier {
  const Reduced& r;
  double t = 1.0;

  // +inf outside the domain.
  double value(const Eigen::VectorXd& v) const {
    double f = 0.0;
    for (std::size_t k = 0; k < r.duration.size(); ++k) {
      const double T = r.duration[k].eval(v);
      if (!(T > 0.0)) return kInf;
      f += r.q[k] / T;
    }
    double b = 0.0;
    for (const Form& s : r.slack) {
      const double sv = s.eval(v);
      if (!(sv > 0.0)) return kInf;
      b -= std::log(sv);
    }
    return t * f + b;
  }

  double fuel(const Eigen::VectorXd& v) const {
    double f = 0.0;
    for (std::size_t k = 0; k < r.duration.size(); ++k) f += r.q[k] / r.duration[k].eval(v);
    return f;
  }

  void fuel_gradient(const Eigen::VectorXd& v, Eigen::VectorXd& g) const {
    g.setZero(r.vars);
    for (std::size_t k = 0; k < r.duration.size(); ++k) {
      const Form& d = r.duration[k];
      const double T = d.eval(v);
      const double dT = -r.q[k] / (T * T);
      if (d.plus >= 0) g[d.plus] += dT;
      if (d.minus >= 0) g[d.minus] -= dT;
    }
  }

  void derivatives(const Eigen::VectorXd& v, Eigen::VectorXd& g, Eigen::MatrixXd& h) const {
    g.setZero(r.vars);
    h.setZero(r.vars, r.vars);
    auto add = [&](const Form& f, double first, double second) {
      if (f.plus >= 0) {
        g[f.plus] += first;
        h(f.plus, f.plus) += second;
      }
      if (f.minus >= 0) {
        g[f.minus] -= first;
        h(f.minus, f.minus) += second;
      }
      if (f.plus >= 0 && f.minus >= 0) {
        h(f.plus, f.minus) -= second;
        h(f.minus, f.plus) -= second;
      }
    };
    for (std::size_t k = 0; k < r.duration.size(); ++k) {
      const double T = r.duration[k].eval(v);
      add(r.duration[k], -t * r.q[k] / (T * T), 2.0 * t * r.q[k] / (T * T * T));
    }
    for (const Form& s : r.slack) {
      const double sv = s.eval(v);
      add(s, -1.0 / sv, 1.0 / (sv * sv));
    }
  }
};

void store(const Network& net, const Reduced& r, const Eigen::VectorXd& v, const CoordinationGroup& g,
           TimingSolution& sol) {
  std::vector<double> x(net.nodes);
  for (std::size_t i = 0; i < net.nodes; ++i) {
    const int var = r.var[r.cls[i]];
    x[i] = (var >= 0 ? v[var] : 0.0) + r.offset[i];
  }
  const std::size_t k = g.leader.distances.size();
  sol.events.assign(k + 1, 0.0);
  for (std::size_t e = 0; e <= k; ++e) sol.events[e] = x[event_node(e)];
  sol.arrivals.assign(g.followers.size(), 0.0);
  for (std::size_t f = 0; f < g.followers.size(); ++f) {
    sol.arrivals[f] = net.arrival_node[f] ? x[net.arrival_node[f]] : x[event_node(g.followers[f].split_index)];
  }
}

std::size_t nearest_event(const std::vector<double>& arcs, double arc) {
  auto it = std::lower_bound(arcs.begin(), arcs.end(), arc);
  std::size_t i = static_cast<std::size_t>(it - arcs.begin());
  if (i == arcs.size() || (i > 0 && arc - arcs[i - 1] < arcs[i] - arc)) --i;
  return i;
}

}  // namespace

CoordinationGroup build_group(const RoadNetwork& net, const Assignment& leader, const VehiclePlan& leader_plan,
                              std::span<const FollowerInput> followers) {
  if (leader_plan.pieces() != 1 || leader_plan.follower_flags.front() != 0) {
    throw InputError("leader " + std::to_string(leader.id) + " does not drive a constant-speed default plan");
  }
  CoordinationGroup g;
  g.leader_speed = leader_plan.speeds.front();
  const double total = route_length(net, leader_plan.route);

  std::vector<double> arcs{0.0, total};
  for (const FollowerInput& f : followers) {
    const AdaptedPlan& p = *f.plan;
    if (p.leader != leader.id || p.plan.leader != leader.id) {
      throw InputError("assignment " + std::to_string(f.assignment->id) + " is not adapted to leader " +
                       std::to_string(leader.id));
    }
    if (!(p.merge_arc_m >= -kEventTol && p.merge_arc_m < p.split_arc_m && p.split_arc_m <= total + kEventTol)) {
      throw InputError("platoon interval of assignment " + std::to_string(f.assignment->id) +
                       " lies outside the leader route");
    }
    arcs.push_back(std::clamp(p.merge_arc_m, 0.0, total));
    arcs.push_back(std::clamp(p.split_arc_m, 0.0, total));
  }
  std::sort(arcs.begin(), arcs.end());
  for (double a : arcs) {
    if (g.event_arcs.empty() || a - g.event_arcs.back() > kEventTol) g.event_arcs.push_back(a);
  }
  if (g.event_arcs.size() > 1 && total - g.event_arcs[g.event_arcs.size() - 2] <= kEventTol) {
    g.event_arcs.pop_back();
  }
  g.event_arcs.back() = total;

  g.leader.id = leader.id;
  g.leader.route = leader_plan.route;
  g.leader.t_start = leader.t_start;
  g.leader.t_deadline = leader.t_deadline;
  for (std::size_t i = 0; i + 1 < g.event_arcs.size(); ++i) {
    g.leader.distances.push_back(g.event_arcs[i + 1] - g.event_arcs[i]);
    g.leader.flags.push_back(0);
  }
  for (double a : g.event_arcs) g.initial_events.push_back(leader_plan.times.front() + a / g.leader_speed);
  g.initial_events.back() = leader_plan.times.back();

  for (const FollowerInput& f : followers) {
    const AdaptedPlan& p = *f.plan;
    GroupMember mem;
    mem.id = f.assignment->id;
    mem.route = p.plan.route;
    mem.t_start = f.assignment->t_start;
    mem.t_deadline = f.assignment->t_deadline;
    mem.merge_index = nearest_event(g.event_arcs, p.merge_arc_m);
    mem.split_index = nearest_event(g.event_arcs, p.split_arc_m);
    if (mem.merge_index >= mem.split_index) {
      throw InputError("platoon of assignment " + std::to_string(mem.id) + " collapses to an empty interval");
    }
    const double own = route_length(net, p.plan.route);
    const double pre = g.event_arcs[mem.merge_index] + p.arc_offset_m;
    const double tail = own - (g.event_arcs[mem.split_index] + p.arc_offset_m);
    mem.has_pre = p.plan.follower_flags.front() == 0 && pre > kPieceTol;
    mem.has_tail = p.plan.follower_flags.back() == 0 && tail > kPieceTol;
    if (mem.has_pre) {
      mem.distances.push_back(pre);
      mem.flags.push_back(0);
    }
    for (std::size_t i = mem.merge_index; i < mem.split_index; ++i) {
      mem.distances.push_back(g.leader.distances[i]);
      mem.flags.push_back(1);
    }
    if (mem.has_tail) {
      mem.distances.push_back(tail);
      mem.flags.push_back(0);
    }
    g.initial_arrivals.push_back(mem.has_tail ? p.plan.times.back() : g.initial_events[mem.split_index]);
    g.followers.push_back(std::move(mem));
  }
  return g;
}

std::vector<double> TimingSolution::durations(const CoordinationGroup& g, std::size_t member) const {
  std::vector<double> out;
  if (member == 0) {
    for (std::size_t i = 0; i + 1 < events.size(); ++i) out.push_back(events[i + 1] - events[i]);
    return out;
  }
  const GroupMember& f = g.followers.at(member - 1);
  if (f.has_pre) out.push_back(events[f.merge_index] - f.t_start);
  for (std::size_t i = f.merge_index; i < f.split_index; ++i) out.push_back(events[i + 1] - events[i]);
  if (f.has_tail) out.push_back(arrivals[member - 1] - events[f.split_index]);
  return out;
}

double group_objective(const CoordinationGroup& g, const FuelModel& m, std::span<const double> events,
                       std::span<const double> arrivals) {
  const Network net = build_network(g, m);
  return objective_at(net, node_times(net, events, arrivals));
}

TimingSolution initial_solution(const CoordinationGroup& g, const FuelModel& m) {
  TimingSolution sol;
  sol.events = g.initial_events;
  sol.arrivals = g.initial_arrivals;
  sol.objective_kg = sol.initial_objective_kg = group_objective(g, m, sol.events, sol.arrivals);
  sol.kept_initial = true;
  return sol;
}

TimingSolution solve_group(const CoordinationGroup& g, const FuelModel& m, const SolverOptions& options) {
  const Network net = build_network(g, m);
  const Reduced r = presolve(net);
  TimingSolution sol;
  sol.initial_objective_kg = objective_at(net, node_times(net, g.initial_events, g.initial_arrivals));
  sol.free_variables = r.vars;

  Eigen::VectorXd v = interior_point(r);
  Barrier barrier{r};
  const double count = static_cast<double>(r.slack.size());
  Eigen::VectorXd grad(r.vars), step(r.vars), fuel_grad(r.vars);
  Eigen::MatrixXd hess(r.vars, r.vars);

  if (r.vars > 0) {
    barrier.t = std::max(1.0, count / (1.0 + std::abs(barrier.fuel(v) + net.constant)));
    while (true) {
      // Centering by damped Newton.
      bool centered = false;
      while (sol.newton_steps < options.max_iter) {
        barrier.derivatives(v, grad, hess);
        step = hess.ldlt().solve(-grad);
        if (!step.allFinite()) break;
        const double decrement = -grad.dot(step);
        if (decrement / 2.0 <= 1e-12) {
          centered = true;
          break;
        }
        double alpha = 1.0;
        for (const Form& s : r.slack) {
          const double rate = -s.along(step);
          if (rate < 0.0) alpha = std::min(alpha, 0.99 * s.eval(v) / -rate);
        }
        ++sol.newton_steps;
        if (alpha == 1.0 && decrement < 0.0625) {
          // Quadratic region of a self-concordant barrier: the full step is
          // safe, and the barrier value is too large to resolve the decrease.
          v += step;
          if (decrement <= 1e-10) {
            centered = true;
            break;
          }
          continue;
        }
        const double phi = barrier.value(v);
        while (alpha > 1e-16 && !(barrier.value(v + alpha * step) <= phi - 1e-4 * alpha * decrement)) alpha *= 0.5;
        if (alpha <= 1e-16) break;
        v += alpha * step;
      }
      const double gap = count / barrier.t;
      if (gap <= options.tol * (1.0 + std::abs(barrier.fuel(v) + net.constant))) {
        sol.converged = centered;
        break;
      }
      if (sol.newton_steps >= options.max_iter) break;
      barrier.t *= options.barrier_mu;
    }
    // Stationarity residual with multipliers 1/(t*s).
    barrier.fuel_gradient(v, fuel_grad);
    Eigen::VectorXd residual = fuel_grad;
    for (const Form& s : r.slack) {
      const double lambda = 1.0 / (barrier.t * s.eval(v));
      if (s.plus >= 0) residual[s.plus] -= lambda;
      if (s.minus >= 0) residual[s.minus] += lambda;
    }
    sol.kkt_residual = residual.lpNorm<Eigen::Infinity>() / (1.0 + fuel_grad.lpNorm<Eigen::Infinity>());
  } else {
    sol.converged = true;
  }

  store(net, r, v, g, sol);
  sol.objective_kg = objective_at(net, node_times(net, sol.events, sol.arrivals));
  if (sol.objective_kg > sol.initial_objective_kg) {
    sol.events = g.initial_events;
    sol.arrivals = g.initial_arrivals;
    sol.objective_kg = sol.initial_objective_kg;
    sol.kept_initial = true;
  }
  return sol;
}

namespace {

void append_piece(VehiclePlan& plan, double distance, double t_end, std::uint8_t flag) {
  const double t_begin = plan.times.back();
  const double v = distance / (t_end - t_begin);
  if (!plan.speeds.empty() && plan.follower_flags.back() == flag &&
      std::abs(plan.speeds.back() - v) <= 1e-12 * v) {
    // Merge with the previous piece, keeping the covered distance exact.
    const double t0 = plan.times[plan.times.size() - 2];
    const double d0 = plan.speeds.back() * (t_begin - t0);
    plan.speeds.back() = (d0 + distance) / (t_end - t0);
    plan.times.back() = t_end;
    return;
  }
  plan.speeds.push_back(v);
  plan.follower_flags.push_back(flag);
  plan.times.push_back(t_end);
}

}  // namespace

std::vector<VehiclePlan> extract_plans(const CoordinationGroup& g, const TimingSolution& sol) {
  std::vector<VehiclePlan> plans;
  VehiclePlan lead;
  lead.route = g.leader.route;
  lead.times.push_back(sol.events.front());
  for (std::size_t i = 0; i < g.leader.distances.size(); ++i) {
    append_piece(lead, g.leader.distances[i], sol.events[i + 1], 0);
  }
  plans.push_back(std::move(lead));

  for (std::size_t f = 0; f < g.followers.size(); ++f) {
    const GroupMember& mem = g.followers[f];
    VehiclePlan plan;
    plan.route = mem.route;
    plan.leader = g.leader.id;
    std::size_t piece = 0;
    if (mem.has_pre) {
      plan.times.push_back(mem.t_start);
      append_piece(plan, mem.distances[piece++], sol.events[mem.merge_index], 0);
    } else {
      plan.times.push_back(sol.events[mem.merge_index]);
    }
    for (std::size_t i = mem.merge_index; i < mem.split_index; ++i) {
      append_piece(plan, mem.distances[piece++], sol.events[i + 1], 1);
    }
    if (mem.has_tail) append_piece(plan, mem.distances[piece], sol.arrivals[f], 0);
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace platoon
