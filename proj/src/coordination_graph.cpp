#include "platoon/coordination_graph.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "platoon/errors.hpp"

namespace platoon {

CoordinationGraph::CoordinationGraph(std::vector<std::int64_t> ids) : ids_(std::move(ids)) {
  for (std::size_t i = 1; i < ids_.size(); ++i) {
    if (!(ids_[i - 1] < ids_[i])) throw std::invalid_argument("coordination graph ids must be strictly increasing");
  }
  out_.resize(ids_.size());
  in_.resize(ids_.size());
}

CoordinationGraph CoordinationGraph::with_nodes(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  return CoordinationGraph(std::move(ids));
}

namespace {

using Arc = CoordinationGraph::Arc;

bool insert_sorted(std::vector<Arc>& list, Arc arc) {
  auto it = std::lower_bound(list.begin(), list.end(), arc.node,
                             [](const Arc& a, std::uint32_t n) { return a.node < n; });
  if (it != list.end() && it->node == arc.node) return false;
  list.insert(it, arc);
  return true;
}

}  // namespace

void CoordinationGraph::add_edge(std::uint32_t src, std::uint32_t dst, double weight) {
  if (src >= ids_.size() || dst >= ids_.size()) throw std::invalid_argument("edge endpoint out of range");
  if (src == dst) throw std::invalid_argument("coordination graph has no self-loops");
  if (!(weight > kMinEdgeWeight)) throw std::invalid_argument("coordination edge weight must be positive");
  if (!insert_sorted(out_[src], {dst, weight})) throw std::invalid_argument("duplicate coordination edge");
  insert_sorted(in_[dst], {src, weight});
  ++edges_;
}

std::optional<std::uint32_t> CoordinationGraph::index_of(std::int64_t id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::uint32_t>(it - ids_.begin());
}

std::optional<double> CoordinationGraph::weight(std::uint32_t src, std::uint32_t dst) const {
  const auto& list = out_.at(src);
  auto it = std::lower_bound(list.begin(), list.end(), dst, [](const Arc& a, std::uint32_t n) { return a.node < n; });
  if (it == list.end() || it->node != dst) return std::nullopt;
  return it->weight;
}

const AdaptedPlan* CoordinationBuild::plan(std::uint32_t follower, std::uint32_t leader) const {
  auto it = plans.find(pair_key(follower, leader));
  return it == plans.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> prune_pairs(const RoadNetwork& net,
                                                                 std::span<const Assignment> assignments,
                                                                 std::span<const VehiclePlan> default_plans,
                                                                 const FuelModel& m) {
  constexpr double kSlack = 1e-6;  // s
  struct Visit {
    std::uint32_t truck;
    double enter_arc;
  };
  std::vector<std::vector<Visit>> by_edge(net.edge_count());
  std::vector<double> lengths(assignments.size());
  for (std::uint32_t i = 0; i < assignments.size(); ++i) {
    const RouteGeometry geo(net, default_plans[i].route);
    lengths[i] = geo.length();
    for (std::size_t k = 0; k < geo.edge_count(); ++k) {
      if (geo.is_full_edge(k)) by_edge[default_plans[i].route.edges[k]].push_back({i, geo.edge_start_arc(k)});
    }
  }

  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (EdgeIndex e = 0; e < by_edge.size(); ++e) {
    const auto& visits = by_edge[e];
    const double len = net.length(e);
    for (const Visit& f : visits) {
      const Assignment& af = assignments[f.truck];
      // Earliest arrival at the edge entry and latest possible presence at
      // its exit under the speed window and deadline.
      const double f_lo = af.t_start + f.enter_arc / m.v_max;
      const double f_hi = std::min(af.t_start + (f.enter_arc + len) / m.v_min, af.t_deadline);
      for (const Visit& l : visits) {
        if (l.truck == f.truck) continue;
        const VehiclePlan& lp = default_plans[l.truck];
        const double v = lp.speeds.front();
        const double l_in = lp.times.front() + l.enter_arc / v;
        const double l_out = lp.times.front() + (l.enter_arc + len) / v;
        if (l_out + kSlack < f_lo || l_in - kSlack > f_hi) continue;
        pairs.emplace(f.truck, l.truck);
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

CoordinationBuild build_coordination_graph(const RoadNetwork& net, std::span<const Assignment> assignments,
                                           std::span<const VehiclePlan> default_plans, const FuelModel& m,
                                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>* candidates,
                                           unsigned jobs) {
  const std::size_t n = assignments.size();
  if (default_plans.size() != n) throw std::invalid_argument("one default plan per assignment required");
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = assignments[i].id;

  std::vector<std::vector<std::uint32_t>> leaders_of(n);
  if (candidates) {
    for (const auto& [f, l] : *candidates) leaders_of.at(f).push_back(l);
  } else {
    for (std::uint32_t f = 0; f < n; ++f) {
      for (std::uint32_t l = 0; l < n; ++l) {
        if (l != f) leaders_of[f].push_back(l);
      }
    }
  }

  std::vector<std::vector<std::pair<std::uint32_t, AdaptedPlan>>> found(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (std::size_t f = next++; f < n; f = next++) {
        for (std::uint32_t l : leaders_of[f]) {
          auto plan = adapted_plan(net, assignments[f], default_plans[f].route, default_plans[l], assignments[l].id, m);
          if (plan && plan->saving_kg > kMinEdgeWeight) found[f].emplace_back(l, std::move(*plan));
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  CoordinationBuild build{CoordinationGraph(std::move(ids)), {}};
  for (std::uint32_t f = 0; f < n; ++f) {
    for (auto& [l, plan] : found[f]) {
      build.graph.add_edge(f, l, plan.saving_kg);
      build.plans.emplace(pair_key(f, l), std::move(plan));
    }
  }
  return build;
}

std::string graph_to_csv(const CoordinationGraph& g) {
  std::ostringstream out;
  out.precision(17);
  out << "src,dst,saving_kg\n";
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    for (const auto& arc : g.out(n)) out << g.id(n) << ',' << g.id(arc.node) << ',' << arc.weight << '\n';
  }
  return out.str();
}

CoordinationGraph graph_from_csv(std::string_view text, std::string_view source) {
  struct Row {
    std::int64_t src, dst;
    double w;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::set<std::int64_t> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](std::size_t line, const std::string& msg) -> InputError {
    return InputError(std::string(source) + ":" + std::to_string(line) + ": " + msg);
  };
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("src", 0) == 0) continue;
    std::string cells[3];
    std::size_t start = 0;
    int count = 0;
    for (; count < 3; ++count) {
      std::size_t comma = line.find(',', start);
      if (count < 2 && comma == std::string_view::npos) break;
      cells[count] = std::string(line.substr(start, count < 2 ? comma - start : std::string_view::npos));
      start = comma + 1;
    }
    if (count != 3) throw fail(line_no, "expected src,dst,saving_kg");
    Row row{0, 0, 0.0, line_no};
    try {
      std::size_t used = 0;
      row.src = std::stoll(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("");
      row.dst = std::stoll(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("");
      row.w = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw fail(line_no, "malformed number");
    }
    rows.push_back(row);
    ids.insert(row.src);
    ids.insert(row.dst);
  }
  CoordinationGraph g(std::vector<std::int64_t>(ids.begin(), ids.end()));
  for (const Row& r : rows) {
    try {
      g.add_edge(*g.index_of(r.src), *g.index_of(r.dst), r.w);
    } catch (const std::invalid_argument& e) {
      throw fail(r.line, e.what());
    }
  }
  return g;
}

}  // namespace platoon
