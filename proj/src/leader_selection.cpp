#include "platoon/leader_selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "platoon/errors.hpp"

namespace platoon {
namespace {

struct Best {
  double weight = 0.0;
  std::optional<std::uint32_t> leader;
};

// Best leader among out(n) that are in the mask, ignoring `skip`.
Best best_leader(const CoordinationGraph& g, const std::vector<std::uint8_t>& is_leader, std::uint32_t n,
                 std::optional<std::uint32_t> skip = std::nullopt) {
  Best best;
  for (const auto& arc : g.out(n)) {
    if (!is_leader[arc.node] || arc.node == skip) continue;
    // out() is sorted by index, so strict > keeps the smallest id on ties.
    if (!best.leader || arc.weight > best.weight) best = {arc.weight, arc.node};
  }
  return best;
}

// Local search state with cached per-node gains.
class Search {
 public:
  explicit Search(const CoordinationGraph& g)
      : g_(g), is_leader_(g.node_count(), 0), best_(g.node_count()), gain_(g.node_count(), 0.0),
        stamp_(g.node_count(), 0) {
    for (std::uint32_t n = 0; n < g.node_count(); ++n) gain_[n] = gain(n);
  }

  double gain(std::uint32_t n) const {
    double d = 0.0;
    if (!is_leader_[n]) {
      for (const auto& arc : g_.in(n)) {
        if (!is_leader_[arc.node]) d += std::max(0.0, arc.weight - best_[arc.node].weight);
      }
      return d - best_[n].weight;
    }
    for (const auto& arc : g_.in(n)) {
      const std::uint32_t i = arc.node;
      if (is_leader_[i] || best_[i].leader != n) continue;
      d += best_leader(g_, is_leader_, i, n).weight - best_[i].weight;
    }
    return d + best_leader(g_, is_leader_, n, n).weight;
  }

  void flip(std::uint32_t n) {
    objective_ += gain_[n];
    is_leader_[n] = !is_leader_[n];
    if (is_leader_[n]) {
      best_[n] = {};
      for (const auto& arc : g_.in(n)) {
        Best& b = best_[arc.node];
        if (is_leader_[arc.node]) continue;
        if (!b.leader || arc.weight > b.weight || (arc.weight == b.weight && n < *b.leader)) b = {arc.weight, n};
      }
    } else {
      best_[n] = best_leader(g_, is_leader_, n);
      for (const auto& arc : g_.in(n)) {
        if (!is_leader_[arc.node] && best_[arc.node].leader == n) {
          best_[arc.node] = best_leader(g_, is_leader_, arc.node);
        }
      }
    }
    // Gains depend on membership and best leaders within two hops.
    ++epoch_;
    auto refresh = [&](std::uint32_t x) {
      if (stamp_[x] == epoch_) return;
      stamp_[x] = epoch_;
      gain_[x] = gain(x);
    };
    refresh(n);
    for (const auto& arc : g_.out(n)) refresh(arc.node);
    for (const auto& arc : g_.in(n)) {
      refresh(arc.node);
      for (const auto& arc2 : g_.out(arc.node)) refresh(arc2.node);
    }
  }

  const std::vector<double>& gains() const { return gain_; }
  double objective() const { return objective_; }

  LeaderSet result() const {
    LeaderSet s;
    s.is_leader = is_leader_;
    s.follower_of.resize(g_.node_count());
    for (std::uint32_t n = 0; n < g_.node_count(); ++n) {
      if (!is_leader_[n]) s.follower_of[n] = best_[n].leader;
    }
    s.objective = objective_;
    return s;
  }

 private:
  const CoordinationGraph& g_;
  std::vector<std::uint8_t> is_leader_;
  std::vector<Best> best_;
  std::vector<double> gain_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
  double objective_ = 0.0;
};

}  // namespace

std::vector<std::uint32_t> LeaderSet::leaders() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t n = 0; n < is_leader.size(); ++n) {
    if (is_leader[n]) out.push_back(n);
  }
  return out;
}

LeaderSet make_leader_set(const CoordinationGraph& g, std::vector<std::uint8_t> is_leader) {
  if (is_leader.size() != g.node_count()) throw std::invalid_argument("leader mask size mismatch");
  LeaderSet s;
  s.follower_of.resize(g.node_count());
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    if (is_leader[n]) continue;
    const Best b = best_leader(g, is_leader, n);
    s.follower_of[n] = b.leader;
    s.objective += b.weight;
  }
  s.is_leader = std::move(is_leader);
  return s;
}

double leader_objective(const CoordinationGraph& g, const std::vector<std::uint8_t>& is_leader) {
  double total = 0.0;
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    if (!is_leader[n]) total += best_leader(g, is_leader, n).weight;
  }
  return total;
}

double delta_u(const CoordinationGraph& g, const std::vector<std::uint8_t>& is_leader, std::uint32_t n) {
  double d = 0.0;
  if (!is_leader[n]) {
    for (const auto& arc : g.in(n)) {
      if (!is_leader[arc.node]) d += std::max(0.0, arc.weight - best_leader(g, is_leader, arc.node).weight);
    }
    return d - best_leader(g, is_leader, n).weight;
  }
  for (const auto& arc : g.in(n)) {
    if (is_leader[arc.node]) continue;
    const double now = best_leader(g, is_leader, arc.node).weight;
    d += best_leader(g, is_leader, arc.node, n).weight - now;
  }
  return d + best_leader(g, is_leader, n, n).weight;
}

ClusterResult cluster(const CoordinationGraph& g, SelectionRule rule, std::uint64_t seed) {
  Search search(g);
  ClusterResult result;
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> positive;
  const std::size_t n = g.node_count();
  while (true) {
    const auto& gains = search.gains();
    std::optional<std::uint32_t> pick;
    if (rule == SelectionRule::kGreedy) {
      double best = kMinGain;
      for (std::uint32_t x = 0; x < n; ++x) {
        if (gains[x] > best) {
          best = gains[x];
          pick = x;
        }
      }
    } else {
      positive.clear();
      for (std::uint32_t x = 0; x < n; ++x) {
        if (gains[x] > kMinGain) positive.push_back(x);
      }
      if (!positive.empty()) {
        std::uniform_int_distribution<std::size_t> dist(0, positive.size() - 1);
        pick = positive[dist(rng)];
      }
    }
    if (!pick) break;
    search.flip(*pick);
    result.flips.push_back(*pick);
    result.trace.push_back(search.objective());
  }
  result.set = search.result();
  return result;
}

LeaderSet exact_leaders(const CoordinationGraph& g, std::size_t limit) {
  const std::size_t n = g.node_count();
  if (n > limit || n > 30) {
    throw InputError("exact leader selection limited to " + std::to_string(std::min<std::size_t>(limit, 30)) +
                     " nodes, graph has " + std::to_string(n));
  }
  // Out-arcs as bitmask/weight lists for fast evaluation.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> out(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto& arc : g.out(i)) out[i].emplace_back(arc.node, arc.weight);
  }
  auto value = [&](std::uint32_t mask) {
    double total = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) continue;
      double best = 0.0;
      for (const auto& [j, w] : out[i]) {
        if ((mask >> j & 1u) && w > best) best = w;
      }
      total += best;
    }
    return total;
  };
  // Lexicographic order on sorted leader lists of equal size: the mask that
  // owns the lowest differing bit comes first.
  auto lex_less = [](std::uint32_t a, std::uint32_t b) {
    const std::uint32_t diff = a ^ b;
    return diff != 0 && (a & diff & (~diff + 1)) != 0;
  };
  std::uint32_t best_mask = 0;
  double best_value = value(0);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t m = 1; m < total; ++m) {
    const auto mask = static_cast<std::uint32_t>(m);
    const double v = value(mask);
    const double tol = 1e-12 * std::max(1.0, std::abs(best_value));
    bool better = v > best_value + tol;
    if (!better && std::abs(v - best_value) <= tol) {
      const int ca = std::popcount(mask);
      const int cb = std::popcount(best_mask);
      better = ca < cb || (ca == cb && lex_less(mask, best_mask));
    }
    if (better) {
      best_mask = mask;
      best_value = v;
    }
  }
  std::vector<std::uint8_t> is_leader(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) is_leader[i] = (best_mask >> i) & 1u;
  return make_leader_set(g, std::move(is_leader));
}

double upper_bound(const CoordinationGraph& g) {
  double total = 0.0;
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    double best = 0.0;
    for (const auto& arc : g.out(n)) best = std::max(best, arc.weight);
    total += best;
  }
  return total;
}

SetCoverGraph reduce_set_cover(const SetCoverInstance& inst) {
  const std::size_t u = inst.universe;
  const std::size_t f = inst.family.size();
  SetCoverGraph out{CoordinationGraph::with_nodes(u + f + 1), {}, {}, static_cast<std::uint32_t>(u + f)};
  for (std::size_t e = 0; e < u; ++e) out.element_node.push_back(static_cast<std::uint32_t>(e));
  for (std::size_t s = 0; s < f; ++s) {
    const auto node = static_cast<std::uint32_t>(u + s);
    out.subset_node.push_back(node);
    for (std::size_t e : inst.family[s]) {
      if (e >= u) throw InputError("set cover element " + std::to_string(e) + " outside the universe");
      if (!out.graph.weight(static_cast<std::uint32_t>(e), node)) out.graph.add_edge(static_cast<std::uint32_t>(e), node, 1.0);
    }
    out.graph.add_edge(node, out.sink_node, 0.5);
  }
  return out;
}

nlohmann::json leader_set_to_json(const CoordinationGraph& g, const LeaderSet& set) {
  nlohmann::json leaders = nlohmann::json::array();
  nlohmann::json follower_of = nlohmann::json::object();
  for (std::uint32_t n = 0; n < g.node_count(); ++n) {
    if (set.is_leader[n]) {
      leaders.push_back(g.id(n));
    } else if (set.follower_of[n]) {
      follower_of[std::to_string(g.id(n))] = g.id(*set.follower_of[n]);
    }
  }
  return {{"leaders", leaders}, {"follower_of", follower_of}, {"objective_kg", set.objective}};
}

}  // namespace platoon
