#include "guided/graph.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <string>

#include "guided/errors.hpp"

namespace guided {

namespace {

constexpr double never = 2.0;

std::vector<std::vector<int>> adjacency(std::size_t nodes,
                                        const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> out(nodes);
  for (const auto& [from, to] : edges) {
    if (from < 1 || to < 1 || static_cast<std::size_t>(from) > nodes ||
        static_cast<std::size_t>(to) > nodes) {
      fail(ErrorKind::graph_invalid, "edge " + std::to_string(from) + "->" +
                                         std::to_string(to) + " names an unknown node");
    }
    if (from == to) fail(ErrorKind::graph_invalid, "self loop at node " + std::to_string(from));
    out[static_cast<std::size_t>(from - 1)].push_back(to);
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

}  // namespace

std::vector<int> post_order(std::size_t nodes, const std::vector<std::pair<int, int>>& edges) {
  const auto out = adjacency(nodes, edges);
  enum class Mark { white, grey, black };
  std::vector<Mark> mark(nodes, Mark::white);
  std::vector<int> order;
  order.reserve(nodes);

  // Iterative DFS so deep chains do not exhaust the stack.
  auto visit = [&](int start) {
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    mark[static_cast<std::size_t>(start - 1)] = Mark::grey;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& nbrs = out[static_cast<std::size_t>(id - 1)];
      if (next < nbrs.size()) {
        const int child = nbrs[next++];
        auto& m = mark[static_cast<std::size_t>(child - 1)];
        if (m == Mark::grey) {
          fail(ErrorKind::graph_invalid,
               "cycle through node " + std::to_string(child) + "; only DAGs are admissible");
        }
        if (m == Mark::white) {
          m = Mark::grey;
          stack.emplace_back(child, 0);
        }
      } else {
        mark[static_cast<std::size_t>(id - 1)] = Mark::black;
        order.push_back(id);
        stack.pop_back();
      }
    }
  };

  if (nodes > 0) visit(1);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (mark[i] == Mark::white) visit(static_cast<int>(i + 1));
  }
  return order;
}

DetectionGraph::DetectionGraph(std::vector<StageSpec> nodes,
                               std::vector<std::pair<int, int>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (nodes_.empty()) fail(ErrorKind::graph_invalid, "graph has no nodes");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges_) {
    if (!seen.insert(e).second) {
      fail(ErrorKind::graph_invalid, "duplicate edge " + std::to_string(e.first) + "->" +
                                         std::to_string(e.second));
    }
  }
  out_ = adjacency(nodes_.size(), edges_);
  in_.assign(nodes_.size(), {});
  for (const auto& [from, to] : edges_) in_[static_cast<std::size_t>(to - 1)].push_back(from);
  for (auto& list : in_) std::sort(list.begin(), list.end());

  (void)guided::post_order(nodes_.size(), edges_);  // cycle check over every node

  std::vector<bool> reached(nodes_.size(), false);
  std::vector<int> stack{1};
  reached[0] = true;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    for (int n : neighbors(id)) {
      if (!reached[static_cast<std::size_t>(n - 1)]) {
        reached[static_cast<std::size_t>(n - 1)] = true;
        stack.push_back(n);
      }
    }
  }
  for (std::size_t i = 0; i < reached.size(); ++i) {
    if (!reached[i]) {
      fail(ErrorKind::graph_invalid,
           "node " + std::to_string(i + 1) + " is not reachable from the root");
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int n : out_[i]) {
      const auto& s = nodes_[static_cast<std::size_t>(n - 1)];
      if (!(s.off_cost < s.on_cost)) {
        fail(ErrorKind::input, "node " + std::to_string(n) + " needs off_cost < on_cost");
      }
    }
  }
}

std::vector<int> DetectionGraph::post_order() const {
  return guided::post_order(nodes_.size(), edges_);
}

std::vector<int> DetectionGraph::descendants(int id) const {
  std::vector<bool> seen(size(), false);
  std::vector<int> stack(neighbors(id).begin(), neighbors(id).end());
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(n - 1)]) continue;
    seen[static_cast<std::size_t>(n - 1)] = true;
    for (int c : neighbors(n)) stack.push_back(c);
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(static_cast<int>(i + 1));
  }
  return out;
}

double DetectionGraph::idle_cost(int id) const {
  // Summed from the far end so a chain reproduces the cascade's backward sum.
  const auto down = descendants(id);
  double sum = 0.0;
  for (auto it = down.rbegin(); it != down.rend(); ++it) sum += node(*it).off_cost;
  return sum;
}

DetectionGraph path_graph(const SystemSpec& spec) {
  std::vector<std::pair<int, int>> edges;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    edges.emplace_back(static_cast<int>(k), static_cast<int>(k + 1));
  }
  return DetectionGraph(spec.stages, std::move(edges));
}

void assign_bounds(DetectionGraph& graph, double prior) {
  auto order = graph.post_order();
  std::reverse(order.begin(), order.end());  // parents before children
  for (int id : order) {
    auto& node = graph.node(id);
    BeliefInterval incoming{prior, prior};
    if (id != 1) {
      incoming = {1.0, 0.0};
      for (int p : graph.parents(id)) {
        incoming.lo = std::min(incoming.lo, graph.node(p).bounds.lo);
        incoming.hi = std::max(incoming.hi, graph.node(p).bounds.hi);
      }
    }
    node.bounds = graph.terminal(id) ? BeliefInterval{0.0, 1.0}
                                     : posterior_bounds(incoming, ratio_range(node.model));
  }
}

namespace {

BeliefInterval incoming_interval(const DetectionGraph& graph, int id, double prior) {
  if (id == 1) return {prior, prior};
  BeliefInterval out{1.0, 0.0};
  for (int p : graph.parents(id)) {
    out.lo = std::min(out.lo, graph.node(p).bounds.lo);
    out.hi = std::max(out.hi, graph.node(p).bounds.hi);
  }
  return out;
}

double continuation(const DetectionGraph& graph, const GraphPolicy& policy, int n, double pi) {
  const auto& next = graph.node(n);
  return policy.lambda * next.on_cost +
         expected_value(next.model, policy.node(n).value.values, policy.grid, pi);
}

}  // namespace

GraphPolicy solve_graph(const DetectionGraph& graph, double miss_cost, double fa_cost,
                        double lambda, double prior, const BeliefGrid& grid) {
  if (!(miss_cost > 0.0) || !(fa_cost > 0.0)) {
    fail(ErrorKind::input, "miss and false-alarm costs must be positive");
  }
  if (!(lambda >= 0.0)) fail(ErrorKind::input, "lambda must be nonnegative");
  (void)Belief(prior);

  const std::size_t m = grid.size();
  const double tol = 1e-12 * (miss_cost + fa_cost);
  const double tau_final = fa_cost / (fa_cost + miss_cost);

  GraphPolicy policy;
  policy.grid = grid;
  policy.lambda = lambda;
  policy.miss_cost = miss_cost;
  policy.fa_cost = fa_cost;
  policy.prior = prior;
  policy.order = graph.post_order();
  policy.nodes.assign(graph.size(),
                      NodePolicy{BeliefTable(grid, std::vector<double>(m, 0.0)), {}, 0, 0, {}, {}});
  std::vector<bool> solved(graph.size(), false);

  for (int id : policy.order) {
    auto& np = policy.nodes[static_cast<std::size_t>(id - 1)];
    np.bounds = graph.node(id).bounds;
    np.incoming = incoming_interval(graph, id, prior);
    np.choice.assign(m, 0);
    auto& values = np.value.values;

    if (graph.terminal(id)) {
      for (std::size_t j = 0; j < m; ++j) {
        const double b = grid.point(j);
        values[j] = std::min(miss_cost * b, fa_cost * (1.0 - b));
        np.choice[j] = b >= tau_final ? 1 : 0;
      }
      np.switch_point = np.threshold = tau_final;
      solved[static_cast<std::size_t>(id - 1)] = true;
      continue;
    }

    for (int n : graph.neighbors(id)) {
      if (!solved[static_cast<std::size_t>(n - 1)]) {
        fail(ErrorKind::numerical, "post-order visited node " + std::to_string(id) +
                                       " before its neighbour " + std::to_string(n));
      }
    }
    const double idle = graph.idle_cost(id);
    std::size_t first_continue = m;
    for (std::size_t j = 0; j < m; ++j) {
      const double b = grid.point(j);
      const double stop = miss_cost * b + lambda * idle;
      double best = 0.0;
      int best_id = 0;
      for (int n : graph.neighbors(id)) {
        const double c = continuation(graph, policy, n, b);
        if (best_id == 0 || c < best) {
          best = c;
          best_id = n;
        }
      }
      values[j] = std::min(stop, best);
      if (best <= stop + tol) {
        np.choice[j] = best_id;
        if (first_continue == m) first_continue = j;
      }
    }
    np.switch_point = first_continue == m ? never : grid.point(first_continue);
    np.threshold = std::clamp(std::min(np.switch_point, 1.0), np.bounds.lo, np.bounds.hi);
    solved[static_cast<std::size_t>(id - 1)] = true;
  }

  const auto& root = graph.node(1);
  policy.root_value = lambda * root.on_cost +
                      expected_value(root.model, policy.node(1).value.values, grid, prior);
  return policy;
}

int graph_decide(const DetectionGraph& graph, const GraphPolicy& policy, int id, double pi) {
  const auto& np = policy.node(id);
  if (graph.terminal(id)) return pi >= np.switch_point ? 1 : 0;
  if (pi < np.switch_point) return 0;
  const auto& nbrs = graph.neighbors(id);
  if (nbrs.size() == 1) return nbrs.front();
  double best = 0.0;
  int best_id = 0;
  for (int n : nbrs) {
    const double c = continuation(graph, policy, n, pi);
    if (best_id == 0 || c < best) {
      best = c;
      best_id = n;
    }
  }
  return best_id;
}

std::vector<NodeActivation> graph_activation_probabilities(const DetectionGraph& graph,
                                                           const GraphPolicy& policy,
                                                           const BeliefGrid& grid) {
  std::vector<NodeActivation> out;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto& model = graph.node(id).model;
    NodeActivation act;
    act.decisions.push_back(0);
    if (graph.terminal(id)) {
      act.decisions.push_back(1);
    } else {
      for (int n : graph.neighbors(id)) act.decisions.push_back(n);
    }
    std::vector<std::vector<double>> tables(act.decisions.size(),
                                            std::vector<double>(grid.size(), 0.0));
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Belief b(grid.point(j));
      for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
        const int d = graph_decide(graph, policy, id, posterior_update(b, model, y).value());
        const auto slot = static_cast<std::size_t>(
            std::find(act.decisions.begin(), act.decisions.end(), d) - act.decisions.begin());
        tables[slot][j] += evidence(b, model, y);
      }
    }
    for (auto& t : tables) act.probability.emplace_back(grid, std::move(t));
    act.admissible = policy.node(id).incoming;
    out.push_back(std::move(act));
  }
  return out;
}

}  // namespace guided
