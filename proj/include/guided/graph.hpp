#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "guided/cascade.hpp"
#include "guided/model.hpp"

namespace guided {

/// A detection system whose modules form a DAG rooted at node 1. Node ids are
/// 1-based and follow the order of `nodes`; edges point downstream.
class DetectionGraph {
 public:
  /// Throws ErrorKind::graph_invalid for out-of-range or duplicate edges,
  /// self loops, cycles, or nodes unreachable from the root.
  DetectionGraph(std::vector<StageSpec> nodes, std::vector<std::pair<int, int>> edges);

  std::size_t size() const noexcept { return nodes_.size(); }
  const StageSpec& node(int id) const { return nodes_[static_cast<std::size_t>(id - 1)]; }
  StageSpec& node(int id) { return nodes_[static_cast<std::size_t>(id - 1)]; }
  /// Downstream neighbours, ascending.
  const std::vector<int>& neighbors(int id) const { return out_[static_cast<std::size_t>(id - 1)]; }
  const std::vector<int>& parents(int id) const { return in_[static_cast<std::size_t>(id - 1)]; }
  bool terminal(int id) const { return neighbors(id).empty(); }
  const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }

  /// Every node after all of its downstream neighbours (depth-first from the
  /// root, neighbours in ascending id order).
  std::vector<int> post_order() const;

  /// Nodes strictly downstream-reachable from `id`, ascending, each once.
  std::vector<int> descendants(int id) const;

  /// Idle energy charged when `id` stops: off-costs of its descendants.
  double idle_cost(int id) const;

  /// d_n plus the idle cost of n (the accumulated off-cost of node n).
  double accumulated_off_cost(int id) const { return node(id).off_cost + idle_cost(id); }

 private:
  std::vector<StageSpec> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

/// Post-order of an arbitrary edge list; throws ErrorKind::graph_invalid on a
/// cycle. Exposed separately so cycle detection can be exercised without
/// building a full graph.
std::vector<int> post_order(std::size_t nodes, const std::vector<std::pair<int, int>>& edges);

/// Same as cascade path: a chain 1 -> 2 -> ... -> K of the given stages.
DetectionGraph path_graph(const SystemSpec& spec);

struct NodePolicy {
  BeliefTable value;
  /// Per grid belief: 0 to stop (or declare negative at a terminal node),
  /// otherwise the neighbour id to route to (1 = positive at a terminal).
  std::vector<int> choice;
  double switch_point = 0.0;  // smallest grid belief where stopping is not chosen
  double threshold = 0.0;     // switch point clamped into `bounds`
  BeliefInterval bounds;      // admissible posterior after this node
  BeliefInterval incoming;    // admissible belief entering this node
};

struct GraphPolicy {
  BeliefGrid grid{};
  double lambda = 0.0;
  double miss_cost = 0.0;
  double fa_cost = 0.0;
  double prior = 0.0;
  std::vector<NodePolicy> nodes;  // index id - 1
  std::vector<int> order;         // post-order used by the solve
  double root_value = 0.0;

  const NodePolicy& node(int id) const { return nodes[static_cast<std::size_t>(id - 1)]; }
};

/// Recomputes node bounds from the prior through the DAG; a node's incoming
/// interval is the union of its parents' posterior intervals.
void assign_bounds(DetectionGraph& graph, double prior);

GraphPolicy solve_graph(const DetectionGraph& graph, double miss_cost, double fa_cost,
                        double lambda, double prior, const BeliefGrid& grid = BeliefGrid());

/// Decision at node `id` for posterior pi: 0 stop/negative, neighbour id to
/// route, 1 positive at a terminal node. Off-grid beliefs compare the stop
/// switch point, then the neighbours' continuation values at pi.
int graph_decide(const DetectionGraph& graph, const GraphPolicy& policy, int id, double pi);

/// Probability of each decision at a node as a function of the incoming belief.
struct NodeActivation {
  std::vector<int> decisions;          // 0 first, then neighbour ids (or 1)
  std::vector<BeliefTable> probability;  // aligned with decisions
  BeliefInterval admissible;           // union of the parents' posterior ranges
};

std::vector<NodeActivation> graph_activation_probabilities(const DetectionGraph& graph,
                                                           const GraphPolicy& policy,
                                                           const BeliefGrid& grid);

}  // namespace guided
