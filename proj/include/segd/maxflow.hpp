#pragma once

#include <cstdint>
#include <vector>

namespace segd {

// s-t max-flow / min-cut by the Boykov-Kolmogorov search-tree algorithm.
// Capacities are doubles; +infinity is allowed for hard constraints as long as
// every s-t path has a finite bottleneck.
class FlowGraph {
 public:
  explicit FlowGraph(int num_nodes, std::size_t expected_edges = 0);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // Adds capacity from the source to v and from v to the sink. Calls accumulate.
  void add_terminal(int v, double cap_source, double cap_sink);
  // Directed pair a->b with cap_ab and b->a with cap_ba.
  void add_edge(int a, int b, double cap_ab, double cap_ba);

  double max_flow();

  // After max_flow(): true when v is reachable from the source in the residual
  // graph, which gives the min cut with the smallest source side.
  bool is_source_side(int v) const { return nodes_[v].tree == kSource; }

 private:
  static constexpr std::uint8_t kFree = 0, kSource = 1, kSink = 2;
  static constexpr int kNone = -1, kTerminal = -2, kOrphan = -3;

  struct Node {
    int first = kNone;   // first outgoing arc
    int parent = kNone;  // arc towards the parent, or kTerminal / kOrphan / kNone
    int ts = 0;
    int dist = 0;
    double tr_cap = 0.0;  // > 0: residual from source, < 0: residual to sink
    std::uint8_t tree = kFree;
    bool active = false;
  };
  struct Arc {
    int head = 0;
    int next = kNone;
    double r_cap = 0.0;
  };

  static int sister(int a) { return a ^ 1; }
  void activate(int v);
  void augment(int middle);
  void adopt(int v);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<int> active_;  // FIFO, consumed from active_head_
  std::size_t active_head_ = 0;
  std::vector<int> orphans_;
  double flow_ = 0.0;
  int time_ = 0;
  bool solved_ = false;
};

}  // namespace segd
