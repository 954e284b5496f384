#include "segd/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "segd/error.hpp"

namespace segd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kInfDist = std::numeric_limits<int>::max();
}  // namespace

FlowGraph::FlowGraph(int num_nodes, std::size_t expected_edges) {
  if (num_nodes < 0) throw InvalidArgument("negative node count");
  nodes_.resize(num_nodes);
  arcs_.reserve(2 * expected_edges);
}

void FlowGraph::add_terminal(int v, double cap_source, double cap_sink) {
  if (v < 0 || v >= num_nodes()) throw InvalidArgument("terminal edge node out of range");
  if (!(cap_source >= 0) || !(cap_sink >= 0)) throw InvalidArgument("capacities must be non-negative");
  if (solved_) throw InvalidArgument("graph already solved");
  double cur = nodes_[v].tr_cap;
  double src = cap_source + std::max(cur, 0.0);
  double snk = cap_sink + std::max(-cur, 0.0);
  if (std::isinf(src) && std::isinf(snk)) throw InvalidArgument("node tied to both terminals with infinite capacity");
  // Flow that goes straight source -> v -> sink is committed immediately.
  double direct = std::min(src, snk);
  flow_ += direct;
  nodes_[v].tr_cap = std::isinf(src) ? kInf : std::isinf(snk) ? -kInf : src - snk;
}

void FlowGraph::add_edge(int a, int b, double cap_ab, double cap_ba) {
  if (a < 0 || b < 0 || a >= num_nodes() || b >= num_nodes()) throw InvalidArgument("edge node out of range");
  if (a == b) throw InvalidArgument("self loops are not allowed");
  if (!(cap_ab >= 0) || !(cap_ba >= 0)) throw InvalidArgument("capacities must be non-negative");
  if (solved_) throw InvalidArgument("graph already solved");
  int id = static_cast<int>(arcs_.size());
  arcs_.push_back({b, nodes_[a].first, cap_ab});
  arcs_.push_back({a, nodes_[b].first, cap_ba});
  nodes_[a].first = id;
  nodes_[b].first = id + 1;
}

void FlowGraph::activate(int v) {
  if (!nodes_[v].active) {
    nodes_[v].active = true;
    active_.push_back(v);
  }
}

void FlowGraph::augment(int middle) {
  // middle runs from a source-tree node to a sink-tree node.
  double bottleneck = arcs_[middle].r_cap;
  int i = arcs_[sister(middle)].head;
  while (nodes_[i].parent != kTerminal) {
    int a = nodes_[i].parent;
    bottleneck = std::min(bottleneck, arcs_[sister(a)].r_cap);
    i = arcs_[a].head;
  }
  bottleneck = std::min(bottleneck, nodes_[i].tr_cap);
  i = arcs_[middle].head;
  while (nodes_[i].parent != kTerminal) {
    int a = nodes_[i].parent;
    bottleneck = std::min(bottleneck, arcs_[a].r_cap);
    i = arcs_[a].head;
  }
  bottleneck = std::min(bottleneck, -nodes_[i].tr_cap);
  if (std::isinf(bottleneck)) throw InvalidArgument("infinite capacity source-sink path");

  arcs_[sister(middle)].r_cap += bottleneck;
  arcs_[middle].r_cap -= bottleneck;
  auto orphan = [&](int v) {
    nodes_[v].parent = kOrphan;
    orphans_.push_back(v);
  };
  i = arcs_[sister(middle)].head;
  while (nodes_[i].parent != kTerminal) {
    int a = nodes_[i].parent;
    arcs_[a].r_cap += bottleneck;
    arcs_[sister(a)].r_cap -= bottleneck;
    int up = arcs_[a].head;
    if (arcs_[sister(a)].r_cap == 0) orphan(i);
    i = up;
  }
  nodes_[i].tr_cap -= bottleneck;
  if (nodes_[i].tr_cap == 0) orphan(i);
  i = arcs_[middle].head;
  while (nodes_[i].parent != kTerminal) {
    int a = nodes_[i].parent;
    arcs_[sister(a)].r_cap += bottleneck;
    arcs_[a].r_cap -= bottleneck;
    int up = arcs_[a].head;
    if (arcs_[a].r_cap == 0) orphan(i);
    i = up;
  }
  nodes_[i].tr_cap += bottleneck;
  if (nodes_[i].tr_cap == 0) orphan(i);
  flow_ += bottleneck;
}

void FlowGraph::adopt(int v) {
  Node& n = nodes_[v];
  const std::uint8_t tree = n.tree;
  int best_arc = kNone;
  int best_dist = kInfDist;
  for (int a = n.first; a != kNone; a = arcs_[a].next) {
    double cap = tree == kSource ? arcs_[sister(a)].r_cap : arcs_[a].r_cap;
    if (cap <= 0) continue;
    int j = arcs_[a].head;
    if (nodes_[j].tree != tree || nodes_[j].parent == kNone) continue;
    // Follow j up to its root; reject it if the chain passes through an orphan.
    int d = 0;
    int k = j;
    while (true) {
      if (nodes_[k].ts == time_) {
        d += nodes_[k].dist;
        break;
      }
      int p = nodes_[k].parent;
      ++d;
      if (p == kTerminal) {
        nodes_[k].ts = time_;
        nodes_[k].dist = 1;
        break;
      }
      if (p == kOrphan) {
        d = kInfDist;
        break;
      }
      k = arcs_[p].head;
    }
    if (d == kInfDist) continue;
    if (d < best_dist) {
      best_dist = d;
      best_arc = a;
    }
    for (k = j; nodes_[k].ts != time_; k = arcs_[nodes_[k].parent].head) {
      nodes_[k].ts = time_;
      nodes_[k].dist = d--;
    }
  }
  if (best_arc != kNone) {
    n.parent = best_arc;
    n.ts = time_;
    n.dist = best_dist + 1;
    return;
  }
  for (int a = n.first; a != kNone; a = arcs_[a].next) {
    int j = arcs_[a].head;
    Node& m = nodes_[j];
    if (m.tree != tree || m.parent == kNone) continue;
    double cap = tree == kSource ? arcs_[sister(a)].r_cap : arcs_[a].r_cap;
    if (cap > 0) activate(j);
    if (m.parent != kTerminal && m.parent != kOrphan && arcs_[m.parent].head == v) {
      m.parent = kOrphan;
      orphans_.push_back(j);
    }
  }
  n.tree = kFree;
  n.parent = kNone;
}

double FlowGraph::max_flow() {
  if (solved_) return flow_;
  solved_ = true;
  for (int v = 0; v < num_nodes(); ++v) {
    Node& n = nodes_[v];
    if (n.tr_cap != 0) {
      n.tree = n.tr_cap > 0 ? kSource : kSink;
      n.parent = kTerminal;
      n.ts = 0;
      n.dist = 1;
      activate(v);
    }
  }
  while (active_head_ < active_.size()) {
    int i = active_[active_head_];
    Node& n = nodes_[i];
    if (n.parent == kNone) {
      n.active = false;
      ++active_head_;
      continue;
    }
    int middle = kNone;
    for (int a = n.first; a != kNone; a = arcs_[a].next) {
      int j = arcs_[a].head;
      Node& m = nodes_[j];
      if (n.tree == kSource) {
        if (arcs_[a].r_cap <= 0) continue;
        if (m.tree == kFree) {
          m.tree = kSource;
          m.parent = sister(a);
          m.ts = n.ts;
          m.dist = n.dist + 1;
          activate(j);
        } else if (m.tree == kSink) {
          middle = a;
          break;
        }
      } else {
        if (arcs_[sister(a)].r_cap <= 0) continue;
        if (m.tree == kFree) {
          m.tree = kSink;
          m.parent = sister(a);
          m.ts = n.ts;
          m.dist = n.dist + 1;
          activate(j);
        } else if (m.tree == kSource) {
          middle = sister(a);
          break;
        }
      }
    }
    if (middle == kNone) {
      n.active = false;
      ++active_head_;
      continue;
    }
    ++time_;
    augment(middle);
    for (std::size_t k = 0; k < orphans_.size(); ++k) adopt(orphans_[k]);
    orphans_.clear();
  }
  active_.clear();
  active_head_ = 0;
  return flow_;
}

}  // namespace segd
