#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"
#include "text.hpp"

namespace mmcoal {

struct CoalescentEvent {
  double time;
  int blocks_before;
  int merger_size;
  int blocks_after;
  int node;  // id of the merged block
};

/// Coalescent tree built bottom-up. Nodes 0..n-1 are the sampled leaves; every
/// merger creates one internal node.
class Genealogy {
 public:
  explicit Genealogy(int sample_size) : n_(sample_size), active_(sample_size) {
    if (sample_size < 1) throw DomainError("sample size must be positive");
    nodes_.resize(static_cast<std::size_t>(sample_size));
    for (int i = 0; i < sample_size; ++i) nodes_[static_cast<std::size_t>(i)].min_leaf = i;
  }

  int sample_size() const noexcept { return n_; }
  int block_count() const noexcept { return active_; }
  bool complete() const noexcept { return active_ == 1; }
  const std::vector<CoalescentEvent>& events() const noexcept { return events_; }
  int node_count() const noexcept { return static_cast<int>(nodes_.size()); }
  int root() const {
    if (!complete()) throw StateError("genealogy has not reached a single block");
    return node_count() - 1 >= n_ ? node_count() - 1 : 0;
  }

  double node_time(int v) const { return node(v).time; }
  int node_parent(int v) const { return node(v).parent; }
  const std::vector<int>& node_children(int v) const { return node(v).children; }
  /// Smallest leaf below v.
  int node_min_leaf(int v) const { return node(v).min_leaf; }

  /// Merges the blocks whose current nodes are given; returns the new node.
  int merge(double time, const std::vector<int>& children) {
    if (children.size() < 2 || static_cast<int>(children.size()) > active_) {
      throw StateError("invalid merger size");
    }
    if (!events_.empty() && time < events_.back().time) {
      throw StateError("merger times must be nondecreasing");
    }
    const int id = node_count();
    Node nd;
    nd.time = time;
    nd.children = children;
    nd.min_leaf = n_;
    for (int c : children) {
      Node& ch = node_mut(c);
      if (ch.parent != -1) throw StateError("block merged twice");
      if (ch.time > time) throw StateError("child younger than parent");
      ch.parent = id;
      nd.min_leaf = std::min(nd.min_leaf, ch.min_leaf);
    }
    std::sort(nd.children.begin(), nd.children.end(),
              [this](int a, int b) { return node(a).min_leaf < node(b).min_leaf; });
    nodes_.push_back(std::move(nd));
    const int before = active_;
    active_ -= static_cast<int>(children.size()) - 1;
    events_.push_back(CoalescentEvent{time, before, static_cast<int>(children.size()), active_, id});
    return id;
  }

  /// Length of the branch above v (0 for the root or unmerged blocks).
  double branch_length(int v) const {
    const Node& nd = node(v);
    return nd.parent < 0 ? 0.0 : node(nd.parent).time - nd.time;
  }

  double total_branch_length() const {
    CompensatedSum s;
    for (int v = 0; v < node_count(); ++v) s += branch_length(v);
    return s.value();
  }

  double tmrca() const {
    if (!complete()) throw StateError("genealogy has not reached a single block");
    return events_.empty() ? 0.0 : events_.back().time;
  }

  /// Mutation counts per node (the branch above it); empty unless set.
  const std::vector<std::int64_t>& mutations() const noexcept { return mutations_; }
  void set_mutations(std::vector<std::int64_t> counts) {
    if (counts.size() != nodes_.size()) throw DomainError("one mutation count per node");
    mutations_ = std::move(counts);
  }
  std::int64_t total_mutations() const noexcept {
    std::int64_t s = 0;
    for (auto m : mutations_) s += m;
    return s;
  }

  /// Copy with every time multiplied by factor (e.g. generations to coalescent units).
  Genealogy rescaled(double factor) const {
    Genealogy g = *this;
    for (auto& nd : g.nodes_) nd.time *= factor;
    for (auto& ev : g.events_) ev.time *= factor;
    return g;
  }

 private:
  struct Node {
    double time = 0.0;
    int parent = -1;
    int min_leaf = 0;
    std::vector<int> children;
  };
  const Node& node(int v) const {
    if (v < 0 || v >= node_count()) throw DomainError("node id out of range");
    return nodes_[static_cast<std::size_t>(v)];
  }
  Node& node_mut(int v) {
    if (v < 0 || v >= node_count()) throw DomainError("node id out of range");
    return nodes_[static_cast<std::size_t>(v)];
  }

  int n_;
  int active_;
  std::vector<Node> nodes_;
  std::vector<CoalescentEvent> events_;
  std::vector<std::int64_t> mutations_;
};

/// Newick string with leaves labelled 1..n, children ordered by smallest leaf,
/// shortest round-trip branch lengths. Polytomies are written as is.
inline std::string export_newick(const Genealogy& g) {
  if (!g.complete()) throw StateError("cannot export an incomplete genealogy");
  std::string out;
  auto rec = [&](auto&& self, int v) -> void {
    const auto& ch = g.node_children(v);
    if (ch.empty()) {
      out += std::to_string(v + 1);
    } else {
      out += '(';
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (i) out += ',';
        self(self, ch[i]);
        out += ':';
        out += format_shortest(g.branch_length(ch[i]));
      }
      out += ')';
    }
  };
  rec(rec, g.root());
  out += ';';
  return out;
}

}  // namespace mmcoal
