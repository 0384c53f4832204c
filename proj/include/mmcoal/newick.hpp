#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "text.hpp"

namespace mmcoal {

/// Rooted tree read from Newick text. Heights are measured from the deepest leaf
/// upward, so for ultrametric trees they equal the event times.
struct NewickTree {
  struct Node {
    std::string label;
    double length = 0.0;
    int parent = -1;
    std::vector<int> children;
  };
  std::vector<Node> nodes;
  int root = -1;

  std::vector<double> depths() const {
    std::vector<double> d(nodes.size(), 0.0);
    auto rec = [&](auto&& self, int v, double acc) -> void {
      d[static_cast<std::size_t>(v)] = acc;
      for (int c : nodes[static_cast<std::size_t>(v)].children) {
        self(self, c, acc + nodes[static_cast<std::size_t>(c)].length);
      }
    };
    if (root >= 0) rec(rec, root, 0.0);
    return d;
  }

  /// Heights of internal nodes above the leaves, sorted ascending.
  std::vector<double> internal_heights() const {
    const auto d = depths();
    double deepest = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].children.empty()) deepest = std::max(deepest, d[i]);
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].children.empty()) out.push_back(deepest - d[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(
        nodes.begin(), nodes.end(), [](const Node& n) { return n.children.empty(); }));
  }
};

inline NewickTree parse_newick(std::string_view s) {
  NewickTree t;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) { throw ParseError(pos + 1, what); };
  auto skip_ws = [&] {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\n' || s[pos] == '\t' || s[pos] == '\r')) ++pos;
  };
  auto rec = [&](auto&& self, int parent) -> int {
    skip_ws();
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    t.nodes[static_cast<std::size_t>(id)].parent = parent;
    if (pos < s.size() && s[pos] == '(') {
      ++pos;
      for (;;) {
        const int c = self(self, id);
        t.nodes[static_cast<std::size_t>(id)].children.push_back(c);
        skip_ws();
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < s.size() && s[pos] == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    skip_ws();
    const std::size_t start = pos;
    while (pos < s.size() && std::string_view("(),:;").find(s[pos]) == std::string_view::npos) ++pos;
    t.nodes[static_cast<std::size_t>(id)].label = std::string(s.substr(start, pos - start));
    skip_ws();
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      skip_ws();
      const std::size_t len = scan_number(s.substr(pos));
      auto v = len ? parse_real(s.substr(pos, len)) : std::nullopt;
      if (!v) fail("malformed branch length");
      t.nodes[static_cast<std::size_t>(id)].length = *v;
      pos += len;
    }
    return id;
  };
  t.root = rec(rec, -1);
  skip_ws();
  if (pos >= s.size() || s[pos] != ';') fail("expected ';'");
  ++pos;
  skip_ws();
  if (pos != s.size()) fail("trailing input after ';'");
  return t;
}

}  // namespace mmcoal
