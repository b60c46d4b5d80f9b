#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

namespace abc {

using Edge = std::pair<int, int>;  // stored with first < second

// Undirected simple graph on nodes 0..m-1.
class Graph {
 public:
  explicit Graph(int m);
  Graph(int m, const std::vector<Edge>& edges);

  int size() const { return m_; }
  const std::set<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  // Throws on self-loops, duplicates and out-of-range endpoints.
  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  int degree(int i) const { return static_cast<int>(adj_[i].size()); }
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }

  bool operator==(const Graph& o) const { return m_ == o.m_ && edges_ == o.edges_; }

 private:
  int m_;
  std::set<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

enum class Topology { path, ring, complete, star };

Topology parse_topology(std::string_view name);

// Each of the m(m-1)/2 pairs is included independently with probability p,
// scanned in lexicographic order (i<j) from a SplitMix64 stream seeded by `seed`.
Graph erdos_renyi(int m, double p, std::uint64_t seed);

bool is_connected(const Graph& g);

Graph named_graph(Topology kind, int m);

struct ConnectedDraw {
  Graph graph;
  std::uint64_t seed_used;
  int retries;
};

// Redraws with seed, seed+1, ... until the graph is connected.
ConnectedDraw connected_erdos_renyi(int m, double p, std::uint64_t seed, int max_retries = 10000);

// Edge-list text: first line m, then one "i j" pair per line (0-based).
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is);

}  // namespace abc
