#include "abc/graph.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "abc/error.hpp"
#include "abc/rng.hpp"

namespace abc {

Graph::Graph(int m) : m_(m), adj_(m > 0 ? m : 0) {
  if (m < 1) throw InvalidArgument("graph needs at least one node");
}

Graph::Graph(int m, const std::vector<Edge>& edges) : Graph(m) {
  for (auto [i, j] : edges) add_edge(i, j);
}

void Graph::add_edge(int i, int j) {
  if (i < 0 || j < 0 || i >= m_ || j >= m_)
    throw InvalidArgument("edge endpoint out of range: " + std::to_string(i) + " " + std::to_string(j));
  if (i == j) throw InvalidArgument("self-loop at node " + std::to_string(i));
  Edge e = i < j ? Edge{i, j} : Edge{j, i};
  if (!edges_.insert(e).second)
    throw InvalidArgument("duplicate edge " + std::to_string(e.first) + " " + std::to_string(e.second));
  adj_[i].push_back(j);
  adj_[j].push_back(i);
}

bool Graph::has_edge(int i, int j) const {
  return edges_.count(i < j ? Edge{i, j} : Edge{j, i}) > 0;
}

Topology parse_topology(std::string_view name) {
  if (name == "path") return Topology::path;
  if (name == "ring") return Topology::ring;
  if (name == "complete") return Topology::complete;
  if (name == "star") return Topology::star;
  throw InvalidArgument("unknown topology: " + std::string(name));
}

Graph erdos_renyi(int m, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("edge probability must lie in [0, 1]");
  Graph g(m);
  SplitMix64 rng(seed);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (rng.uniform() < p) g.add_edge(i, j);
  return g;
}

bool is_connected(const Graph& g) {
  int m = g.size();
  std::vector<char> seen(m, 0);
  std::vector<int> frontier{0};
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.back();
    frontier.pop_back();
    for (int v : g.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push_back(v);
      }
    }
  }
  return reached == m;
}

Graph named_graph(Topology kind, int m) {
  int minimum = kind == Topology::ring ? 3 : 2;
  if (m < minimum) throw InvalidArgument("topology needs at least " + std::to_string(minimum) + " nodes");
  Graph g(m);
  switch (kind) {
    case Topology::path:
      for (int i = 0; i + 1 < m; ++i) g.add_edge(i, i + 1);
      break;
    case Topology::ring:
      for (int i = 0; i < m; ++i) g.add_edge(i, (i + 1) % m);
      break;
    case Topology::complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) g.add_edge(i, j);
      break;
    case Topology::star:
      for (int i = 1; i < m; ++i) g.add_edge(0, i);
      break;
  }
  return g;
}

ConnectedDraw connected_erdos_renyi(int m, double p, std::uint64_t seed, int max_retries) {
  for (int r = 0; r <= max_retries; ++r) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(r);
    Graph g = erdos_renyi(m, p, s);
    if (is_connected(g)) return {std::move(g), s, r};
  }
  throw InvalidArgument("no connected Erdos-Renyi draw within " + std::to_string(max_retries) + " retries");
}

void write_edge_list(std::ostream& os, const Graph& g) {
  os << g.size() << '\n';
  for (auto [i, j] : g.edges()) os << i << ' ' << j << '\n';
}

Graph read_edge_list(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      auto pos = line.find_first_not_of(" \t\r");
      if (pos != std::string::npos && line[pos] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw InvalidArgument("edge list: missing node-count header");
  int m = 0;
  {
    std::istringstream ss(line);
    std::string extra;
    if (!(ss >> m) || (ss >> extra)) throw InvalidArgument("edge list: bad header line: " + line);
  }
  Graph g(m);
  while (next_line()) {
    std::istringstream ss(line);
    int i = 0, j = 0;
    std::string extra;
    if (!(ss >> i >> j) || (ss >> extra)) throw InvalidArgument("edge list: bad edge line: " + line);
    g.add_edge(i, j);
  }
  return g;
}

}  // namespace abc
