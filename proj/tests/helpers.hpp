#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "abc/gossip.hpp"
#include "abc/graph.hpp"
#include "abc/linalg.hpp"
#include "abc/rng.hpp"

namespace testing {

inline abc::Matrix random_matrix(abc::SplitMix64& rng, int r, int c) {
  abc::Matrix a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = rng.normal();
  return a;
}

inline abc::Matrix random_symmetric(abc::SplitMix64& rng, int n) {
  abc::Matrix a = random_matrix(rng, n, n);
  return 0.5 * (a + a.transpose());
}

// Connected Erdos-Renyi draw with a random edge probability in [0.2, 0.8].
inline abc::Graph random_connected(abc::SplitMix64& rng, int m) {
  const double p = 0.2 + 0.6 * rng.uniform();
  return abc::connected_erdos_renyi(m, p, rng.next()).graph;
}

// Union-find connectivity, independent of the library's search.
inline bool union_find_connected(const abc::Graph& g) {
  std::vector<int> parent(g.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [i, j] : g.edges()) parent[find(i)] = find(j);
  int roots = 0;
  for (int i = 0; i < g.size(); ++i) roots += find(i) == i;
  return roots == 1;
}

inline double max_abs(const abc::Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace testing
