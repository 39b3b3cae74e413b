#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hpack/bigraph.hpp"
#include "hpack/hypercore.hpp"

namespace hpack {

/// K_n^{(k)}.
KGraph gen_complete_kgraph(std::size_t n, int k);

/// Each k-set independently with probability d. No certification.
KGraph gen_binomial_kgraph(std::size_t n, int k, double d, std::mt19937_64& rng);

/// Regenerates until is_typical(eps,t,d) passes; throws RoundFailure after
/// `retries` attempts.
KGraph gen_binomial_kgraph_certified(std::size_t n, int k, double d, double eps, int t,
                                     std::mt19937_64& rng, int retries = 20);

/// Disjoint tight cycles on consecutive vertex runs 0..n-1.
KGraph gen_tight_cycle_factor(std::size_t n, int k, const std::vector<std::size_t>& lengths,
                              std::size_t floor = 0);  // 0 means k+1

struct KTree {
  KGraph graph;
  /// parent[v] = edge index v was attached to, -1 for the first k vertices.
  std::vector<long> parent;
};

/// Grown from one edge, each new vertex attached to a (k-1)-subset of an
/// existing edge, uniform over the choices keeping degrees <= max_degree.
KTree gen_ktree(std::size_t n_edges, int k, std::size_t max_degree, std::mt19937_64& rng);

/// 2-faces of the level-fold 1->4 subdivision of the octahedron (or
/// icosahedron). Throws if the Euler audit fails.
KGraph gen_sphere_triangulation(int level, bool icosahedron = false);

/// A triangulation of S^2 on exactly n >= 6 vertices: the octahedron grown by
/// random edge splits, always splitting an edge between low-degree vertices so
/// the face degree stays <= max_face_degree where possible.
KGraph gen_sphere_triangulation_order(std::size_t n, std::mt19937_64& rng,
                                      std::size_t max_face_degree = 6);

/// V - E + F over the triangle faces of g.
long euler_characteristic(const KGraph& g);

struct MultipartiteHost {
  KGraph graph;
  std::vector<int> parts;  // part of each vertex
  TypicalityReport typicality;
};

/// r parts of size n; crossing k-sets of each reduced edge with probability d.
/// When certify is set, rerolls until reduced typicality at (eps,t,d) holds.
MultipartiteHost gen_multipartite_host(std::size_t n, int k, int r, const KGraph& reduced, double d,
                                       std::mt19937_64& rng, bool certify = true,
                                       double eps = 0.15, int t = 2, int retries = 20);

/// D-regular bigraph on n+n vertices: circulant start, then random double-edge
/// swaps.
Bigraph gen_random_regular_bigraph(std::size_t n, std::size_t D, std::mt19937_64& rng);

/// Linear D-regular 3-partite 3-graph on 3*m vertices (edges x, x+s, x+3s mod
/// m with step residues distinct mod m/2). Needs m even and D <= m/2.
KGraph gen_linear_regular_3graph(std::size_t m, std::size_t D, std::mt19937_64& rng);

}  // namespace hpack
