#pragma once

// Small random blow-up instances and partial packings shared by the tests.

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "hpack/candidacy.hpp"
#include "hpack/generators.hpp"
#include "hpack/instances.hpp"

namespace fixtures {

using namespace hpack;

// Random k-graph on r clusters with m edges.
inline KGraph random_reduced(int r, int k, int m, std::mt19937_64& rng) {
  KGraph R(k, r);
  VSet all(r);
  std::iota(all.begin(), all.end(), 0);
  int guard = 0;
  while (static_cast<int>(R.num_edges()) < m && guard++ < 1000) {
    std::shuffle(all.begin(), all.end(), rng);
    R.add_edge(VSet(all.begin(), all.begin() + k));
  }
  return R;
}

// Guests on r*n vertices, vertex v in cluster v/n, with a random matching of
// `per_edge` edges inside every reduced edge.
inline BlowupInstance random_blowup(std::mt19937_64& rng, int r, int k, std::size_t n, int guests,
                                    double d, int reduced_edges, std::size_t per_edge) {
  BlowupInstance b;
  b.n = n;
  b.k = k;
  b.r = r;
  b.reduced = random_reduced(r, k, reduced_edges, rng);
  auto host = gen_multipartite_host(n, k, r, b.reduced, d, rng, false);
  b.host = host.graph;
  b.host_parts = host.parts;
  for (int g = 0; g < guests; ++g) {
    KGraph h(k, r * n);
    for (const auto& re : b.reduced.edges()) {
      std::vector<std::vector<Vertex>> pool;
      for (Vertex c : re) {
        std::vector<Vertex> p(n);
        std::iota(p.begin(), p.end(), static_cast<Vertex>(c * n));
        std::shuffle(p.begin(), p.end(), rng);
        pool.push_back(p);
      }
      for (std::size_t e = 0; e < std::min(per_edge, n); ++e) {
        VSet edge;
        for (auto& p : pool) edge.push_back(p[e]);
        h.add_edge(edge);
      }
    }
    b.guests.push_back(h);
    std::vector<int> parts(r * n);
    for (std::size_t v = 0; v < parts.size(); ++v) parts[v] = static_cast<int>(v / n);
    b.guest_parts.push_back(parts);
  }
  return b;
}

// Bernoulli split of the host into sides A and B.
inline std::pair<KGraph, KGraph> coin_split(const KGraph& g, double gamma, std::mt19937_64& rng) {
  KGraph a(g.k(), g.n()), bb(g.k(), g.n());
  std::bernoulli_distribution coin(gamma);
  for (const auto& e : g.edges()) (coin(rng) ? bb : a).add_edge(e);
  return {a, bb};
}

// Marks `done` as embedded with random cluster bijections as the extension
// and drops each vertex from the packing itself with probability `leftover`.
inline void random_partial(PackingState& s, const std::vector<int>& done, double leftover,
                           std::mt19937_64& rng) {
  std::bernoulli_distribution drop(leftover);
  for (int i : done) {
    s.embedded[i] = true;
    for (std::size_t h = 0; h < s.guests.size(); ++h) {
      auto xs = s.guest_cluster(h, i);
      auto vs = s.host_clusters[i];
      std::shuffle(vs.begin(), vs.end(), rng);
      for (std::size_t a = 0; a < xs.size(); ++a) {
        s.phi_plus[h][xs[a]] = vs[a];
        s.phi[h][xs[a]] = drop(rng) ? -1 : static_cast<long>(vs[a]);
      }
    }
  }
}

// A few synthetic edges per guest with random B owners, so that side B sees
// a subset of them.
inline void add_random_synthetic(PackingState& s, std::mt19937_64& rng, int per_guest) {
  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    auto& cg = s.cons[h];
    int added = 0;
    for (int tries = 0; tries < 50 * per_guest && added < per_guest; ++tries) {
      std::vector<int> cl(s.r);
      std::iota(cl.begin(), cl.end(), 0);
      std::shuffle(cl.begin(), cl.end(), rng);
      VSet e;
      for (int a = 0; a < s.k; ++a) {
        auto xs = s.guest_cluster(h, cl[a]);
        e.push_back(xs[rng() % xs.size()]);
      }
      e = sorted_set(e);
      if (cg.h.has_edge(e)) continue;
      VSet owners;
      for (Vertex x : e)
        if (rng() % 2) owners.push_back(x);
      cg.add_synthetic(e, owners);
      ++added;
    }
  }
}

}  // namespace fixtures
