#pragma once

// Quantifier-literal oracles shared by the unit tests and the acceptance
// binary. Each one is written from the definition, by enumeration, and never
// calls the routine it checks.

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "hpack/bigraph.hpp"
#include "hpack/candidacy.hpp"
#include "hpack/instances.hpp"
#include "hpack/matcher.hpp"
#include "hpack/patterns.hpp"

namespace oracles {

using namespace hpack;

inline std::vector<std::vector<int>> subsets(const std::vector<int>& s) {
  std::vector<std::vector<int>> out;
  for (std::uint32_t m = 0; m < (1u << s.size()); ++m) {
    std::vector<int> t;
    for (std::size_t a = 0; a < s.size(); ++a)
      if (m >> a & 1) t.push_back(s[a]);
    out.push_back(t);
  }
  return out;
}

// H_J built outright: copies of J-cluster vertices get ids n + x and no
// cluster; every condition is checked over every edge and every l.
struct Literal {
  std::vector<VSet> edges;
  std::size_t n;
};

inline Literal materialize(const KGraph& h, const std::vector<int>& parts, const std::vector<int>& J, Side z) {
  Literal L{{}, h.n()};
  for (const auto& e : h.edges()) {
    if (z == Side::A) {
      L.edges.push_back(e);
      continue;
    }
    for (Vertex y : e)
      if (std::find(J.begin(), J.end(), parts[y]) != J.end()) {
        VSet f;
        for (Vertex w : e) f.push_back(w == y ? static_cast<Vertex>(h.n() + y) : w);
        L.edges.push_back(f);
      }
  }
  return L;
}

inline std::pair<PatternVector, PatternVector> literal_patterns(const KGraph& h, const std::vector<int>& parts,
                                                                int r, const std::vector<int>& I,
                                                                const std::vector<Vertex>& xs,
                                                                const std::vector<int>& J, Side z) {
  auto L = materialize(h, parts, J, z);
  std::set<Vertex> real, primed;
  for (std::size_t a = 0; a < I.size(); ++a) {
    bool copied = std::find(J.begin(), J.end(), I[a]) != J.end();
    if (copied) primed.insert(static_cast<Vertex>(h.n() + xs[a]));
    else {
      real.insert(xs[a]);
      primed.insert(xs[a]);
    }
  }
  PatternVector p(r, 0), pp(r, 0);
  for (int l = 0; l < r; ++l)
    for (const auto& f : L.edges) {
      std::vector<Vertex> at, outside;
      for (Vertex v : f) {
        bool original = v < L.n;
        if (original && parts[v] == l) at.push_back(v);
        if (!original || parts[v] > l) outside.push_back(v);
      }
      bool inside = std::all_of(outside.begin(), outside.end(), [&](Vertex v) { return primed.count(v) > 0; });
      bool c1 = std::any_of(at.begin(), at.end(), [&](Vertex v) { return !real.count(v); });
      if (c1 && inside && outside.size() >= 2) ++p[l];
      bool c2 = at.size() == 1 && real.count(at[0]);
      if (c2 && inside && outside.size() == 1) ++pp[l];
    }
  return {p, pp};
}

inline bool literal_is_edge(const KGraph& h, const std::vector<int>& parts, const std::vector<int>& I,
                            const std::vector<Vertex>& xs, const std::vector<int>& J, Side z) {
  auto L = materialize(h, parts, J, z);
  VSet primed;
  for (std::size_t a = 0; a < I.size(); ++a) {
    bool copied = std::find(J.begin(), J.end(), I[a]) != J.end();
    primed.push_back(copied ? static_cast<Vertex>(h.n() + xs[a]) : xs[a]);
  }
  primed = sorted_set(primed);
  for (auto f : L.edges)
    if (sorted_set(f) == primed) return true;
  return false;
}

// Every (I, J, tuple) of an edge: I runs over non-empty cluster subsets of the edge.
template <class F>
void for_each_edge_tuple(const BlowupInstance& b, F f) {
  for (std::uint32_t g = 0; g < b.guests.size(); ++g)
    for (const auto& e : b.guests[g].edges()) {
      std::vector<int> cl;
      for (Vertex v : e) cl.push_back(b.guest_parts[g][v]);
      std::sort(cl.begin(), cl.end());
      for (const auto& I : subsets(cl)) {
        if (I.empty()) continue;
        std::vector<Vertex> xs;
        for (int i : I)
          for (Vertex v : e)
            if (b.guest_parts[g][v] == i) xs.push_back(v);
        for (const auto& J : subsets(I)) f(g, I, xs, J);
      }
    }
}

// E_H(P, I, J) by scanning every edge of every guest and keeping the traces
// on X_I whose literal patterns on both sides equal P.
inline std::set<GuestTuple> literal_pattern_class(const std::vector<KGraph>& guests,
                                                  const std::vector<std::vector<int>>& parts, int r,
                                                  const PatternQuad& P, const std::vector<int>& I,
                                                  const std::vector<int>& J) {
  std::set<GuestTuple> out;
  for (std::uint32_t g = 0; g < guests.size(); ++g)
    for (const auto& e : guests[g].edges()) {
      std::vector<Vertex> xs;
      for (int i : I)
        for (Vertex v : e)
          if (parts[g][v] == i) xs.push_back(v);
      if (xs.size() != I.size()) continue;
      auto [pa, ppa] = literal_patterns(guests[g], parts[g], r, I, xs, J, Side::A);
      auto [pb, ppb] = literal_patterns(guests[g], parts[g], r, I, xs, J, Side::B);
      if (pa == P.pA && ppa == P.ppA && pb == P.pB && ppb == P.ppB) out.insert({g, xs});
    }
  return out;
}

// Membership written from the condition: every constraint edge that meets the
// tuple and whose other vertices are all mapped into embedded clusters outside
// I must land on a host edge once the tuple goes to vs.
inline bool oracle_member(const PackingState& s, Side z, std::size_t h, const std::vector<int>& I,
                          const std::vector<Vertex>& xs, const VSet& vs) {
  const auto& cg = s.cons[h];
  for (std::uint32_t id = 0; id < cg.h.num_edges(); ++id) {
    const auto& e = cg.h.edge(id);
    std::set<Vertex> img;
    bool meets = false, skip = false;
    for (Vertex y : e) {
      std::size_t a = 0;
      while (a < xs.size() && xs[a] != y) ++a;
      if (a < xs.size()) {
        meets = true;
        bool visible = z == Side::A || id < cg.real_edges ||
                       std::count(cg.b_owners[id - cg.real_edges].begin(), cg.b_owners[id - cg.real_edges].end(), y);
        if (!visible) skip = true;
        img.insert(vs[a]);
      } else {
        int c = s.guest_parts[h][y];
        bool outside = std::find(I.begin(), I.end(), c) == I.end();
        if (!outside || !s.embedded[c] || s.phi_plus[h][y] < 0) skip = true;
        else img.insert(static_cast<Vertex>(s.phi_plus[h][y]));
      }
    }
    if (!meets || skip) continue;
    if (!s.host(z).has_edge(VSet(img.begin(), img.end()))) return false;
  }
  return true;
}

// Every (guest tuple, host tuple) over clusters I.
template <class F>
void for_each_pair(const PackingState& s, std::size_t h, const std::vector<int>& I, F f) {
  std::vector<std::vector<Vertex>> xs{{}};
  std::vector<VSet> vs{{}};
  for (int i : I) {
    std::vector<std::vector<Vertex>> nx;
    std::vector<VSet> nv;
    for (auto& a : xs)
      for (Vertex x : s.guest_cluster(h, i)) {
        auto b = a;
        b.push_back(x);
        nx.push_back(b);
      }
    for (auto& a : vs)
      for (Vertex v : s.host_clusters[i]) {
        auto b = a;
        b.push_back(v);
        nv.push_back(b);
      }
    xs = nx;
    vs = nv;
  }
  for (const auto& x : xs)
    for (const auto& v : vs) f(x, v);
}

// Index sets of the candidacy graphs: singletons and pairs of unembedded
// clusters on side A, every singleton on side B.
inline std::vector<std::vector<int>> index_sets(const PackingState& s, Side z) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < s.r; ++i) {
    if (z == Side::A && s.embedded[i]) continue;
    out.push_back({i});
    if (z == Side::B) continue;
    for (int j = i + 1; j < s.r; ++j)
      if (!s.embedded[j]) out.push_back({i, j});
  }
  return out;
}

struct LabelTally {
  std::size_t edges = 0, delta = 0, delta_c = 0, width = 0, sum_sizes = 0;
};

// Labels of the cluster-i candidacy edge (x, v), membership taken from
// oracle_member: for each guest edge at x whose other vertices are all
// packed, v plus their images. Tallies the max multiplicity of a label and of
// an unordered label pair.
inline LabelTally literal_labels(const PackingState& s, int i) {
  LabelTally t;
  std::map<VSet, std::size_t> per;
  std::map<std::pair<VSet, VSet>, std::size_t> pairs;
  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    for (Vertex x : s.guest_cluster(h, i))
      for (Vertex v : s.host_clusters[i]) {
        if (!oracle_member(s, Side::A, h, {i}, {x}, {v})) continue;
        ++t.edges;
        std::set<VSet> labels;
        for (auto id : s.guests[h].incident(x)) {
          VSet lab{v};
          bool all = true;
          for (Vertex y : s.guests[h].edge(id))
            if (y != x) {
              all &= s.phi[h][y] >= 0;
              if (all) lab.push_back(static_cast<Vertex>(s.phi[h][y]));
            }
          if (all) labels.insert(sorted_set(lab));
        }
        for (const auto& a : labels) {
          ++per[a];
          for (const auto& b : labels)
            if (a < b) ++pairs[{a, b}];
        }
        t.sum_sizes += labels.size();
        t.width = std::max(t.width, labels.size());
      }
  }
  for (const auto& [k, m] : per) t.delta = std::max(t.delta, m);
  for (const auto& [k, m] : pairs) t.delta_c = std::max(t.delta_c, m);
  return t;
}

// Oracle: quadruple loop over a1<a2, b1<b2 with all four edges present.
inline std::uint64_t c4_literal(const Bigraph& g) {
  std::uint64_t c = 0;
  for (std::uint32_t a1 = 0; a1 < g.a(); ++a1)
    for (std::uint32_t a2 = a1 + 1; a2 < g.a(); ++a2)
      for (std::uint32_t b1 = 0; b1 < g.b(); ++b1)
        for (std::uint32_t b2 = b1 + 1; b2 < g.b(); ++b2)
          c += g.has_edge(a1, b1) && g.has_edge(a1, b2) && g.has_edge(a2, b1) && g.has_edge(a2, b2);
  return c;
}

// Every subset of edges, kept when it is a matching that no edge extends.
inline std::set<std::vector<std::uint32_t>> subset_oracle(const MatchHypergraph& h) {
  std::set<std::vector<std::uint32_t>> out;
  std::size_t m = h.edges.size();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> hit(h.num_vertices, 0);
    bool ok = true;
    std::vector<std::uint32_t> ids;
    for (std::uint32_t i = 0; i < m && ok; ++i)
      if (mask >> i & 1) {
        ids.push_back(i);
        for (auto v : h.edges[i]) ok &= hit[v]++ == 0;
      }
    if (!ok) continue;
    bool maximal = true;
    for (std::uint32_t i = 0; i < m && maximal; ++i) {
      if (mask >> i & 1) continue;
      bool free = true;
      for (auto v : h.edges[i]) free &= hit[v] == 0;
      if (free) maximal = false;
    }
    if (maximal) out.insert(ids);
  }
  return out;
}

}  // namespace oracles
