#include "hpack/generators.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <set>

#include "hpack/errors.hpp"

namespace hpack {

KGraph gen_complete_kgraph(std::size_t n, int k) {
  if (k < 1 || n < static_cast<std::size_t>(k)) throw InputError("gen_complete_kgraph: need n >= k >= 1");
  KGraph g(k, n);
  VSet all(n);
  std::iota(all.begin(), all.end(), 0);
  for_each_subset(all, k, [&](const VSet& e) { g.add_edge(e); });
  return g;
}

KGraph gen_binomial_kgraph(std::size_t n, int k, double d, std::mt19937_64& rng) {
  if (!(d > 0 && d <= 1)) throw InputError("gen_binomial_kgraph: d must lie in (0,1]");
  if (k < 1 || n < static_cast<std::size_t>(k)) throw InputError("gen_binomial_kgraph: need n >= k >= 1");
  KGraph g(k, n);
  std::bernoulli_distribution coin(d);
  VSet all(n);
  std::iota(all.begin(), all.end(), 0);
  for_each_subset(all, k, [&](const VSet& e) {
    if (d >= 1 || coin(rng)) g.add_edge(e);
  });
  return g;
}

KGraph gen_binomial_kgraph_certified(std::size_t n, int k, double d, double eps, int t,
                                     std::mt19937_64& rng, int retries) {
  TypicalityReport last;
  for (int a = 0; a < retries; ++a) {
    KGraph g = gen_binomial_kgraph(n, k, d, rng);
    TypicalityOptions opt;
    opt.seed = rng();
    last = is_typical(g, eps, t, d, opt);
    if (last.typical) return g;
  }
  throw RoundFailure("gen_binomial_kgraph: typicality retries exhausted, worst deviation " +
                     std::to_string(last.worst_deviation));
}

KGraph gen_tight_cycle_factor(std::size_t n, int k, const std::vector<std::size_t>& lengths,
                              std::size_t floor) {
  if (floor == 0) floor = static_cast<std::size_t>(k) + 1;
  std::size_t total = 0;
  for (auto l : lengths) {
    if (l < floor) throw InputError("gen_tight_cycle_factor: cycle length below floor");
    total += l;
  }
  if (total != n) throw InputError("gen_tight_cycle_factor: lengths must sum to n");
  KGraph g(k, n);
  std::size_t start = 0;
  for (auto l : lengths) {
    for (std::size_t i = 0; i < l; ++i) {
      VSet e;
      for (int j = 0; j < k; ++j) e.push_back(static_cast<Vertex>(start + (i + j) % l));
      g.add_edge(e);
    }
    start += l;
  }
  return g;
}

KTree gen_ktree(std::size_t n_edges, int k, std::size_t max_degree, std::mt19937_64& rng) {
  if (max_degree < 2) throw InputError("gen_ktree: max_degree must be >= 2");
  if (n_edges == 0) throw InputError("gen_ktree: need at least one edge");
  std::size_t nv = n_edges + k - 1;
  std::vector<VSet> edges;
  std::vector<std::size_t> deg(nv, 0);
  KTree out;
  VSet first(k);
  std::iota(first.begin(), first.end(), 0);
  edges.push_back(first);
  for (int i = 0; i < k; ++i) {
    deg[i] = 1;
    out.parent.push_back(-1);
  }
  // choice = (edge index, omitted position)
  while (edges.size() < n_edges) {
    std::vector<std::pair<std::size_t, int>> choices;
    for (std::size_t ei = 0; ei < edges.size(); ++ei)
      for (int skip = 0; skip < k; ++skip) {
        bool ok = true;
        for (int j = 0; j < k && ok; ++j)
          if (j != skip && deg[edges[ei][j]] + 1 > max_degree) ok = false;
        if (ok) choices.emplace_back(ei, skip);
      }
    if (choices.empty()) throw RoundFailure("gen_ktree: degree ceiling blocks growth");
    std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
    auto [ei, skip] = choices[pick(rng)];
    Vertex w = static_cast<Vertex>(edges.size() + k - 1);
    VSet e;
    for (int j = 0; j < k; ++j)
      if (j != skip) {
        e.push_back(edges[ei][j]);
        ++deg[edges[ei][j]];
      }
    e.push_back(w);
    deg[w] = 1;
    out.parent.push_back(static_cast<long>(ei));
    edges.push_back(sorted_set(e));
  }
  out.graph = KGraph(k, nv, edges);
  return out;
}

namespace {

struct Mesh {
  std::size_t nv = 0;
  std::vector<std::array<Vertex, 3>> faces;
};

Mesh octahedron() {
  // 0/1 poles on z, 2..5 around the equator
  return {6, {{0, 2, 3}, {0, 3, 4}, {0, 4, 5}, {0, 5, 2}, {1, 3, 2}, {1, 4, 3}, {1, 5, 4}, {1, 2, 5}}};
}

Mesh icosahedron() {
  Mesh m;
  m.nv = 12;
  // 0 top, 1..5 upper ring, 6..10 lower ring, 11 bottom
  for (Vertex i = 0; i < 5; ++i) {
    Vertex a = 1 + i, b = 1 + (i + 1) % 5;
    Vertex c = 6 + i, d = 6 + (i + 1) % 5;
    m.faces.push_back({0, a, b});
    m.faces.push_back({a, c, b});
    m.faces.push_back({b, c, d});
    m.faces.push_back({11, d, c});
  }
  return m;
}

Mesh subdivide(const Mesh& m) {
  Mesh out;
  out.nv = m.nv;
  std::map<std::pair<Vertex, Vertex>, Vertex> mid;
  auto midpoint = [&](Vertex a, Vertex b) {
    auto key = std::minmax(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    Vertex w = static_cast<Vertex>(out.nv++);
    mid.emplace(key, w);
    return w;
  };
  for (auto [a, b, c] : m.faces) {
    Vertex ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    out.faces.push_back({a, ab, ca});
    out.faces.push_back({ab, b, bc});
    out.faces.push_back({ca, bc, c});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

KGraph mesh_graph(const Mesh& m) {
  KGraph g(3, m.nv);
  for (auto [a, b, c] : m.faces)
    if (!g.add_edge(sorted_set({a, b, c}))) throw InputError("triangulation: repeated face");
  return g;
}

}  // namespace

long euler_characteristic(const KGraph& g) {
  std::set<std::pair<Vertex, Vertex>> es;
  std::vector<bool> used(g.n(), false);
  for (const auto& f : g.edges()) {
    for (int i = 0; i < 3; ++i) {
      used[f[i]] = true;
      for (int j = i + 1; j < 3; ++j) es.emplace(f[i], f[j]);
    }
  }
  long v = std::count(used.begin(), used.end(), true);
  return v - static_cast<long>(es.size()) + static_cast<long>(g.num_edges());
}

KGraph gen_sphere_triangulation(int level, bool ico) {
  if (level < 0) throw InputError("gen_sphere_triangulation: level must be >= 0");
  Mesh m = ico ? icosahedron() : octahedron();
  for (int i = 0; i < level; ++i) m = subdivide(m);
  KGraph g = mesh_graph(m);
  if (euler_characteristic(g) != 2) throw RoundFailure("gen_sphere_triangulation: Euler audit failed");
  for (Vertex v = 0; v < g.n(); ++v)
    if (g.degree(v) > 6) throw RoundFailure("gen_sphere_triangulation: face degree above 6");
  return g;
}

KGraph gen_sphere_triangulation_order(std::size_t n, std::mt19937_64& rng,
                                      std::size_t max_face_degree) {
  if (n < 6) throw InputError("gen_sphere_triangulation_order: need n >= 6");
  Mesh m = octahedron();
  std::vector<std::size_t> deg(n, 0);
  for (auto& f : m.faces)
    for (auto v : f) ++deg[v];
  while (m.nv < n) {
    // edge -> its two faces
    std::map<std::pair<Vertex, Vertex>, std::vector<std::size_t>> adj;
    for (std::size_t fi = 0; fi < m.faces.size(); ++fi)
      for (int i = 0; i < 3; ++i) adj[std::minmax(m.faces[fi][i], m.faces[fi][(i + 1) % 3])].push_back(fi);
    auto opposite = [&](std::size_t fi, Vertex a, Vertex b) {
      for (auto v : m.faces[fi])
        if (v != a && v != b) return v;
      return a;
    };
    std::vector<std::pair<Vertex, Vertex>> good, any;
    for (auto& [e, fs] : adj) {
      any.push_back(e);
      Vertex p = opposite(fs[0], e.first, e.second), q = opposite(fs[1], e.first, e.second);
      if (deg[p] + 1 <= max_face_degree && deg[q] + 1 <= max_face_degree) good.push_back(e);
    }
    auto& pool = good.empty() ? any : good;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    auto [u, v] = pool[pick(rng)];
    Vertex w = static_cast<Vertex>(m.nv++);
    auto fs = adj[{u, v}];
    for (auto fi : fs) {
      // replace face (u,v,p) by (u,w,p) and (w,v,p), preserving orientation
      auto f = m.faces[fi];
      Vertex p = opposite(fi, u, v);
      std::array<Vertex, 3> f1 = f, f2 = f;
      for (int i = 0; i < 3; ++i) {
        if (f1[i] == v) f1[i] = w;
        if (f2[i] == u) f2[i] = w;
      }
      m.faces[fi] = f1;
      m.faces.push_back(f2);
      ++deg[p];
    }
    deg[w] = 4;
  }
  KGraph g = mesh_graph(m);
  if (euler_characteristic(g) != 2) throw RoundFailure("gen_sphere_triangulation_order: Euler audit failed");
  return g;
}

MultipartiteHost gen_multipartite_host(std::size_t n, int k, int r, const KGraph& reduced, double d,
                                       std::mt19937_64& rng, bool certify, double eps, int t,
                                       int retries) {
  if (!(d > 0 && d <= 1)) throw InputError("gen_multipartite_host: d must lie in (0,1]");
  if (reduced.k() != k || reduced.n() != static_cast<std::size_t>(r))
    throw InputError("gen_multipartite_host: reduced graph must be a k-graph on [r]");
  MultipartiteHost out;
  out.parts.resize(n * r);
  for (std::size_t v = 0; v < n * r; ++v) out.parts[v] = static_cast<int>(v / n);
  std::bernoulli_distribution coin(d);
  for (int attempt = 0; attempt < std::max(1, retries); ++attempt) {
    KGraph g(k, n * r);
    for (const auto& re : reduced.edges()) {
      std::vector<std::size_t> idx(k, 0);
      while (true) {
        if (d >= 1 || coin(rng)) {
          VSet e(k);
          for (int j = 0; j < k; ++j) e[j] = static_cast<Vertex>(re[j] * n + idx[j]);
          g.add_edge(e);
        }
        int j = k - 1;
        while (j >= 0 && ++idx[j] == n) idx[j--] = 0;
        if (j < 0) break;
      }
    }
    out.graph = std::move(g);
    if (!certify) return out;
    TypicalityOptions opt;
    opt.seed = rng();
    out.typicality = is_typical_wrt_reduced(out.graph, out.parts, reduced, eps, t, d, opt);
    if (out.typicality.typical) return out;
  }
  throw RoundFailure("gen_multipartite_host: typicality retries exhausted, worst deviation " +
                     std::to_string(out.typicality.worst_deviation));
}

Bigraph gen_random_regular_bigraph(std::size_t n, std::size_t D, std::mt19937_64& rng) {
  if (D > n) throw InputError("gen_random_regular_bigraph: need D <= n");
  Bigraph g(n, n);
  for (std::uint32_t x = 0; x < n; ++x)
    for (std::size_t j = 0; j < D; ++j) g.add_edge(x, static_cast<std::uint32_t>((x + j) % n));
  if (D == 0 || D == n) return g;
  auto es = g.edges();
  std::uniform_int_distribution<std::size_t> pick(0, es.size() - 1);
  std::size_t swaps = 10 * es.size();
  for (std::size_t s = 0; s < swaps; ++s) {
    std::size_t i = pick(rng), j = pick(rng);
    auto [x1, y1] = es[i];
    auto [x2, y2] = es[j];
    if (x1 == x2 || y1 == y2 || g.has_edge(x1, y2) || g.has_edge(x2, y1)) continue;
    g.remove_edge(x1, y1);
    g.remove_edge(x2, y2);
    g.add_edge(x1, y2);
    g.add_edge(x2, y1);
    es[i] = {x1, y2};
    es[j] = {x2, y1};
  }
  return g;
}

KGraph gen_linear_regular_3graph(std::size_t m, std::size_t D, std::mt19937_64& rng) {
  if (m % 2 != 0 || m % 3 == 0 || D > m / 2) throw InputError("gen_linear_regular_3graph: need m even, 3 not dividing m, D <= m/2");
  std::vector<std::size_t> res(m / 2);
  std::iota(res.begin(), res.end(), 0);
  std::shuffle(res.begin(), res.end(), rng);
  std::bernoulli_distribution coin(0.5);
  KGraph g(3, 3 * m);
  for (std::size_t i = 0; i < D; ++i) {
    std::size_t s = res[i] + (coin(rng) ? m / 2 : 0);
    for (std::size_t x = 0; x < m; ++x)
      g.add_edge({static_cast<Vertex>(x), static_cast<Vertex>(m + (x + s) % m),
                  static_cast<Vertex>(2 * m + (x + 3 * s) % m)});
  }
  return g;
}

}  // namespace hpack
