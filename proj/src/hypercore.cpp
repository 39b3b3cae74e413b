#include "hpack/hypercore.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <boost/dynamic_bitset.hpp>

#include "hpack/errors.hpp"

namespace hpack {

VSet sorted_set(VSet s) {
  std::sort(s.begin(), s.end());
  return s;
}

bool is_subset(const VSet& small, const VSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

VSet set_minus(const VSet& a, const VSet& b) {
  VSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

VSet set_union(const VSet& a, const VSet& b) {
  VSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

VSet set_intersect(const VSet& a, const VSet& b) {
  VSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

KGraph::KGraph(int k, std::size_t n) : k_(k), n_(n), inc_(n) {
  if (k < 2) throw InputError("KGraph: uniformity must be >= 2");
}

KGraph::KGraph(int k, std::size_t n, const std::vector<VSet>& edges) : KGraph(k, n) {
  edges_.reserve(edges.size());
  for (const auto& e : edges) {
    if (!add_edge(e)) throw InputError("KGraph: duplicate edge");
  }
}

void KGraph::check_edge(const VSet& e) const {
  if (static_cast<int>(e.size()) != k_) throw InputError("KGraph: edge has wrong size");
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] >= n_) throw InputError("KGraph: vertex out of range");
    if (i > 0 && e[i] == e[i - 1]) throw InputError("KGraph: repeated vertex in edge");
  }
}

bool KGraph::add_edge(VSet e) {
  std::sort(e.begin(), e.end());
  check_edge(e);
  if (index_.count(e)) return false;
  auto id = static_cast<std::uint32_t>(edges_.size());
  index_.emplace(e, id);
  for (Vertex v : e) inc_[v].push_back(id);
  edges_.push_back(std::move(e));
  return true;
}

bool KGraph::has_edge(const VSet& e) const { return index_.count(e) > 0; }

long KGraph::edge_index(const VSet& e) const {
  auto it = index_.find(e);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

nlohmann::json KGraph::to_json() const {
  auto sorted = edges_;
  std::sort(sorted.begin(), sorted.end());
  return {{"k", k_}, {"n", n_}, {"edges", sorted}};
}

KGraph KGraph::from_json(const nlohmann::json& j) {
  if (!j.contains("k") || !j.contains("n") || !j.contains("edges"))
    throw InputError("KGraph json: missing k, n or edges");
  KGraph g(j.at("k").get<int>(), j.at("n").get<std::size_t>());
  for (const auto& e : j.at("edges")) {
    if (!g.add_edge(e.get<VSet>())) throw InputError("KGraph json: duplicate edge");
  }
  return g;
}

namespace {

void check_query_set(const KGraph& g, const VSet& s) {
  if (s.empty() || static_cast<int>(s.size()) > g.k() - 1)
    throw InputError("neighborhood: |S| must be in [1,k-1]");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= g.n()) throw InputError("neighborhood: vertex out of range");
    if (i > 0 && s[i] <= s[i - 1]) throw InputError("neighborhood: S must be sorted and distinct");
  }
}

// Vertex with the smallest incidence list, used as the scan anchor.
Vertex anchor(const KGraph& g, const VSet& s) {
  Vertex best = s[0];
  for (Vertex v : s)
    if (g.degree(v) < g.degree(best)) best = v;
  return best;
}

using Bits = boost::dynamic_bitset<>;

Bits nbr_bits(const KGraph& g, const VSet& s) {
  Bits b(g.n());
  for (auto id : g.incident(anchor(g, s))) {
    const VSet& e = g.edge(id);
    if (!is_subset(s, e)) continue;
    for (Vertex v : e)
      if (!std::binary_search(s.begin(), s.end(), v)) b.set(v);
  }
  return b;
}

}  // namespace

std::vector<VSet> neighborhood(const KGraph& g, const VSet& s) {
  check_query_set(g, s);
  std::vector<VSet> out;
  for (auto id : g.incident(anchor(g, s))) {
    const VSet& e = g.edge(id);
    if (is_subset(s, e)) out.push_back(set_minus(e, s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t degree_of(const KGraph& g, const VSet& s) {
  check_query_set(g, s);
  std::size_t c = 0;
  for (auto id : g.incident(anchor(g, s)))
    if (is_subset(s, g.edge(id))) ++c;
  return c;
}

VSet joint_neighborhood(const KGraph& g, const std::vector<VSet>& fam) {
  if (fam.empty()) throw InputError("joint_neighborhood: empty family");
  Bits acc;
  for (const auto& s : fam) {
    if (static_cast<int>(s.size()) != g.k() - 1)
      throw InputError("joint_neighborhood: members must have k-1 vertices");
    check_query_set(g, s);
    Bits b = nbr_bits(g, s);
    if (acc.empty()) acc = std::move(b);
    else acc &= b;
  }
  VSet out;
  for (auto v = acc.find_first(); v != Bits::npos; v = acc.find_next(v))
    out.push_back(static_cast<Vertex>(v));
  return out;
}

std::size_t max_m_degree(const KGraph& g, int m) {
  if (m < 1 || m > g.k() - 1) throw InputError("max_m_degree: m out of range");
  std::unordered_map<VSet, std::size_t, VSetHash> cnt;
  std::size_t best = 0;
  for (const auto& e : g.edges()) {
    for_each_subset(e, m, [&](const VSet& s) { best = std::max(best, ++cnt[s]); });
  }
  return best;
}

std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(std::llround(r));
}

void for_each_subset(const VSet& pool, int m, const std::function<void(const VSet&)>& f) {
  const int n = static_cast<int>(pool.size());
  if (m < 0 || m > n) return;
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  VSet cur(m);
  while (true) {
    for (int i = 0; i < m; ++i) cur[i] = pool[idx[i]];
    f(cur);
    int i = m - 1;
    while (i >= 0 && idx[i] == n - m + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}

namespace {

// Shared driver: pools[i] are candidate (k-1)-sets for target part i whose
// joint neighbourhoods are intersected with targets[i].
TypicalityReport run_typicality(const KGraph& g, const std::vector<std::vector<VSet>>& pools,
                                const std::vector<Bits>& targets, double eps, int t, double d,
                                const TypicalityOptions& opt) {
  if (!(d > 0.0 && d <= 1.0)) throw InputError("typicality: d must lie in (0,1]");
  if (t < 1) throw InputError("typicality: t must be >= 1");
  if (eps < 0) throw InputError("typicality: eps must be >= 0");

  TypicalityReport rep;
  std::uint64_t total = 0;
  for (const auto& p : pools) {
    for (int s = 1; s <= t; ++s) {
      std::uint64_t c = binom(p.size(), s);
      total = (c == UINT64_MAX || total + c < total) ? UINT64_MAX : total + c;
    }
  }

  // Cache of neighbourhood bitsets for pool members.
  std::vector<std::vector<Bits>> nb(pools.size());
  auto bits_of = [&](std::size_t part, std::size_t idx) -> const Bits& {
    auto& v = nb[part];
    if (v.empty()) v.resize(pools[part].size());
    if (v[idx].size() == 0) v[idx] = nbr_bits(g, pools[part][idx]);
    return v[idx];
  };

  double worst_abs = -1.0;
  auto score = [&](std::size_t part, const std::vector<std::size_t>& fam) {
    Bits acc = targets[part];
    for (auto i : fam) acc &= bits_of(part, i);
    double expect = std::pow(d, static_cast<double>(fam.size())) * targets[part].count();
    double dev = expect > 0 ? static_cast<double>(acc.count()) / expect - 1.0 : 0.0;
    ++rep.families_checked;
    if (std::abs(dev) > eps) rep.typical = false;
    if (std::abs(dev) > worst_abs) {
      worst_abs = std::abs(dev);
      rep.worst_deviation = dev;
      rep.worst_part = static_cast<int>(part);
      rep.worst_family.clear();
      for (auto i : fam) rep.worst_family.push_back(pools[part][i]);
    }
  };

  if (total <= opt.max_exhaustive) {
    for (std::size_t part = 0; part < pools.size(); ++part) {
      VSet ids(pools[part].size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<Vertex>(i);
      for (int s = 1; s <= t; ++s) {
        for_each_subset(ids, s, [&](const VSet& f) {
          score(part, std::vector<std::size_t>(f.begin(), f.end()));
        });
      }
    }
    return rep;
  }

  rep.sampled = true;
  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> nonempty;
  for (std::size_t p = 0; p < pools.size(); ++p)
    if (!pools[p].empty()) nonempty.push_back(p);
  if (nonempty.empty()) return rep;
  for (std::uint64_t it = 0; it < opt.samples; ++it) {
    std::size_t part = nonempty[std::uniform_int_distribution<std::size_t>(0, nonempty.size() - 1)(rng)];
    std::size_t cap = std::min<std::size_t>(t, pools[part].size());
    std::size_t s = std::uniform_int_distribution<std::size_t>(1, cap)(rng);
    std::vector<std::size_t> fam;
    std::uniform_int_distribution<std::size_t> pick(0, pools[part].size() - 1);
    while (fam.size() < s) {
      auto i = pick(rng);
      if (std::find(fam.begin(), fam.end(), i) == fam.end()) fam.push_back(i);
    }
    std::sort(fam.begin(), fam.end());
    score(part, fam);
  }
  return rep;
}

}  // namespace

TypicalityReport is_typical(const KGraph& g, double eps, int t, double d,
                            const TypicalityOptions& opt) {
  std::vector<std::vector<VSet>> pools(1);
  VSet all(g.n());
  for (std::size_t v = 0; v < g.n(); ++v) all[v] = static_cast<Vertex>(v);
  // Materialising every (k-1)-set is fine up to a few million; beyond that the
  // family count is astronomically above the exhaustive cap anyway.
  if (binom(g.n(), g.k() - 1) > 20000000ULL)
    throw InputError("is_typical: graph too large for (k-1)-set enumeration");
  for_each_subset(all, g.k() - 1, [&](const VSet& s) { pools[0].push_back(s); });
  Bits everything(g.n());
  everything.set();
  return run_typicality(g, pools, {everything}, eps, t, d, opt);
}

TypicalityReport is_typical_wrt_reduced(const KGraph& g, const std::vector<int>& parts,
                                        const KGraph& reduced, double eps, int t, double d,
                                        const TypicalityOptions& opt) {
  if (parts.size() != g.n()) throw InputError("is_typical_wrt_reduced: partition does not cover V(G)");
  if (reduced.k() != g.k()) throw InputError("is_typical_wrt_reduced: uniformity mismatch");
  const std::size_t r = reduced.n();
  std::vector<VSet> members(r);
  for (std::size_t v = 0; v < parts.size(); ++v) {
    if (parts[v] < 0 || static_cast<std::size_t>(parts[v]) >= r)
      throw InputError("is_typical_wrt_reduced: part index out of range");
    members[parts[v]].push_back(static_cast<Vertex>(v));
  }
  std::vector<std::vector<VSet>> pools(r);
  std::vector<Bits> targets(r, Bits(g.n()));
  for (std::size_t i = 0; i < r; ++i)
    for (Vertex v : members[i]) targets[i].set(v);
  for (std::size_t i = 0; i < r; ++i) {
    for (auto id : reduced.incident(static_cast<Vertex>(i))) {
      VSet others = set_minus(reduced.edge(id), {static_cast<Vertex>(i)});
      // cartesian product of the other parts
      VSet cur;
      std::function<void(std::size_t)> rec = [&](std::size_t j) {
        if (j == others.size()) {
          pools[i].push_back(sorted_set(cur));
          return;
        }
        for (Vertex v : members[others[j]]) {
          cur.push_back(v);
          rec(j + 1);
          cur.pop_back();
        }
      };
      rec(0);
    }
  }
  return run_typicality(g, pools, targets, eps, t, d, opt);
}

bool Graph2::adjacent(Vertex a, Vertex b) const {
  return std::binary_search(adj[a].begin(), adj[a].end(), b);
}

std::size_t Graph2::max_degree() const {
  std::size_t m = 0;
  for (const auto& a : adj) m = std::max(m, a.size());
  return m;
}

Graph2 shadow(const KGraph& h) {
  Graph2 g;
  g.n = h.n();
  g.adj.assign(h.n(), {});
  for (const auto& e : h.edges())
    for (Vertex a : e)
      for (Vertex b : e)
        if (a != b) g.adj[a].push_back(b);
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return g;
}

Graph2 graph_power(const Graph2& g, int m) {
  if (m < 1) throw InputError("graph_power: m must be >= 1");
  Graph2 out;
  out.n = g.n;
  out.adj.assign(g.n, {});
  std::vector<int> dist(g.n, -1);
  for (Vertex s = 0; s < g.n; ++s) {
    std::vector<Vertex> seen{s};
    dist[s] = 0;
    std::queue<Vertex> q;
    q.push(s);
    while (!q.empty()) {
      Vertex u = q.front();
      q.pop();
      if (dist[u] == m) continue;
      for (Vertex w : g.adj[u]) {
        if (dist[w] >= 0) continue;
        dist[w] = dist[u] + 1;
        seen.push_back(w);
        q.push(w);
      }
    }
    for (Vertex w : seen) {
      if (w != s) out.adj[s].push_back(w);
      dist[w] = -1;
    }
    std::sort(out.adj[s].begin(), out.adj[s].end());
  }
  return out;
}

Graph2 shadow_square(const KGraph& h) { return graph_power(shadow(h), 2); }

std::vector<int> greedy_colouring(const Graph2& g) {
  // largest-degree-first ordering
  std::vector<Vertex> order(g.n);
  for (Vertex v = 0; v < g.n; ++v) order[v] = v;
  std::stable_sort(order.begin(), order.end(),
                   [&](Vertex a, Vertex b) { return g.adj[a].size() > g.adj[b].size(); });
  std::vector<int> col(g.n, -1);
  std::vector<char> used;
  for (Vertex v : order) {
    used.assign(g.adj[v].size() + 1, 0);
    for (Vertex w : g.adj[v])
      if (col[w] >= 0 && col[w] < static_cast<int>(used.size())) used[col[w]] = 1;
    int c = 0;
    while (used[c]) ++c;
    col[v] = c;
  }
  return col;
}

}  // namespace hpack
