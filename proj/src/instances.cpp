#include "hpack/instances.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "hpack/errors.hpp"

namespace hpack {

std::vector<Vertex> BlowupInstance::host_cluster(int i) const {
  std::vector<Vertex> out;
  for (Vertex v = 0; v < host_parts.size(); ++v)
    if (host_parts[v] == i) out.push_back(v);
  return out;
}

std::vector<Vertex> BlowupInstance::guest_cluster(std::size_t h, int i) const {
  std::vector<Vertex> out;
  for (Vertex x = 0; x < guest_parts[h].size(); ++x)
    if (guest_parts[h][x] == i) out.push_back(x);
  return out;
}

nlohmann::json BlowupInstance::to_json(const nlohmann::json& params) const {
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : guests) gs.push_back(g.to_json());
  nlohmann::json p = params;
  p["n"] = n;
  p["k"] = k;
  p["r"] = r;
  return {{"host", host.to_json()},       {"guests", gs},
          {"reduced", reduced.to_json()}, {"guest_parts", guest_parts},
          {"host_parts", host_parts},     {"params", p}};
}

BlowupInstance BlowupInstance::from_json(const nlohmann::json& j) {
  BlowupInstance b;
  const auto& p = j.at("params");
  b.n = p.at("n").get<std::size_t>();
  b.k = p.at("k").get<int>();
  b.r = p.at("r").get<int>();
  b.host = KGraph::from_json(j.at("host"));
  b.reduced = KGraph::from_json(j.at("reduced"));
  for (const auto& g : j.at("guests")) b.guests.push_back(KGraph::from_json(g));
  b.guest_parts = j.at("guest_parts").get<std::vector<std::vector<int>>>();
  b.host_parts = j.at("host_parts").get<std::vector<int>>();
  return b;
}

std::vector<Violation> validate_blowup(const BlowupInstance& b) {
  std::vector<Violation> out;
  auto add = [&](std::string kind, long g, long part, VSet e, std::string detail) {
    out.push_back({std::move(kind), g, part, std::move(e), std::move(detail)});
  };
  if (b.host.k() != b.k) add("uniformity", -1, -1, {}, "host is not k-uniform");
  if (b.reduced.k() != b.k || b.reduced.n() != static_cast<std::size_t>(b.r))
    add("uniformity", -1, -1, {}, "reduced graph must be a k-graph on [r]");
  if (b.host_parts.size() != b.host.n()) {
    add("partition", -1, -1, {}, "host partition does not cover the host");
    return out;
  }
  std::vector<std::size_t> vsize(b.r, 0);
  for (int p : b.host_parts) {
    if (p < 0 || p >= b.r) {
      add("partition", -1, p, {}, "host vertex outside [r]");
      return out;
    }
    ++vsize[p];
  }
  if (b.guest_parts.size() != b.guests.size()) {
    add("partition", -1, -1, {}, "one guest partition per guest required");
    return out;
  }
  double lo = 0.5 * b.n, hi = 1.5 * b.n;
  for (int i = 0; i < b.r; ++i)
    if (vsize[i] < lo || vsize[i] > hi) add("size", -1, i, {}, "|V_i| outside (1±1/2)n");
  for (std::size_t h = 0; h < b.guests.size(); ++h) {
    const auto& g = b.guests[h];
    const auto& parts = b.guest_parts[h];
    if (g.k() != b.k) add("uniformity", static_cast<long>(h), -1, {}, "guest is not k-uniform");
    if (parts.size() != g.n()) {
      add("partition", static_cast<long>(h), -1, {}, "guest partition does not cover the guest");
      continue;
    }
    std::vector<std::size_t> xsize(b.r, 0);
    bool bad = false;
    for (int p : parts) {
      if (p < 0 || p >= b.r) bad = true;
      else ++xsize[p];
    }
    if (bad) {
      add("partition", static_cast<long>(h), -1, {}, "guest vertex outside [r]");
      continue;
    }
    for (int i = 0; i < b.r; ++i)
      if (xsize[i] != vsize[i]) add("size", static_cast<long>(h), i, {}, "|X_i^H| != |V_i|");
    for (const auto& e : g.edges()) {
      VSet cl;
      for (auto x : e) cl.push_back(static_cast<Vertex>(parts[x]));
      std::sort(cl.begin(), cl.end());
      auto dup = std::adjacent_find(cl.begin(), cl.end());
      if (dup != cl.end()) {
        add("edge-in-part", static_cast<long>(h), static_cast<long>(*dup), e,
            "guest edge meets a part twice");
        continue;
      }
      if (!b.reduced.has_edge(cl))
        add("reduced", static_cast<long>(h), -1, e, "guest edge on a cluster set outside E(R)");
    }
  }
  return out;
}

double GuestWeight::total() const {
  double s = 0;
  for (const auto& e : entries) s += e.w;
  return s;
}

namespace {

// Class assignment for one part of one guest. Returns class per member.
std::vector<int> refine_part(const Graph2& sq, const std::vector<Vertex>& members, int B,
                             std::mt19937_64& rng, int budget, int& attempts) {
  const std::size_t m = members.size();
  if (static_cast<std::size_t>(B) > m) throw InputError("refine_partitions: beta^{-1} exceeds a part size");
  std::map<Vertex, int> pos;
  for (std::size_t i = 0; i < m; ++i) pos[members[i]] = static_cast<int>(i);
  std::string why;
  for (int attempt = 0; attempt < budget; ++attempt) {
    ++attempts;
    std::vector<int> cls(m, -1);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::size_t rem = m % B, s = (m - rem) / B;
    std::vector<std::size_t> tilde(perm.begin(), perm.begin() + rem);
    for (std::size_t t = rem; t < m; ++t) cls[perm[t]] = static_cast<int>((t - rem) / s);

    auto nbr_in = [&](std::size_t a, int c, long skip = -1) {
      for (auto w : sq.adj[members[a]]) {
        auto it = pos.find(w);
        if (it != pos.end() && it->second != skip && cls[it->second] == c) return true;
      }
      return false;
    };

    // W_j: conflicted vertices, padded so every class gives up the same number
    std::vector<std::vector<std::size_t>> conflicted(B), others(B);
    for (std::size_t a = 0; a < m; ++a) {
      if (cls[a] < 0) continue;
      (nbr_in(a, cls[a]) ? conflicted : others)[cls[a]].push_back(a);
    }
    std::size_t wmax = 0;
    for (int j = 0; j < B; ++j) wmax = std::max(wmax, conflicted[j].size());
    std::vector<std::pair<std::size_t, int>> wlist;  // (member, original class)
    for (int j = 0; j < B; ++j) {
      std::shuffle(others[j].begin(), others[j].end(), rng);
      auto take = conflicted[j];
      for (std::size_t p = 0; take.size() < wmax; ++p) take.push_back(others[j][p]);
      for (auto a : take) wlist.emplace_back(a, j);
    }
    std::shuffle(wlist.begin(), wlist.end(), rng);
    std::vector<int> labels;
    for (int j = 0; j < B; ++j) labels.insert(labels.end(), wmax, j);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (auto& [a, j] : wlist) cls[a] = -2;  // out of Z(0)

    // Move a into class `into` (a has no neighbour there); a vertex of class
    // `via` without neighbours in `into` is swapped out when via != into.
    auto place = [&](std::size_t a, int forbid, int target) {
      std::vector<int> cand;
      for (int j2 = 0; j2 < B; ++j2) {
        if (j2 == forbid || j2 == target || nbr_in(a, j2)) continue;
        bool has = false;
        for (std::size_t u = 0; u < m && !has; ++u)
          if (cls[u] == j2 && !nbr_in(u, target)) has = true;
        if (has) cand.push_back(j2);
      }
      if (!cand.empty()) {
        int j2 = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
        std::vector<std::size_t> us;
        for (std::size_t u = 0; u < m; ++u)
          if (cls[u] == j2 && !nbr_in(u, target)) us.push_back(u);
        std::size_t u = us[std::uniform_int_distribution<std::size_t>(0, us.size() - 1)(rng)];
        cls[u] = target;
        cls[a] = j2;
        return true;
      }
      if (!nbr_in(a, target)) {
        cls[a] = target;
        return true;
      }
      return false;
    };

    bool ok = true;
    for (std::size_t t = 0; t < wlist.size() && ok; ++t) {
      auto [a, j] = wlist[t];
      if (!place(a, j, labels[t])) {
        ok = false;
        why = "swap repair found no eligible class";
      }
    }
    if (!ok) continue;
    // reinsert the peeled vertices into distinct classes
    std::vector<int> free_classes(B);
    std::iota(free_classes.begin(), free_classes.end(), 0);
    std::shuffle(free_classes.begin(), free_classes.end(), rng);
    for (std::size_t t = 0; t < tilde.size() && ok; ++t) {
      std::size_t a = tilde[t];
      cls[a] = -2;
      // prefer a class a fits into directly
      auto it = std::find_if(free_classes.begin(), free_classes.end(),
                             [&](int c) { return !nbr_in(a, c); });
      int target = it != free_classes.end() ? *it : free_classes.front();
      if (it != free_classes.end()) {
        cls[a] = target;
      } else if (!place(a, -1, target)) {
        ok = false;
        why = "could not reinsert a peeled vertex";
      }
      std::erase(free_classes, target);
    }
    if (!ok) continue;
    for (std::size_t a = 0; a < m && ok; ++a)
      if (nbr_in(a, cls[a])) ok = false, why = "class not independent after repair";
    if (!ok) continue;
    std::vector<int> relabel(B);
    std::iota(relabel.begin(), relabel.end(), 0);
    std::shuffle(relabel.begin(), relabel.end(), rng);
    for (auto& c : cls) c = relabel[c];
    return cls;
  }
  throw RoundFailure("refine_partitions: retries exhausted (" + why + ")");
}

void measure(const std::vector<GuestWeight>& weights, const std::vector<std::vector<int>>& parts,
             const RefineResult& res, bool single, double eps, std::vector<WeightDeviation>& out) {
  const int B = res.classes;
  const double beta = 1.0 / B;
  // mean part size plays the role of n
  double n = 0, cnt = 0;
  {
    std::map<std::pair<std::size_t, int>, double> sz;
    for (std::size_t h = 0; h < parts.size(); ++h)
      for (auto p : parts[h]) sz[{h, p}] += 1;
    for (auto& [key, s] : sz) n += s, cnt += 1;
    n = cnt > 0 ? n / cnt : 0;
  }
  for (std::size_t wi = 0; wi < weights.size(); ++wi) {
    const auto& w = weights[wi];
    int arity = single ? w.arity : static_cast<int>(w.clusters.size());
    if (arity == 1) {
      // per guest, per part, per class
      std::map<std::pair<std::uint32_t, int>, double> tot;
      std::map<std::tuple<std::uint32_t, int, int>, double> byclass;
      for (const auto& e : w.entries) {
        int p = parts[e.guest][e.tuple[0]];
        tot[{e.guest, p}] += e.w;
        byclass[{e.guest, p, res.cls[e.guest][e.tuple[0]]}] += e.w;
      }
      for (auto& [key, t] : tot)
        for (int j = 0; j < B; ++j) {
          WeightDeviation d;
          d.weight = static_cast<int>(wi);
          d.guest = static_cast<int>(key.first);
          d.part = key.second;
          d.classes = {j};
          auto it = byclass.find({key.first, key.second, j});
          d.value = it == byclass.end() ? 0 : it->second;
          d.expected = beta * t;
          d.bound = std::pow(beta, 1.5) * n;
          d.within = std::abs(d.value - d.expected) <= d.bound + 1e-9;
          out.push_back(d);
        }
      continue;
    }
    double total = w.total();
    std::map<std::vector<int>, double> byclass;
    for (const auto& e : w.entries) {
      std::vector<int> c;
      for (auto x : e.tuple) c.push_back(res.cls[e.guest][x]);
      byclass[c] += e.w;
    }
    // every class tuple; distinct classes in the ordered single-part case
    std::vector<int> c(arity, 0);
    while (true) {
      bool distinct = true;
      if (single) {
        auto s = c;
        std::sort(s.begin(), s.end());
        distinct = std::adjacent_find(s.begin(), s.end()) == s.end();
      }
      if (distinct) {
        WeightDeviation d;
        d.weight = static_cast<int>(wi);
        d.classes = c;
        auto it = byclass.find(c);
        d.value = it == byclass.end() ? 0 : it->second;
        d.expected = std::pow(beta, arity) * total;
        d.bound = (single ? std::sqrt(beta) : eps) * d.expected;
        d.tracked = total >= std::pow(n, 1 + eps);
        d.within = !d.tracked || std::abs(d.value - d.expected) <= d.bound + 1e-9;
        out.push_back(d);
      }
      int p = arity - 1;
      while (p >= 0 && ++c[p] == B) c[p--] = 0;
      if (p < 0) break;
    }
  }
}

}  // namespace

RefineResult refine_partitions(const std::vector<KGraph>& guests,
                               const std::vector<std::vector<int>>& parts, int r, double beta,
                               const std::vector<GuestWeight>& weights, std::mt19937_64& rng,
                               const RefineOptions& opt) {
  if (!(beta > 0 && beta <= 1)) throw InputError("refine_partitions: beta must lie in (0,1]");
  int B = static_cast<int>(std::lround(1.0 / beta));
  if (parts.size() != guests.size()) throw InputError("refine_partitions: one partition per guest");
  RefineResult res;
  res.classes = B;
  res.cls.resize(guests.size());
  for (std::size_t h = 0; h < guests.size(); ++h) {
    if (parts[h].size() != guests[h].n()) throw InputError("refine_partitions: partition size mismatch");
    Graph2 sq = shadow_square(guests[h]);
    res.cls[h].assign(guests[h].n(), 0);
    std::vector<std::vector<Vertex>> members(r);
    for (Vertex x = 0; x < guests[h].n(); ++x) {
      if (parts[h][x] < 0 || parts[h][x] >= r) throw InputError("refine_partitions: part out of range");
      members[parts[h][x]].push_back(x);
    }
    for (int i = 0; i < r; ++i) {
      if (members[i].empty()) continue;
      auto c = refine_part(sq, members[i], B, rng, opt.retries_per_class * B, res.attempts);
      for (std::size_t a = 0; a < members[i].size(); ++a) res.cls[h][members[i][a]] = c[a];
    }
  }
  measure(weights, parts, res, false, opt.eps, res.deviations);
  return res;
}

RefineResult refine_partitions_single(const std::vector<KGraph>& guests, double beta,
                                      const std::vector<GuestWeight>& weights,
                                      std::mt19937_64& rng, const RefineOptions& opt) {
  std::vector<std::vector<int>> parts;
  for (const auto& g : guests) parts.emplace_back(g.n(), 0);
  if (!(beta > 0 && beta <= 1)) throw InputError("refine_partitions_single: beta must lie in (0,1]");
  int B = static_cast<int>(std::lround(1.0 / beta));
  RefineResult res;
  res.classes = B;
  res.cls.resize(guests.size());
  for (std::size_t h = 0; h < guests.size(); ++h) {
    Graph2 sq = shadow_square(guests[h]);
    std::vector<Vertex> members(guests[h].n());
    std::iota(members.begin(), members.end(), 0);
    res.cls[h] = refine_part(sq, members, B, rng, opt.retries_per_class * B, res.attempts);
  }
  measure(weights, parts, res, true, opt.eps, res.deviations);
  return res;
}

HostSplit split_host(const KGraph& g, double gamma, double d, std::mt19937_64& rng,
                     const SplitOptions& opt, const std::vector<int>& parts, const KGraph* reduced) {
  if (!(gamma > 0 && gamma < 1)) throw InputError("split_host: gamma must lie in (0,1)");
  if (!(d > 0 && d <= 1)) throw InputError("split_host: d must lie in (0,1]");
  const int k = g.k();
  const double dA = (1 - gamma) * d, dB = gamma * d;
  std::vector<int> part = parts.empty() ? std::vector<int>(g.n(), 0) : parts;
  if (part.size() != g.n()) throw InputError("split_host: partition size mismatch");
  int r = *std::max_element(part.begin(), part.end()) + 1;
  std::vector<std::vector<Vertex>> members(r);
  for (Vertex v = 0; v < g.n(); ++v) members[part[v]].push_back(v);
  // reduced edges through each part
  std::vector<std::vector<VSet>> through(r);
  if (reduced)
    for (const auto& re : reduced->edges())
      for (auto i : re) through[i].push_back(re);

  HostSplit out;
  std::bernoulli_distribution coin(gamma);
  for (int attempt = 1; attempt <= std::max(1, opt.retries); ++attempt) {
    KGraph a(k, g.n()), b(k, g.n());
    for (const auto& e : g.edges()) (coin(rng) ? b : a).add_edge(e);
    SplitReport rep;
    rep.attempts = attempt;
    std::uniform_int_distribution<int> pick_part(0, r - 1);
    std::uniform_int_distribution<int> pick_size(1, std::max(1, opt.t));
    for (std::uint64_t s = 0; s < opt.samples; ++s) {
      int i = pick_part(rng);
      if (reduced && through[i].empty()) continue;
      int size = pick_size(rng);
      std::set<VSet> fam;
      for (int tries = 0; static_cast<int>(fam.size()) < size && tries < 50; ++tries) {
        VSet S;
        if (reduced) {
          const auto& re = through[i][std::uniform_int_distribution<std::size_t>(0, through[i].size() - 1)(rng)];
          for (auto j : re) {
            if (static_cast<int>(j) == i) continue;
            const auto& mj = members[j];
            S.push_back(mj[std::uniform_int_distribution<std::size_t>(0, mj.size() - 1)(rng)]);
          }
        } else {
          while (S.size() < static_cast<std::size_t>(k - 1)) {
            Vertex v = static_cast<Vertex>(std::uniform_int_distribution<std::size_t>(0, g.n() - 1)(rng));
            if (std::find(S.begin(), S.end(), v) == S.end()) S.push_back(v);
          }
        }
        fam.insert(sorted_set(S));
      }
      std::vector<VSet> fv(fam.begin(), fam.end());
      std::shuffle(fv.begin(), fv.end(), rng);
      int sa = std::uniform_int_distribution<int>(0, static_cast<int>(fv.size()))(rng);
      std::vector<VSet> SA(fv.begin(), fv.begin() + sa), SB(fv.begin() + sa, fv.end());
      VSet used;
      for (const auto& S : fv) used = set_union(used, S);
      VSet pool = set_minus(VSet(members[i].begin(), members[i].end()), used);
      if (!SA.empty()) pool = set_intersect(pool, joint_neighborhood(a, SA));
      if (!SB.empty()) pool = set_intersect(pool, joint_neighborhood(b, SB));
      double base = static_cast<double>(set_minus(VSet(members[i].begin(), members[i].end()), used).size());
      double expect = std::pow(dA, SA.size()) * std::pow(dB, SB.size()) * base;
      if (expect <= 0) continue;
      double dev = pool.size() / expect - 1;
      ++rep.checked;
      if (std::abs(dev) > std::abs(rep.worst_deviation)) rep.worst_deviation = dev;
    }
    rep.ok = std::abs(rep.worst_deviation) <= opt.eps0;
    out.a = std::move(a);
    out.b = std::move(b);
    out.report = rep;
    if (rep.ok || !opt.enforce) return out;
  }
  throw RoundFailure("split_host: retry budget exhausted, worst deviation " +
                     std::to_string(out.report.worst_deviation));
}

int ClusterSchedule::c_i(int i, int q) const { return cq[q][i]; }

int ClusterSchedule::c_I(const std::vector<int>& I, int q) const {
  int m = 0;
  for (int i : I) m = std::max(m, cq[q][i]);
  return m;
}

int ClusterSchedule::m_i(int i, int q) const { return mq[q][i]; }

int ClusterSchedule::b_i(int i, int q) const {
  if (i == q) return 0;
  int cnt = 0;
  for (const auto& re : relabelled.edges()) {
    bool has_q = false, has_i = false, rest_done = true;
    for (auto c : re) {
      int ci = static_cast<int>(c);
      if (ci == q) has_q = true;
      else if (ci == i) has_i = true;
      else if (ci >= q) rest_done = false;
    }
    if (has_q && has_i && rest_done) ++cnt;
  }
  return cnt;
}

ClusterSchedule build_schedule(const KGraph& reduced, double alpha) {
  if (!(alpha > 0 && alpha <= 1)) throw InputError("build_schedule: alpha must lie in (0,1]");
  const int r = static_cast<int>(reduced.n());
  const int k = reduced.k();
  std::size_t maxdeg = 0;
  for (Vertex i = 0; i < reduced.n(); ++i) maxdeg = std::max(maxdeg, reduced.degree(i));
  if (maxdeg > std::floor(1.0 / alpha + 1e-9)) throw InputError("build_schedule: Delta(R) exceeds 1/alpha");
  ClusterSchedule s;
  s.r = r;
  s.T = static_cast<int>(std::lround(std::pow(k, 3) * std::pow(1.0 / alpha, 3)));
  Graph2 cube = graph_power(shadow(reduced), 3);
  auto col = greedy_colouring(cube);
  s.colour.resize(r);
  for (int i = 0; i < r; ++i) s.colour[i] = col[i] + 1;
  s.order.resize(r);
  std::iota(s.order.begin(), s.order.end(), 0);
  std::stable_sort(s.order.begin(), s.order.end(), [&](int a, int b) { return s.colour[a] < s.colour[b]; });
  s.position.resize(r);
  for (int p = 0; p < r; ++p) s.position[s.order[p]] = p;
  s.relabelled = KGraph(k, r);
  for (const auto& re : reduced.edges()) {
    VSet e;
    for (auto c : re) e.push_back(static_cast<Vertex>(s.position[c]));
    s.relabelled.add_edge(sorted_set(e));
  }
  Graph2 star = shadow(s.relabelled);
  s.cq.assign(r + 1, std::vector<int>(r, 0));
  s.mq.assign(r + 1, std::vector<int>(r, 0));
  for (int q = 1; q <= r; ++q)
    for (int i = 0; i < r; ++i) {
      int c = 0;
      if (i < q) c = s.colour[s.order[i]];
      for (auto j : star.adj[i])
        if (static_cast<int>(j) < q) c = std::max(c, s.colour[s.order[j]]);
      s.cq[q][i] = c;
      int m = 0;
      for (auto ei : s.relabelled.incident(i)) {
        int done = 0;
        for (auto c2 : s.relabelled.edge(ei))
          if (static_cast<int>(c2) != i && static_cast<int>(c2) < q) ++done;
        if (done == k - 1) ++m;
      }
      s.mq[q][i] = m;
    }
  return s;
}

BlowupInstance relabel(const BlowupInstance& b, const ClusterSchedule& s) {
  BlowupInstance out = b;
  for (auto& parts : out.guest_parts)
    for (auto& p : parts) p = s.position[p];
  for (auto& p : out.host_parts) p = s.position[p];
  out.reduced = s.relabelled;
  return out;
}

SliceResult group_and_slice(const std::vector<KGraph>& guests, const KGraph& host, int P,
                            std::mt19937_64& rng, const SliceOptions& opt) {
  if (P < 1) throw InputError("group_and_slice: P must be >= 1");
  SliceResult res;
  std::uniform_int_distribution<int> pick(0, P - 1);
  double eh = 0;
  std::size_t nmax = host.n();
  for (const auto& g : guests) eh += g.num_edges(), nmax = std::max(nmax, g.n());
  for (int attempt = 1; attempt <= std::max(1, opt.retries); ++attempt) {
    res = SliceResult{};
    res.attempts = attempt;
    res.groups.assign(P, {});
    res.hosts.assign(P, KGraph(host.k(), host.n()));
    for (std::size_t h = 0; h < guests.size(); ++h) res.groups[P == 1 ? 0 : pick(rng)].push_back(h);
    for (const auto& e : host.edges()) res.hosts[P == 1 ? 0 : pick(rng)].add_edge(e);
    for (int p = 0; p < P; ++p) {
      double ep = 0;
      for (auto h : res.groups[p]) ep += guests[h].num_edges();
      if (ep > (1 + opt.eps) * eh / P + std::pow(double(nmax), 1 + opt.eps)) res.edges_ok = false;
    }
    bool typ = true;
    if (opt.check_typicality) {
      for (int p = 0; p < P; ++p) {
        TypicalityOptions to;
        to.seed = rng();
        to.samples = 5000;
        res.typicality.push_back(is_typical(res.hosts[p], opt.eps, opt.t, opt.d / P, to));
        typ &= res.typicality.back().typical;
      }
    }
    if (res.edges_ok && typ) return res;
  }
  throw RoundFailure("group_and_slice: slice checks failed after retries");
}

}  // namespace hpack
