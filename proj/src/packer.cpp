#include "hpack/packer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "hpack/bigraph.hpp"
#include "hpack/errors.hpp"

namespace hpack {

namespace {

template <class T>
std::size_t pick(std::mt19937_64& rng, const T& c) {
  return std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng);
}

bool contains(const std::vector<int>& s, int i) { return std::find(s.begin(), s.end(), i) != s.end(); }

bool unit_interval(double x) { return x > 0 && x <= 1; }

// Cluster set of a guest edge, sorted.
VSet clusters_of(const std::vector<int>& parts, const VSet& e) {
  VSet c;
  for (Vertex y : e) c.push_back(static_cast<Vertex>(parts[y]));
  std::sort(c.begin(), c.end());
  return c;
}

bool inside_some_edge(const KGraph& h, const std::vector<Vertex>& xs) {
  if (xs.empty()) return false;
  auto want = sorted_set(xs);
  for (auto id : h.incident(xs[0]))
    if (is_subset(want, h.edge(id))) return true;
  return false;
}

double mean_cluster_size(const PackingState& s) {
  if (s.r == 0) return 0;
  return static_cast<double>(s.host_parts.size()) / s.r;
}

// Candidacy single as a bigraph: A = its certificates, B = V_i in order.
Bigraph as_bigraph(const SingleCandidacy& c, const PackingState& s, std::vector<long>& pos) {
  const auto& vi = s.host_clusters[c.cluster];
  for (std::size_t a = 0; a < vi.size(); ++a) pos[vi[a]] = static_cast<long>(a);
  Bigraph g(c.certs.size(), vi.size());
  for (std::size_t a = 0; a < c.certs.size(); ++a)
    for (Vertex v : c.certs[a].nbr) g.add_edge(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(pos[v]));
  return g;
}

void note(Assertion& a, double excess) {
  ++a.checked;
  if (a.checked == 1 || excess > a.worst) a.worst = excess;
  if (excess > 0) ++a.violations;
}

}  // namespace

// ---- ladder --------------------------------------------------------------------

void ParameterLadder::finalize(int k) {
  for (double x : {alpha, beta, gamma, mu, eps, eps0, epsT, eps_prime, d})
    if (!unit_interval(x)) throw InputError("ladder: constants must lie in (0,1]");
  if (gamma >= 1) throw InputError("ladder: gamma must be below 1");
  if (t < 1) throw InputError("ladder: t must be positive");
  if (eps0 > epsT) throw InputError("ladder: eps0 must not exceed epsT");
  if (round_retries < 1 || completion_retries < 1 || matcher_restarts < 1)
    throw InputError("ladder: retry budgets must be positive");
  if (T == 0) T = static_cast<int>(std::lround(std::pow(k, 3) * std::pow(1.0 / alpha, 3)));
  if (dA == 0) dA = (1 - gamma) * d;
  if (dB == 0) dB = gamma * d;
  enforce_all = enforce_all || profile == "strict";
}

double ParameterLadder::eps_at(int j) const {
  double f = T > 0 ? std::min(1.0, static_cast<double>(j) / T) : 1.0;
  return eps0 + (epsT - eps0) * f;
}

nlohmann::json ParameterLadder::to_json() const {
  return {{"profile", profile},
          {"alpha", alpha},
          {"beta", beta},
          {"gamma", gamma},
          {"mu", mu},
          {"eps", eps},
          {"eps0", eps0},
          {"epsT", epsT},
          {"eps_prime", eps_prime},
          {"t", t},
          {"T", T},
          {"d", d},
          {"dA", dA},
          {"dB", dB},
          {"matcher_tol", matcher_tol},
          {"round_retries", round_retries},
          {"matcher_restarts", matcher_restarts},
          {"completion_retries", completion_retries},
          {"registry_budget", registry_budget},
          {"sample_budget", sample_budget},
          {"enforce_all", enforce_all},
          {"seed", seed}};
}

ParameterLadder ParameterLadder::from_json(const nlohmann::json& j) {
  ParameterLadder L = from_profile(j.value("profile", std::string("desk")));
  try {
    L.alpha = j.value("alpha", L.alpha);
    L.beta = j.value("beta", L.beta);
    L.gamma = j.value("gamma", L.gamma);
    L.mu = j.value("mu", L.mu);
    L.eps = j.value("eps", L.eps);
    L.eps0 = j.value("eps0", L.eps0);
    L.epsT = j.value("epsT", L.epsT);
    L.eps_prime = j.value("eps_prime", L.eps_prime);
    L.t = j.value("t", L.t);
    L.T = j.value("T", L.T);
    L.d = j.value("d", L.d);
    L.dA = j.value("dA", L.dA);
    L.dB = j.value("dB", L.dB);
    L.matcher_tol = j.value("matcher_tol", L.matcher_tol);
    L.round_retries = j.value("round_retries", L.round_retries);
    L.matcher_restarts = j.value("matcher_restarts", L.matcher_restarts);
    L.completion_retries = j.value("completion_retries", L.completion_retries);
    L.registry_budget = j.value("registry_budget", L.registry_budget);
    L.sample_budget = j.value("sample_budget", L.sample_budget);
    L.enforce_all = j.value("enforce_all", L.enforce_all);
    L.seed = j.value("seed", L.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("ladder: ") + e.what());
  }
  return L;
}

ParameterLadder ParameterLadder::from_profile(const std::string& name) {
  ParameterLadder L;
  if (name == "desk") return L;
  if (name == "strict") {
    L.profile = "strict";
    L.enforce_all = true;
    return L;
  }
  throw InputError("ladder: unknown tolerance profile '" + name + "'");
}

nlohmann::json Assertion::to_json() const {
  return {{"q", q},         {"clause", clause},     {"checked", checked}, {"violations", violations},
          {"worst", worst}, {"enforced", enforced}, {"detail", detail}};
}

// ---- augmentation ------------------------------------------------------------

std::vector<std::pair<VSet, std::vector<int>>> relevant_reduced_edges(const KGraph& reduced,
                                                                      const std::vector<bool>& embedded, int q) {
  std::vector<std::pair<VSet, std::vector<int>>> out;
  for (auto id : reduced.incident(static_cast<Vertex>(q))) {
    const auto& re = reduced.edge(id);
    std::vector<int> open, others;
    for (Vertex c : re) {
      if (static_cast<int>(c) == q) continue;
      others.push_back(static_cast<int>(c));
      if (!embedded[c]) open.push_back(static_cast<int>(c));
    }
    if (open.size() > 1) continue;
    out.push_back({re, open.empty() ? others : open});
  }
  return out;
}

namespace {

// Edges of the constraint graph lying over exactly the clusters of re.
std::vector<std::uint32_t> edges_over(const ConstraintGraph& cg, const std::vector<int>& parts, const VSet& re,
                                      const std::vector<Vertex>& some_cluster) {
  std::set<std::uint32_t> ids;
  for (Vertex x : some_cluster)
    for (auto id : cg.h.incident(x))
      if (clusters_of(parts, cg.h.edge(id)) == re) ids.insert(id);
  return {ids.begin(), ids.end()};
}

bool pair_in_real_edge(const ConstraintGraph& cg, Vertex a, Vertex b) {
  for (auto id : cg.h.incident(a)) {
    if (cg.synthetic(id)) continue;
    const auto& e = cg.h.edge(id);
    if (std::binary_search(e.begin(), e.end(), b)) return true;
  }
  return false;
}

// Number of vertex pairs of a prospective edge that lie in a real edge.
int real_pair_count(const ConstraintGraph& cg, const std::vector<Vertex>& e) {
  int bad = 0;
  for (std::size_t a = 0; a < e.size(); ++a)
    for (std::size_t b = a + 1; b < e.size(); ++b)
      if (pair_in_real_edge(cg, e[a], e[b])) ++bad;
  return bad;
}

void add_owner(VSet& owners, Vertex x) {
  auto it = std::lower_bound(owners.begin(), owners.end(), x);
  if (it == owners.end() || *it != x) owners.insert(it, x);
}

}  // namespace

AugmentReport augment_guests(PackingState& s, const KGraph& reduced, int q, std::mt19937_64& rng) {
  if (q < 0 || q >= s.r) throw InputError("augment_guests: cluster out of range");
  AugmentReport rep;
  rep.cluster = q;
  rep.added.assign(s.guests.size(), 0);
  rep.b.assign(s.r, 0);
  const auto rel = relevant_reduced_edges(reduced, s.embedded, q);
  for (const auto& [re, cls] : rel)
    for (int c : cls) ++rep.b[c];

  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    auto& cg = s.cons[h];
    const auto& parts = s.guest_parts[h];
    for (const auto& [re, cls] : rel) {
      std::vector<std::vector<Vertex>> X(re.size());
      for (std::size_t a = 0; a < re.size(); ++a) X[a] = s.guest_cluster(h, static_cast<int>(re[a]));
      auto ids = edges_over(cg, parts, re, X[0]);
      std::map<Vertex, std::vector<std::uint32_t>> at;  // ids ascending
      for (auto id : ids)
        for (Vertex y : cg.h.edge(id)) at[y].push_back(id);

      // the lowest edge of a relevant vertex is its H_+^c edge
      for (std::size_t a = 0; a < re.size(); ++a) {
        if (!contains(cls, static_cast<int>(re[a]))) continue;
        for (Vertex x : X[a]) {
          auto it = at.find(x);
          if (it == at.end()) continue;
          auto first = it->second.front();
          if (cg.synthetic(first)) add_owner(cg.b_owners[first - cg.real_edges], x);
        }
      }

      std::vector<std::vector<Vertex>> free(re.size()), ones(re.size());
      std::size_t m = 0;
      for (std::size_t a = 0; a < re.size(); ++a) {
        for (Vertex x : X[a]) {
          auto it = at.find(x);
          if (it == at.end()) free[a].push_back(x);
          else if (it->second.size() == 1) ones[a].push_back(x);
        }
        std::shuffle(free[a].begin(), free[a].end(), rng);
        std::shuffle(ones[a].begin(), ones[a].end(), rng);
        if (contains(cls, static_cast<int>(re[a]))) m = std::max(m, free[a].size());
      }
      if (m == 0) continue;

      // slots[j][a]: vertex of cluster re[a] in new edge j
      std::vector<std::vector<Vertex>> slots(m, std::vector<Vertex>(re.size()));
      std::vector<char> padded(m, 0);
      std::set<std::uint32_t> touched;  // existing edges that received a degree-two vertex
      for (std::size_t a = 0; a < re.size(); ++a) {
        std::size_t need = m > free[a].size() ? m - free[a].size() : 0;
        std::vector<std::size_t> open;
        for (std::size_t j = 0; j < m; ++j)
          if (!padded[j]) open.push_back(j);
        if (open.size() < need)
          throw PreconditionError("augment_guests: an edge would hold two vertices of degree two");
        std::shuffle(open.begin(), open.end(), rng);
        std::vector<char> pad_here(m, 0);
        for (std::size_t u = 0; u < need; ++u) pad_here[open[u]] = 1;
        std::size_t fi = 0, oi = 0;
        for (std::size_t j = 0; j < m; ++j) {
          if (!pad_here[j]) {
            slots[j][a] = free[a][fi++];
            continue;
          }
          while (oi < ones[a].size() && touched.count(at[ones[a][oi]].front())) ++oi;
          if (oi == ones[a].size())
            throw PreconditionError("augment_guests: cluster too small to pad without a second degree-two vertex");
          slots[j][a] = ones[a][oi];
          touched.insert(at[ones[a][oi]].front());
          ++oi;
          padded[j] = 1;
        }
      }

      // swap repair for condition (c), applied to every pair of a new edge
      auto pad_count = [&](std::size_t j) {
        int p = 0;
        for (std::size_t a = 0; a < re.size(); ++a)
          if (at.count(slots[j][a])) ++p;
        return p;
      };
      std::vector<int> bad(m);
      for (std::size_t j = 0; j < m; ++j) bad[j] = real_pair_count(cg, slots[j]);
      std::size_t budget = 400 * m + 400;
      for (std::size_t it = 0; it < budget; ++it) {
        std::vector<std::size_t> viol;
        for (std::size_t j = 0; j < m; ++j)
          if (bad[j]) viol.push_back(j);
        if (viol.empty()) break;
        std::size_t j1 = viol[pick(rng, viol)];
        std::size_t j2 = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        std::size_t a = std::uniform_int_distribution<std::size_t>(0, re.size() - 1)(rng);
        if (j1 == j2) continue;
        std::swap(slots[j1][a], slots[j2][a]);
        int b1 = real_pair_count(cg, slots[j1]), b2 = real_pair_count(cg, slots[j2]);
        if (b1 + b2 > bad[j1] + bad[j2] || pad_count(j1) > 1 || pad_count(j2) > 1) {
          std::swap(slots[j1][a], slots[j2][a]);
          continue;
        }
        bad[j1] = b1;
        bad[j2] = b2;
      }
      for (std::size_t j = 0; j < m; ++j)
        if (bad[j]) throw PreconditionError("augment_guests: a synthetic pair lies in a real edge after repair");

      for (std::size_t j = 0; j < m; ++j) {
        VSet owners;
        for (std::size_t a = 0; a < re.size(); ++a) {
          Vertex x = slots[j][a];
          if (contains(cls, static_cast<int>(re[a])) && !at.count(x)) owners.push_back(x);
        }
        cg.add_synthetic(sorted_set(slots[j]), owners);
        ++rep.added[h];
      }
    }
  }
  return rep;
}

std::string check_augmentation(const PackingState& s, const KGraph& reduced, int q) {
  auto emb = s.embedded;
  emb[q] = false;
  const auto rel = relevant_reduced_edges(reduced, emb, q);
  std::vector<int> b(s.r, 0);
  for (const auto& [re, cls] : rel)
    for (int c : cls) ++b[c];
  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    const auto& cg = s.cons[h];
    const auto& parts = s.guest_parts[h];
    std::map<Vertex, int> seen_b;  // B-visible back-edges over relevant classes
    for (const auto& [re, cls] : rel) {
      auto ids = edges_over(cg, parts, re, s.guest_cluster(h, static_cast<int>(re[0])));
      std::map<Vertex, int> deg;
      for (auto id : ids)
        for (Vertex y : cg.h.edge(id)) ++deg[y];
      for (Vertex c : re) {
        bool relevant = contains(cls, static_cast<int>(c));
        for (Vertex x : s.guest_cluster(h, static_cast<int>(c))) {
          int dg = deg.count(x) ? deg[x] : 0;
          if (relevant && (dg < 1 || dg > 2)) return "(a): relevant vertex degree outside {1,2}";
          if (static_cast<int>(c) == q && dg > 2) return "(a): cluster-q vertex degree above 2";
          if (dg > 2) return "(a): degree above 2";
        }
      }
      for (auto id : ids) {
        int twos = 0;
        for (Vertex y : cg.h.edge(id)) twos += deg[y] == 2;
        if (twos > 1) return "(b): edge with two degree-two vertices";
        if (!cg.synthetic(id)) continue;
        const auto& e = cg.h.edge(id);
        if (real_pair_count(cg, std::vector<Vertex>(e.begin(), e.end())))
          return "(c): synthetic pair inside a real edge";
      }
      for (auto id : ids)
        for (Vertex y : cg.h.edge(id))
          if (contains(cls, parts[y]) && cg.sees(Side::B, id, y)) ++seen_b[y];
    }
    for (int c = 0; c < s.r; ++c) {
      if (c == q || b[c] == 0) continue;
      for (Vertex x : s.guest_cluster(h, c))
        if ((seen_b.count(x) ? seen_b[x] : 0) != b[c]) return "back-degree: sum over relevant classes differs from b_i";
    }
  }
  return {};
}

// ---- auxiliary hypergraph ------------------------------------------------------

AuxHypergraph build_aux_hypergraph(const EdgeLabelling& l) {
  AuxHypergraph aux;
  aux.width = l.width;
  std::map<std::pair<std::size_t, Vertex>, Vertex> xid, vid;
  std::map<VSet, Vertex> lid;
  Vertex next = 0;
  auto id_of = [&](auto& m, const auto& key) {
    auto [it, fresh] = m.emplace(key, next);
    if (fresh) ++next;
    return it->second;
  };
  std::vector<VSet> raw;
  std::vector<std::size_t> pad;
  for (const auto& e : l.edges) {
    VSet f{id_of(xid, std::make_pair(e.guest, e.x)), id_of(vid, std::make_pair(e.guest, e.v))};
    for (const auto& g : e.labels) f.push_back(id_of(lid, g));
    raw.push_back(f);
    pad.push_back(l.width - e.labels.size());
  }
  aux.label_vertices = lid.size();
  for (std::size_t a = 0; a < raw.size(); ++a)
    for (std::size_t u = 0; u < pad[a]; ++u) {
      raw[a].push_back(next++);
      ++aux.dummy_vertices;
    }
  aux.h.num_vertices = next;
  aux.h.uniformity = static_cast<int>(l.width + 2);
  std::set<VSet> seen;
  for (std::size_t a = 0; a < raw.size(); ++a) {
    auto f = sorted_set(raw[a]);
    if (!seen.insert(f).second) throw std::logic_error("build_aux_hypergraph: repeated auxiliary edge");
    aux.h.edges.push_back(std::move(f));
    aux.back.push_back(a);
  }
  return aux;
}

std::vector<std::size_t> pull_back(const AuxHypergraph& aux, const std::vector<std::uint32_t>& matching) {
  std::vector<std::size_t> out;
  for (auto id : matching) out.push_back(aux.back.at(id));
  std::sort(out.begin(), out.end());
  return out;
}

// ---- one round -----------------------------------------------------------------

nlohmann::json RoundReport::to_json() const {
  nlohmann::json as = nlohmann::json::array();
  for (const auto& a : assertions) as.push_back(a.to_json());
  return {{"cluster", cluster},
          {"attempts", attempts},
          {"candidacy_edges", candidacy_edges},
          {"aux_edges", aux_edges},
          {"aux_delta", aux_delta},
          {"aux_delta_bound", aux_delta_bound},
          {"label_width", label_width},
          {"matcher_ok", matcher_ok},
          {"matcher_ratios", matcher_ratios},
          {"min_coverage", min_coverage},
          {"local_ratio", local_ratio},
          {"assertions", as}};
}

ClusterOutcome pack_cluster(PackingState& s, CandidacyCollection& c, const KGraph& reduced, int q,
                            const ParameterLadder& ladder, std::mt19937_64& rng, const RoundCheck& check) {
  if (q < 0 || q >= s.r || s.embedded[q]) throw InputError("pack_cluster: cluster must be unembedded");
  const std::size_t G = s.guests.size();
  const auto& vq = s.host_clusters[q];
  augment_guests(s, reduced, q, rng);

  auto l = build_labelling(s, c, q);
  auto aux = build_aux_hypergraph(l);
  auto stats = degree_stats(aux.h);

  ClusterOutcome out;
  auto& rep = out.report;
  rep.cluster = q;
  rep.candidacy_edges = l.edges.size();
  rep.aux_edges = aux.h.edges.size();
  rep.aux_delta = stats.delta;
  rep.label_width = l.width;
  double xs_total = 0;
  std::vector<std::vector<Vertex>> X(G);
  for (std::size_t h = 0; h < G; ++h) {
    X[h] = s.guest_cluster(h, q);
    if (X[h].size() > vq.size()) throw PreconditionError("pack_cluster: guest cluster larger than host cluster");
    xs_total += static_cast<double>(X[h].size());
  }
  const double n = static_cast<double>(vq.size());
  // measured d0: candidacy edges per guest vertex and host vertex
  const double d0 = xs_total > 0 && n > 0 ? static_cast<double>(l.edges.size()) / (xs_total * n) : 0;
  rep.aux_delta_bound = (1 + std::pow(ladder.eps, 2.0 / 3)) * d0 * n;

  std::vector<TupleWeight> weights;
  {
    std::vector<TupleWeight> per(G, TupleWeight(1));
    for (std::uint32_t a = 0; a < aux.h.edges.size(); ++a) per[l.edges[aux.back[a]].guest].add({a}, 1.0);
    for (auto& w : per)
      if (!w.support().empty()) weights.push_back(std::move(w));
  }
  MatcherOptions mo;
  mo.tol = ladder.matcher_tol;
  mo.additive_slack = std::pow(std::max(n, 1.0), ladder.eps);
  mo.restarts = ladder.matcher_restarts;
  mo.throw_on_failure = false;

  std::string last_failure;
  for (int attempt = 1; attempt <= ladder.round_retries; ++attempt) {
    rep.attempts = attempt;
    MatcherResult mr;
    if (!aux.h.edges.empty()) mr = pseudorandom_matching(aux.h, weights, mo, rng);
    else mr.ok = true;
    rep.matcher_ok = mr.ok;
    rep.matcher_ratios = mr.ratios;
    auto chosen = pull_back(aux, mr.matching);
    if (!conflict_free(l, chosen)) throw std::logic_error("pack_cluster: matching pulled back to a conflicting packing");

    ClusterExtension ext;
    ext.cluster = q;
    ext.chosen = chosen;
    ext.sigma.assign(G, {});
    ext.sigma_plus.assign(G, {});
    ext.coverage.assign(G, 1.0);
    for (auto e : chosen) ext.sigma[l.edges[e].guest][l.edges[e].x] = l.edges[e].v;
    double minc = 1;
    for (std::size_t h = 0; h < G; ++h) {
      if (!X[h].empty()) ext.coverage[h] = static_cast<double>(ext.sigma[h].size()) / X[h].size();
      minc = std::min(minc, ext.coverage[h]);
    }
    rep.min_coverage = minc;
    rep.local_ratio = l.edges.empty() ? 1.0 : static_cast<double>(chosen.size()) * d0 * n / l.edges.size();
    if (minc < 1 - ladder.eps_prime) {
      last_failure = "coverage |X_0^sigma| >= (1-eps')n (min " + std::to_string(minc) + ")";
      continue;
    }
    if (ladder.enforce_all && !mr.ok) {
      last_failure = "matcher weight contract";
      continue;
    }

    // uniform cluster-injective extension per guest
    for (std::size_t h = 0; h < G; ++h) {
      std::set<Vertex> used;
      std::vector<Vertex> open_x;
      for (Vertex x : X[h]) {
        auto it = ext.sigma[h].find(x);
        if (it == ext.sigma[h].end()) open_x.push_back(x);
        else {
          ext.sigma_plus[h][x] = it->second;
          used.insert(it->second);
        }
      }
      std::vector<Vertex> open_v;
      for (Vertex v : vq)
        if (!used.count(v)) open_v.push_back(v);
      std::shuffle(open_v.begin(), open_v.end(), rng);
      for (std::size_t a = 0; a < open_x.size(); ++a) ext.sigma_plus[h][open_x[a]] = open_v[a];
    }

    // apply, keeping what a retry needs to undo
    auto phi0 = s.phi, phip0 = s.phi_plus;
    auto c0 = c;
    for (std::size_t h = 0; h < G; ++h) {
      for (const auto& [x, v] : ext.sigma[h]) s.phi[h][x] = v;
      for (const auto& [x, v] : ext.sigma_plus[h]) s.phi_plus[h][x] = v;
    }
    s.embedded[q] = true;
    for (std::size_t h = 0; h < G; ++h) {
      c.a[h][q].reset();
      for (int i = 0; i < s.r; ++i) {
        if (c.a[h][i]) update_single(*c.a[h][i], s, phip0[h]);
        if (c.b[h][i]) update_single(*c.b[h][i], s, phip0[h]);
      }
    }
    rep.assertions.clear();
    if (check) rep.assertions = check(s, c, q + 1);
    std::string failed;
    for (const auto& a : rep.assertions)
      if (a.enforced && !a.ok()) {
        failed = a.clause;
        break;
      }
    if (!failed.empty()) {
      s.phi = std::move(phi0);
      s.phi_plus = std::move(phip0);
      s.embedded[q] = false;
      c = std::move(c0);
      last_failure = failed;
      continue;
    }
    for (auto e : chosen)
      for (const auto& g : l.edges[e].labels) out.used.push_back(g);
    out.ext = std::move(ext);
    return out;
  }
  throw RoundFailure("pack_cluster: cluster " + std::to_string(q) + ": " + last_failure + " after " +
                     std::to_string(ladder.round_retries) + " attempts");
}

// ---- registry --------------------------------------------------------------------

namespace {

PatternQuad zero_quad(int r) {
  PatternVector z(r, 0);
  return {z, z, z, z};
}

// Random J ⊆ I with a random disjoint J_X, J_V inside it.
void random_js(const std::vector<int>& I, std::mt19937_64& rng, EdgeTesterSpec& t) {
  std::uniform_int_distribution<int> coin(0, 1), three(0, 2);
  for (int i : I) {
    if (!coin(rng)) continue;
    t.J.push_back(i);
    int w = three(rng);
    if (w == 1) t.JX.push_back(i);
    if (w == 2) t.JV.push_back(i);
  }
}

}  // namespace

TesterRegistry build_registry(const PackingState& s, const KGraph& reduced, const TesterSuite& suite,
                              const ParameterLadder& ladder, std::mt19937_64& rng) {
  TesterRegistry reg;
  reg.hit = suite.vertices;
  if (s.guests.empty() || s.r == 0) return reg;
  std::vector<std::string> kinds;
  if (!suite.vertices.empty()) kinds.push_back("vertex");
  if (reduced.num_edges()) kinds.push_back("reduced");
  kinds.push_back("leftover");
  if (reduced.num_edges()) kinds.push_back("pair");
  auto centre_in = [&](int i) { return s.host_clusters[i][pick(rng, s.host_clusters[i])]; };

  std::size_t guard = 0;
  while (reg.edge.size() < ladder.registry_budget && guard++ < 20 * ladder.registry_budget) {
    const auto& kind = kinds[pick(rng, kinds)];
    EdgeTesterSpec t;
    std::map<PatternQuad, std::vector<GuestTuple>> groups;
    if (kind == "vertex") {
      const auto& vt = suite.vertices[pick(rng, suite.vertices)];
      t.I = vt.I;
      t.centres = vt.centres;
      t.cap = vt.cap;
      random_js(t.I, rng, t);
      std::map<PatternQuad, std::map<GuestTuple, double>> ws;
      for (const auto& [tup, w] : vt.w) {
        if (t.I.size() > 1 && !inside_some_edge(s.guests[tup.guest], tup.xs)) continue;
        ws[pattern_quad(s.guests[tup.guest], s.guest_parts[tup.guest], s.r, t.I, tup.xs, t.J)][tup] = w;
      }
      if (ws.empty()) continue;
      auto it = ws.begin();
      std::advance(it, std::uniform_int_distribution<std::size_t>(0, ws.size() - 1)(rng));
      t.P = it->first;
      t.w0 = it->second;
    } else if (kind == "reduced" || kind == "pair") {
      const auto& re = reduced.edge(std::uniform_int_distribution<std::size_t>(0, reduced.num_edges() - 1)(rng));
      std::size_t h = pick(rng, s.guests);
      if (kind == "reduced") {
        for (Vertex c : re) t.I.push_back(static_cast<int>(c));
        random_js(t.I, rng, t);
        groups = classify(s.guests, s.guest_parts, s.r, t.I, t.J);
      } else {
        std::size_t a = std::uniform_int_distribution<std::size_t>(0, re.size() - 1)(rng);
        std::size_t b = (a + 1 + std::uniform_int_distribution<std::size_t>(0, re.size() - 2)(rng)) % re.size();
        int j = static_cast<int>(re[a]), jx = static_cast<int>(re[b]);
        t.I = {std::min(j, jx), std::max(j, jx)};
        t.J = t.I;
        t.JX = {jx};
        auto all = classify({s.guests[h]}, {s.guest_parts[h]}, s.r, t.I, t.J);
        for (auto& [P, tuples] : all) {
          if (pattern_norm(P.pA) || pattern_norm(P.ppA)) continue;
          for (auto& tup : tuples) tup.guest = static_cast<std::uint32_t>(h);
          groups[P] = std::move(tuples);
        }
      }
      if (groups.empty()) continue;
      for (int i : t.I) t.centres.push_back(centre_in(i));
      auto it = groups.begin();
      std::advance(it, std::uniform_int_distribution<std::size_t>(0, groups.size() - 1)(rng));
      t.P = it->first;
      for (const auto& tup : it->second) t.w0[tup] = 1.0;
    } else {  // leftover
      int j = std::uniform_int_distribution<int>(0, s.r - 1)(rng);
      std::size_t h = pick(rng, s.guests);
      auto xs = s.guest_cluster(h, j);
      if (xs.empty()) continue;
      t.I = t.J = t.JX = {j};
      t.centres = {centre_in(j)};
      t.P = zero_quad(s.r);
      for (Vertex x : xs) t.w0[{static_cast<std::uint32_t>(h), {x}}] = 1.0;
    }
    validate_edge_tester(t, s);
    reg.edge.push_back(std::move(t));
    reg.kind.push_back(kind);
  }
  return reg;
}

double edge_tester_excess(const EdgeTesterSpec& t, double value, const PackingState& s, const ClusterSchedule& sch,
                          const ParameterLadder& ladder, int q, double n) {
  auto done = [&](int i) { return i < q; };
  std::vector<int> Iq;
  for (int i : t.I)
    if (!done(i) || contains(t.J, i)) Iq.push_back(i);
  if (Iq.empty()) return std::nan("");
  bool clean = true;
  for (int j : t.JX) clean = clean && !done(j);
  for (int j : t.JV) clean = clean && !done(j);
  auto norm_done = [&](const PatternVector& p) {
    int m = 0;
    for (int i = 0; i < q && i < static_cast<int>(p.size()); ++i) m += p[i];
    return m;
  };
  double f = std::pow(ladder.dA, norm_done(t.P.pA) - norm_done(t.P.ppA)) *
             std::pow(ladder.dB, norm_done(t.P.pB) - norm_done(t.P.ppB));
  for (int i : Iq) f *= std::pow(contains(t.J, i) ? ladder.dB : ladder.dA, sch.m_i(i, q));
  int fixed = 0;
  for (int i : t.I)
    if (done(i) && !contains(t.J, i)) ++fixed;
  f *= t.total() / std::pow(n, fixed);
  double e = ladder.eps_at(sch.c_I(Iq, q));
  double expected = clean ? f : 0.0;
  double slack = e * f + std::pow(n, e);
  (void)s;
  return std::abs(value - expected) - slack;
}

// ---- S(q) ------------------------------------------------------------------------

std::vector<Assertion> check_sq(const PackingState& s, const CandidacyCollection& c, const ClusterSchedule& sch,
                                const TesterRegistry& reg, const TesterSuite& suite, const ParameterLadder& ladder,
                                int q, std::mt19937_64& rng) {
  const double n = mean_cluster_size(s);
  const std::size_t G = s.guests.size();
  const bool enf = ladder.enforce_all;
  auto make = [&](const std::string& clause) {
    Assertion a;
    a.q = q;
    a.clause = clause;
    a.enforced = enf;
    return a;
  };
  std::vector<Assertion> out;
  std::vector<long> pos(s.host_parts.size(), -1);

  // (a) coverage of the embedded clusters
  {
    auto a = make("a:coverage");
    for (std::size_t h = 0; h < G; ++h)
      for (int i = 0; i < q; ++i) {
        auto xs = s.guest_cluster(h, i);
        std::size_t emb = 0;
        for (Vertex x : xs) emb += s.phi[h][x] >= 0;
        note(a, (1 - ladder.eps_at(sch.c_i(i, q))) * xs.size() - static_cast<double>(emb));
      }
    out.push_back(a);
  }
  // (a) super-regular and well-intersecting candidacy
  {
    auto sr = make("a:super-regular"), wi = make("a:well-intersecting");
    struct Job {
      std::size_t h;
      int i;
      Side z;
    };
    std::vector<Job> jobs;
    for (std::size_t h = 0; h < G; ++h)
      for (int i = 0; i < s.r; ++i) {
        if (i >= q && c.a[h][i]) jobs.push_back({h, i, Side::A});
        if (c.b[h][i]) jobs.push_back({h, i, Side::B});
      }
    if (jobs.size() > ladder.sample_budget) {
      std::shuffle(jobs.begin(), jobs.end(), rng);
      jobs.resize(ladder.sample_budget);
    }
    for (const auto& j : jobs) {
      const auto& sc = j.z == Side::A ? *c.a[j.h][j.i] : *c.b[j.h][j.i];
      if (sc.certs.empty()) continue;
      double e = ladder.eps_at(sch.c_i(j.i, q));
      double d = std::pow(j.z == Side::A ? ladder.dA : ladder.dB, sch.m_i(j.i, q));
      auto w = is_super_regular(as_bigraph(sc, s, pos), e, d);
      note(sr, w.ok ? 0.0 : std::max(std::abs(w.degree_ratio - 1) - e, 1e-9));
      auto wint = check_well_intersecting(sc, e, static_cast<std::size_t>(sch.c_i(j.i, q) * std::sqrt(ladder.t)), n);
      double excess = std::max(static_cast<double>(wint.max_family) -
                                   std::floor(sch.c_i(j.i, q) * std::sqrt(ladder.t)),
                               static_cast<double>(wint.max_partners) - wint.partner_bound);
      note(wi, wint.ok ? std::min(excess, 0.0) : std::max(excess, 1e-9));
    }
    out.push_back(sr);
    out.push_back(wi);
  }
  // (b) edge testers
  {
    auto a = make("b:edge-testers");
    for (const auto& t : reg.edge) {
      double v = eval_general_edge_tester(t, s, c);
      double ex = edge_tester_excess(t, v, s, sch, ladder, q, n);
      if (!std::isnan(ex)) note(a, ex);
    }
    out.push_back(a);
  }
  // (c) pair bound, sampled
  {
    auto a = make("c:pair-bound");
    const auto& ga = s.ga;
    auto last = [&](const VSet& e) {
      Vertex best = e[0];
      for (Vertex v : e)
        if (s.host_parts[v] > s.host_parts[best]) best = v;
      return best;
    };
    std::size_t tries = std::min<std::size_t>(ladder.sample_budget / 10 + 1, 20);
    for (std::size_t k = 0; k < tries && ga.num_edges(); ++k) {
      const auto& g = ga.edge(pick(rng, ga.edges()));
      Vertex w = last(g);
      auto cg = clusters_of(s.host_parts, g);
      std::vector<std::uint32_t> others;
      for (auto id : ga.incident(w)) {
        const auto& e = ga.edge(id);
        if (last(e) == w && clusters_of(s.host_parts, e) != cg) others.push_back(id);
      }
      if (others.empty()) continue;
      const auto& hh = ga.edge(others[pick(rng, others)]);
      auto ch = clusters_of(s.host_parts, hh);
      std::vector<int> ID, Ionly, Jonly;
      auto Iv = std::vector<int>(cg.begin(), cg.end()), Jv = std::vector<int>(ch.begin(), ch.end());
      std::set<int> uni(Iv.begin(), Iv.end());
      uni.insert(Jv.begin(), Jv.end());
      int done = 0;
      for (int i : uni) done += i < q;
      for (int i : Iv)
        if (i >= q) Ionly.push_back(i);
      for (int i : Jv)
        if (i >= q) Jonly.push_back(i);
      double e = std::max(ladder.eps_at(sch.c_I(Ionly, q)), ladder.eps_at(sch.c_I(Jonly, q)));
      double bound = std::max(std::pow(n, s.k - done + e), std::pow(n, e));
      double cnt = static_cast<double>(suitable_pairs_E(s, c, g, hh).size());
      note(a, cnt - bound);
    }
    out.push_back(a);
  }
  // (d) hit testers
  {
    auto a = make("d:hit");
    for (const auto& vt : reg.hit) {
      const auto& I = vt.I;
      for (std::size_t mask = 1; mask < (1u << I.size()); ++mask) {
        std::vector<int> J, jd, jopen;
        for (std::size_t b = 0; b < I.size(); ++b)
          if (mask >> b & 1) {
            J.push_back(I[b]);
            (I[b] < q ? jd : jopen).push_back(I[b]);
          }
        if (jd.empty()) continue;
        double lhs = 0;
        for (const auto& [tup, w] : vt.w) {
          if (!inside_some_edge(s.guests[tup.guest], tup.xs)) continue;
          bool hit = true;
          for (std::size_t b = 0; b < I.size() && hit; ++b)
            if (contains(jd, I[b])) hit = s.phi_plus[tup.guest][tup.xs[b]] == static_cast<long>(vt.centres[b]);
          if (hit) lhs += w;
        }
        double e = ladder.eps_at(sch.c_I(jopen, q));
        note(a, lhs - (vt.total() / std::pow(n, jd.size() - e) + std::pow(n, e)));
      }
    }
    out.push_back(a);
  }
  // (e) leftover against G_B neighbourhoods, sampled
  {
    auto a = make("e:leftover-typicality");
    if (q > 0 && G > 0) {
      std::vector<std::vector<std::uint32_t>> through(s.r);
      for (std::uint32_t id = 0; id < sch.relabelled.num_edges(); ++id)
        for (Vertex cl : sch.relabelled.edge(id)) through[cl].push_back(id);
      for (std::size_t k = 0; k < ladder.sample_budget; ++k) {
        std::size_t h = std::uniform_int_distribution<std::size_t>(0, G - 1)(rng);
        int i = std::uniform_int_distribution<int>(0, q - 1)(rng);
        if (through[i].empty()) continue;
        std::vector<VSet> fam;
        int size = std::uniform_int_distribution<int>(1, ladder.t)(rng);
        for (int u = 0; u < size; ++u) {
          const auto& re = sch.relabelled.edge(through[i][pick(rng, through[i])]);
          VSet S;
          for (Vertex cl : re)
            if (static_cast<int>(cl) != i) S.push_back(s.host_clusters[cl][pick(rng, s.host_clusters[cl])]);
          fam.push_back(sorted_set(S));
        }
        std::sort(fam.begin(), fam.end());
        fam.erase(std::unique(fam.begin(), fam.end()), fam.end());
        VSet nb = set_intersect(s.host_clusters[i], joint_neighborhood(s.gb, fam));
        VSet img;
        for (Vertex x : s.guest_cluster(h, i))
          if (s.phi[h][x] >= 0) img.push_back(static_cast<Vertex>(s.phi[h][x]));
        auto left = set_minus(nb, sorted_set(img));
        note(a, static_cast<double>(left.size()) - ladder.epsT * nb.size());
      }
    }
    out.push_back(a);
  }
  // (f) set testers on embedded clusters
  {
    auto a = make("f:set-testers");
    for (const auto& t : suite.sets) {
      if (t.cluster >= q) continue;
      double expect = static_cast<double>(t.W.size());
      for (const auto& [g, ys] : t.Y) expect *= static_cast<double>(ys.size()) / n;
      double v = static_cast<double>(eval_set_tester(t, s.phi));
      note(a, std::abs(v - expect) - ladder.alpha * ladder.alpha * n);
    }
    out.push_back(a);
  }
  // (g) vertex testers on embedded clusters
  {
    auto a = make("g:vertex-testers");
    for (const auto& t : suite.vertices) {
      bool inside = std::all_of(t.I.begin(), t.I.end(), [&](int i) { return i < q; });
      if (!inside) continue;
      double expect = t.total() / std::pow(n, t.I.size());
      double v = eval_vertex_tester(t, s.phi);
      note(a, std::abs(v - expect) - (ladder.epsT * expect + std::pow(n, ladder.epsT)));
    }
    out.push_back(a);
  }
  return out;
}

// ---- driver ----------------------------------------------------------------------

namespace {

TesterSuite relabel_suite(const TesterSuite& in, const ClusterSchedule& sch) {
  TesterSuite out;
  for (auto t : in.sets) {
    t.cluster = sch.position.at(t.cluster);
    out.sets.push_back(std::move(t));
  }
  for (const auto& t : in.vertices) {
    std::vector<std::size_t> perm(t.I.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return sch.position.at(t.I[a]) < sch.position.at(t.I[b]); });
    VertexTester u;
    u.cap = t.cap;
    for (auto a : perm) {
      u.I.push_back(sch.position.at(t.I[a]));
      u.centres.push_back(t.centres[a]);
    }
    for (const auto& [tup, w] : t.w) {
      GuestTuple g{tup.guest, {}};
      for (auto a : perm) g.xs.push_back(tup.xs[a]);
      u.w[g] = w;
    }
    out.vertices.push_back(std::move(u));
  }
  return out;
}

void require_matchings(const BlowupInstance& b) {
  for (std::size_t h = 0; h < b.guests.size(); ++h) {
    std::map<VSet, std::set<Vertex>> seen;
    for (const auto& e : b.guests[h].edges()) {
      auto& used = seen[clusters_of(b.guest_parts[h], e)];
      for (Vertex y : e)
        if (!used.insert(y).second)
          throw PreconditionError("run_iterative: guest " + std::to_string(h) +
                                  " is not a matching inside a reduced class; refine first");
    }
  }
}

}  // namespace

PartialPacking run_iterative(const BlowupInstance& b, const TesterSuite& suite, const ParameterLadder& ladder,
                             std::mt19937_64& rng, double alpha_schedule) {
  PartialPacking p;
  p.ladder = ladder;
  p.ladder.finalize(b.k);
  const auto& L = p.ladder;
  auto viol = validate_blowup(b);
  if (!viol.empty()) throw InputError("run_iterative: invalid blow-up instance: " + viol[0].kind + ": " + viol[0].detail);
  for (std::size_t h = 0; h < b.guests.size(); ++h)
    for (int i = 0; i < b.r; ++i)
      if (b.guest_cluster(h, i).size() > b.host_cluster(i).size())
        throw PreconditionError("run_iterative: guest cluster larger than its host cluster");
  require_matchings(b);

  p.schedule = build_schedule(b.reduced, alpha_schedule > 0 ? alpha_schedule : L.alpha);
  p.inst = relabel(b, p.schedule);
  SplitOptions so;
  so.eps0 = L.eps0;
  so.t = L.t;
  so.samples = L.sample_budget;
  so.retries = L.round_retries;
  so.enforce = L.enforce_all;
  auto split = split_host(p.inst.host, L.gamma, L.d, rng, so, p.inst.host_parts, &p.inst.reduced);
  p.split = split.report;
  {
    Assertion a;
    a.q = 0;
    a.clause = "split:typicality";
    a.checked = split.report.checked;
    a.violations = split.report.ok ? 0 : 1;
    a.worst = std::abs(split.report.worst_deviation) - L.eps0;
    a.enforced = L.enforce_all;
    p.sq_assertions.push_back(a);
  }
  p.state = make_state(p.inst, std::move(split.a), std::move(split.b));
  p.cand = CandidacyCollection::build(p.state);
  p.suite = relabel_suite(suite, p.schedule);
  auto reg = build_registry(p.state, p.inst.reduced, p.suite, L, rng);
  p.registry_size = reg.size();

  for (auto& a : check_sq(p.state, p.cand, p.schedule, reg, p.suite, L, 0, rng)) p.sq_assertions.push_back(a);
  RoundCheck check = [&](const PackingState& s, const CandidacyCollection& c, int q) {
    return check_sq(s, c, p.schedule, reg, p.suite, L, q, rng);
  };
  for (int q = 0; q < p.inst.r; ++q) {
    ClusterOutcome o;
    try {
      o = pack_cluster(p.state, p.cand, p.inst.reduced, q, L, rng, check);
    } catch (const RoundFailure& e) {
      throw RoundFailure("run_iterative: q=" + std::to_string(q) + ": " + e.what());
    }
    p.retries += o.report.attempts - 1;
    for (auto& a : o.report.assertions) p.sq_assertions.push_back(a);
    for (auto& g : o.used) p.used_a.push_back(std::move(g));
    p.rounds.push_back(std::move(o.report));
  }
  std::sort(p.used_a.begin(), p.used_a.end());
  p.leftover_per_cluster.assign(p.inst.r, 0);
  for (std::size_t h = 0; h < p.state.guests.size(); ++h)
    for (int i = 0; i < p.inst.r; ++i) {
      std::size_t left = 0;
      for (Vertex x : p.state.guest_cluster(h, i)) left += p.state.phi[h][x] < 0;
      p.leftover_per_cluster[i] = std::max(p.leftover_per_cluster[i], left);
    }
  return p;
}

}  // namespace hpack
