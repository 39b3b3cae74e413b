#include "hpack/candidacy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <unordered_set>

#include "hpack/errors.hpp"

namespace hpack {

bool ConstraintGraph::sees(Side z, std::uint32_t e, Vertex x) const {
  if (z == Side::A || !synthetic(e)) return true;
  const auto& o = b_owners[e - real_edges];
  return std::binary_search(o.begin(), o.end(), x);
}

std::uint32_t ConstraintGraph::add_synthetic(const VSet& e, const VSet& b_owner) {
  if (!h.add_edge(e)) throw PreconditionError("add_synthetic: edge already present");
  b_owners.push_back(sorted_set(b_owner));
  return static_cast<std::uint32_t>(h.num_edges() - 1);
}

std::vector<Vertex> PackingState::guest_cluster(std::size_t h, int i) const {
  std::vector<Vertex> out;
  for (Vertex x = 0; x < guest_parts[h].size(); ++x)
    if (guest_parts[h][x] == i) out.push_back(x);
  return out;
}

PackingState make_state(const BlowupInstance& b, KGraph ga, KGraph gb) {
  PackingState s;
  s.k = b.k;
  s.r = b.r;
  s.guests = b.guests;
  s.guest_parts = b.guest_parts;
  s.host_parts = b.host_parts;
  s.host_clusters.assign(b.r, {});
  for (Vertex v = 0; v < b.host_parts.size(); ++v) s.host_clusters[b.host_parts[v]].push_back(v);
  s.ga = std::move(ga);
  s.gb = std::move(gb);
  s.embedded.assign(b.r, false);
  for (const auto& g : b.guests) {
    s.phi.emplace_back(g.n(), -1);
    s.phi_plus.emplace_back(g.n(), -1);
    s.cons.emplace_back(g);
  }
  return s;
}

namespace {

bool contains(const std::vector<int>& s, int i) { return std::find(s.begin(), s.end(), i) != s.end(); }

void check_candidate(const PackingState& s, std::size_t h, const std::vector<int>& I,
                     const std::vector<Vertex>& xs, const VSet& vs) {
  if (h >= s.guests.size()) throw InputError("candidacy: guest out of range");
  check_tuple(s.guest_parts[h], I, xs);
  if (vs.size() != I.size()) throw InputError("candidacy: one host vertex per cluster required");
  for (std::size_t a = 0; a < I.size(); ++a)
    if (vs[a] >= s.host_parts.size() || s.host_parts[vs[a]] != I[a])
      throw InputError("candidacy: host vertex outside its cluster");
}

// Image of e \ {x} when every other vertex is mapped and sits in an
// embedded cluster; nullopt otherwise.
std::optional<VSet> embedded_image(const PackingState& s, const Phi& phi, std::size_t h, const VSet& e,
                                   Vertex x) {
  VSet img;
  for (Vertex y : e) {
    if (y == x) continue;
    int cl = s.guest_parts[h][y];
    if (!s.embedded[cl] || phi[y] < 0) return std::nullopt;
    img.push_back(static_cast<Vertex>(phi[y]));
  }
  std::sort(img.begin(), img.end());
  return img;
}

std::optional<VSet> old_image(const Phi& phi, const VSet& e, Vertex x) {
  VSet img;
  for (Vertex y : e) {
    if (y == x) continue;
    if (phi[y] < 0) return std::nullopt;
    img.push_back(static_cast<Vertex>(phi[y]));
  }
  std::sort(img.begin(), img.end());
  return img;
}

VSet restrict_nbr(const PackingState& s, Side z, int i, const std::vector<VSet>& fam) {
  const auto& vi = s.host_clusters[i];
  if (fam.empty()) return vi;
  return set_intersect(vi, joint_neighborhood(s.host(z), fam));
}

}  // namespace

bool candidacy_member(const PackingState& s, Side z, std::size_t h, const std::vector<int>& I,
                      const std::vector<Vertex>& xs, const VSet& vs) {
  check_candidate(s, h, I, xs, vs);
  const auto& cg = s.cons[h];
  const auto& phi = s.phi_plus[h];
  for (std::uint32_t id = 0; id < cg.h.num_edges(); ++id) {
    const auto& e = cg.h.edge(id);
    VSet img;
    bool meets = false, applies = true;
    for (Vertex y : e) {
      auto it = std::find(xs.begin(), xs.end(), y);
      if (it != xs.end()) {
        if (!cg.sees(z, id, y)) applies = false;
        meets = true;
        img.push_back(vs[it - xs.begin()]);
        continue;
      }
      int cl = s.guest_parts[h][y];
      if (contains(I, cl) || !s.embedded[cl] || phi[y] < 0) {
        applies = false;
        break;
      }
      img.push_back(static_cast<Vertex>(phi[y]));
    }
    if (!meets || !applies) continue;
    std::sort(img.begin(), img.end());
    if (!s.host(z).has_edge(img)) return false;
  }
  return true;
}

bool SingleCandidacy::has(Vertex x, Vertex v) const {
  const auto& n = of(x).nbr;
  return std::binary_search(n.begin(), n.end(), v);
}

std::size_t SingleCandidacy::num_edges() const {
  std::size_t m = 0;
  for (const auto& c : certs) m += c.nbr.size();
  return m;
}

nlohmann::json SingleCandidacy::dump() const {
  nlohmann::json j;
  j["guest"] = guest;
  j["cluster"] = cluster;
  j["side"] = side == Side::A ? "A" : "B";
  j["certificates"] = nlohmann::json::array();
  for (const auto& c : certs) j["certificates"].push_back({{"x", c.x}, {"family", c.family}, {"nbr", c.nbr}});
  return j;
}

SingleCandidacy build_single(const PackingState& s, Side z, std::size_t h, int i) {
  SingleCandidacy c;
  c.guest = h;
  c.cluster = i;
  c.side = z;
  const auto& cg = s.cons[h];
  for (Vertex x : s.guest_cluster(h, i)) {
    Certificate cert;
    cert.x = x;
    for (auto id : cg.h.incident(x)) {
      if (!cg.sees(z, id, x)) continue;
      if (auto img = embedded_image(s, s.phi_plus[h], h, cg.h.edge(id), x)) cert.family.push_back(*img);
    }
    std::sort(cert.family.begin(), cert.family.end());
    cert.family.erase(std::unique(cert.family.begin(), cert.family.end()), cert.family.end());
    cert.nbr = restrict_nbr(s, z, i, cert.family);
    c.at[x] = c.certs.size();
    c.certs.push_back(std::move(cert));
  }
  return c;
}

std::vector<std::size_t> update_single(SingleCandidacy& c, const PackingState& s, const Phi& phi_old) {
  const auto& cg = s.cons[c.guest];
  const auto& phi = s.phi_plus[c.guest];
  if (phi_old.size() != phi.size()) throw InputError("update_single: map size mismatch");
  for (std::size_t v = 0; v < phi.size(); ++v)
    if (phi_old[v] >= 0 && phi_old[v] != phi[v]) throw InputError("update_single: old map is not a restriction");
  std::vector<std::size_t> added(c.certs.size(), 0);
  for (std::size_t a = 0; a < c.certs.size(); ++a) {
    auto& cert = c.certs[a];
    std::vector<VSet> fresh;
    for (auto id : cg.h.incident(cert.x)) {
      if (!cg.sees(c.side, id, cert.x)) continue;
      const auto& e = cg.h.edge(id);
      auto img = embedded_image(s, phi, c.guest, e, cert.x);
      // sets already in the family came from edges complete before this round
      if (!img || std::binary_search(cert.family.begin(), cert.family.end(), *img)) continue;
      fresh.push_back(*img);
    }
    std::sort(fresh.begin(), fresh.end());
    fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
    if (fresh.empty()) continue;
    cert.nbr = set_intersect(cert.nbr, joint_neighborhood(s.host(c.side), fresh));
    added[a] = fresh.size();
    for (auto& f : fresh) cert.family.push_back(std::move(f));
    std::sort(cert.family.begin(), cert.family.end());
  }
  return added;
}

bool certificates_faithful(const SingleCandidacy& c, const PackingState& s) {
  for (const auto& cert : c.certs)
    if (restrict_nbr(s, c.side, c.cluster, cert.family) != cert.nbr) return false;
  return true;
}

CandidacyCollection CandidacyCollection::build(const PackingState& s) {
  CandidacyCollection c;
  c.a.assign(s.guests.size(), std::vector<std::optional<SingleCandidacy>>(s.r));
  c.b = c.a;
  for (std::size_t h = 0; h < s.guests.size(); ++h)
    for (int i = 0; i < s.r; ++i) {
      if (!s.embedded[i]) c.a[h][i] = build_single(s, Side::A, h, i);
      c.b[h][i] = build_single(s, Side::B, h, i);
    }
  return c;
}

bool CandidacyCollection::member(const PackingState& s, Side z, std::size_t h, const std::vector<int>& I,
                                 const std::vector<Vertex>& xs, const VSet& vs) const {
  check_candidate(s, h, I, xs, vs);
  if (z == Side::B && I.size() > 1) throw InputError("member: side B graphs are single-cluster");
  const auto& side = z == Side::A ? a : b;
  for (std::size_t t = 0; t < I.size(); ++t) {
    const auto& sc = side[h][I[t]];
    if (!sc) throw InputError("member: no candidacy graph for this cluster");
    if (z == Side::A && s.embedded[I[t]]) throw InputError("member: side A index set meets an embedded cluster");
    if (!sc->has(xs[t], vs[t])) return false;
  }
  if (I.size() < 2) return true;
  // Edges meeting the tuple at least twice; the singles cover the rest.
  const auto& cg = s.cons[h];
  const auto& phi = s.phi_plus[h];
  std::set<std::uint32_t> ids;
  for (Vertex x : xs)
    for (auto id : cg.h.incident(x)) ids.insert(id);
  for (auto id : ids) {
    const auto& e = cg.h.edge(id);
    VSet img;
    int hits = 0;
    bool applies = true;
    for (Vertex y : e) {
      auto it = std::find(xs.begin(), xs.end(), y);
      if (it != xs.end()) {
        ++hits;
        img.push_back(vs[it - xs.begin()]);
        continue;
      }
      int cl = s.guest_parts[h][y];
      if (contains(I, cl) || !s.embedded[cl] || phi[y] < 0) {
        applies = false;
        break;
      }
      img.push_back(static_cast<Vertex>(phi[y]));
    }
    if (!applies || hits < 2) continue;
    std::sort(img.begin(), img.end());
    if (!s.host(z).has_edge(img)) return false;
  }
  return true;
}

std::vector<CandidacyEdge> build_candidacy(const PackingState& s, const CandidacyCollection& c, Side z,
                                           std::size_t h, const std::vector<int>& I, std::uint64_t limit) {
  long double work = 1;
  std::vector<std::vector<Vertex>> xs_by;
  for (int i : I) {
    xs_by.push_back(s.guest_cluster(h, i));
    work *= static_cast<long double>(xs_by.back().size()) * s.host_clusters[i].size();
  }
  if (work > limit) throw InputError("build_candidacy: enumeration exceeds limit");
  const auto& side = z == Side::A ? c.a : c.b;
  std::vector<CandidacyEdge> out;
  std::vector<Vertex> xs(I.size());
  VSet vs(I.size());
  // choose xs, then vs from each single neighbourhood
  std::function<void(std::size_t)> pick_v = [&](std::size_t t) {
    if (t == I.size()) {
      if (c.member(s, z, h, I, xs, vs)) out.push_back({xs, vs});
      return;
    }
    for (Vertex v : side[h][I[t]]->of(xs[t]).nbr) {
      vs[t] = v;
      pick_v(t + 1);
    }
  };
  std::function<void(std::size_t)> pick_x = [&](std::size_t t) {
    if (t == I.size()) {
      pick_v(0);
      return;
    }
    for (Vertex x : xs_by[t]) {
      xs[t] = x;
      pick_x(t + 1);
    }
  };
  for (int i : I)
    if (!side[h][i]) throw InputError("build_candidacy: no candidacy graph for this cluster");
  pick_x(0);
  std::sort(out.begin(), out.end());
  return out;
}

WellIntersecting check_well_intersecting(const SingleCandidacy& c, double eps, std::size_t q, double n) {
  if (c.certs.empty()) throw InputError("check_well_intersecting: no certificates");
  WellIntersecting w;
  w.partner_bound = std::pow(n, 0.25 + eps);
  std::unordered_map<VSet, std::vector<std::size_t>, VSetHash> owners;
  for (std::size_t a = 0; a < c.certs.size(); ++a) {
    w.max_family = std::max(w.max_family, c.certs[a].family.size());
    for (const auto& f : c.certs[a].family) owners[f].push_back(a);
  }
  w.partners.assign(c.certs.size(), 0);
  for (std::size_t a = 0; a < c.certs.size(); ++a) {
    std::unordered_set<std::size_t> mates;
    for (const auto& f : c.certs[a].family)
      for (auto b : owners[f])
        if (b != a) mates.insert(b);
    w.partners[a] = mates.size();
    if (mates.size() > w.max_partners) {
      w.max_partners = mates.size();
      w.worst_vertex = c.certs[a].x;
    }
  }
  w.ok = w.max_family <= q && static_cast<double>(w.max_partners) <= w.partner_bound;
  return w;
}

EdgeLabelling build_labelling(const PackingState& s, const CandidacyCollection& c, int i) {
  EdgeLabelling l;
  l.cluster = i;
  std::unordered_map<VSet, std::size_t, VSetHash> ids;
  std::vector<std::size_t> per_label;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> per_pair;
  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    const auto& sc = c.a[h][i];
    if (!sc) throw InputError("build_labelling: cluster has no side-A candidacy");
    const auto& cg = s.cons[h];
    for (const auto& cert : sc->certs) {
      // remainders of real edges at x that the packing itself covers
      std::vector<VSet> rest;
      for (auto id : cg.h.incident(cert.x)) {
        if (cg.synthetic(id)) continue;
        if (auto img = old_image(s.phi[h], cg.h.edge(id), cert.x)) rest.push_back(*img);
      }
      for (Vertex v : cert.nbr) {
        LabelledEdge le{h, cert.x, v, {}};
        for (const auto& r : rest) {
          auto g = r;
          g.push_back(v);
          std::sort(g.begin(), g.end());
          if (!s.ga.has_edge(g)) throw PreconditionError("build_labelling: label is not a G_A edge");
          le.labels.push_back(g);
        }
        std::sort(le.labels.begin(), le.labels.end());
        std::vector<std::size_t> lid;
        for (const auto& g : le.labels) {
          auto [it, fresh] = ids.emplace(g, ids.size());
          if (fresh) per_label.push_back(0);
          lid.push_back(it->second);
          l.delta = std::max(l.delta, ++per_label[it->second]);
        }
        std::sort(lid.begin(), lid.end());
        for (std::size_t p = 0; p < lid.size(); ++p)
          for (std::size_t q = p + 1; q < lid.size(); ++q)
            l.delta_c = std::max(l.delta_c, ++per_pair[{lid[p], lid[q]}]);
        l.width = std::max(l.width, le.labels.size());
        l.edges.push_back(std::move(le));
      }
    }
  }
  return l;
}

bool conflict_free(const EdgeLabelling& l, const std::vector<std::size_t>& chosen) {
  std::set<VSet> used;
  std::set<std::pair<std::size_t, Vertex>> xs, vs;
  for (auto e : chosen) {
    const auto& le = l.edges.at(e);
    if (!xs.insert({le.guest, le.x}).second || !vs.insert({le.guest, le.v}).second) return false;
    for (const auto& g : le.labels)
      if (!used.insert(g).second) return false;
  }
  return true;
}

namespace {

struct Profile {
  std::vector<int> clusters;  // the reduced edge of g
  std::vector<int> I;         // its unembedded clusters
  VSet g_o;                   // vertices of g in embedded clusters
  VSet g_m;                   // the rest, in cluster order
};

Profile profile_of(const PackingState& s, const VSet& g) {
  Profile p;
  std::vector<std::pair<int, Vertex>> byc;
  for (Vertex v : g) byc.push_back({s.host_parts.at(v), v});
  std::sort(byc.begin(), byc.end());
  for (std::size_t a = 0; a < byc.size(); ++a) {
    if (a && byc[a - 1].first == byc[a].first) throw InputError("suitable: two vertices in one cluster");
    p.clusters.push_back(byc[a].first);
    if (s.embedded[byc[a].first]) p.g_o.push_back(byc[a].second);
    else {
      p.I.push_back(byc[a].first);
      p.g_m.push_back(byc[a].second);
    }
  }
  return p;
}

// Preimages of host vertices under the packing of guest h, or nullopt.
std::optional<VSet> preimage(const PackingState& s, std::size_t h, const VSet& vs) {
  VSet out;
  for (Vertex v : vs) {
    long found = -1;
    for (std::size_t x = 0; x < s.phi[h].size(); ++x)
      if (s.phi[h][x] == static_cast<long>(v)) found = static_cast<long>(x);
    if (found < 0) return std::nullopt;
    out.push_back(static_cast<Vertex>(found));
  }
  return sorted_set(out);
}

}  // namespace

std::vector<GuestTuple> suitable_set_X(const PackingState& s, const CandidacyCollection& c,
                                       const VSet& g, const PatternVector& p, const PatternVector& pp) {
  auto pr = profile_of(s, g);
  if (pr.I.empty()) throw InputError("suitable_set_X: edge is fully embedded");
  std::vector<GuestTuple> out;
  for (std::uint32_t h = 0; h < s.guests.size(); ++h) {
    auto pre = preimage(s, h, pr.g_o);
    if (!pre) continue;
    const auto& H = s.guests[h];
    const auto& parts = s.guest_parts[h];
    // guest edges over exactly g's clusters that contain the preimage
    std::set<std::uint32_t> ids;
    if (!pre->empty()) {
      for (auto id : H.incident((*pre)[0])) ids.insert(id);
    } else {
      for (Vertex x : s.guest_cluster(h, pr.I[0]))
        for (auto id : H.incident(x)) ids.insert(id);
    }
    for (auto id : ids) {
      const auto& e = H.edge(id);
      std::vector<int> cl;
      for (Vertex y : e) cl.push_back(parts[y]);
      std::sort(cl.begin(), cl.end());
      if (cl != pr.clusters || !is_subset(*pre, e)) continue;
      std::vector<Vertex> xm;
      for (int i : pr.I)
        for (Vertex y : e)
          if (parts[y] == i) xm.push_back(y);
      if (!c.member(s, Side::A, h, pr.I, xm, pr.g_m)) continue;
      std::vector<Vertex> full;
      for (int i : pr.clusters)
        for (Vertex y : e)
          if (parts[y] == i) full.push_back(y);
      if (first_pattern(H, parts, s.r, pr.clusters, full, {}, Side::A) != p) continue;
      if (second_pattern(H, parts, s.r, pr.clusters, full, {}, Side::A) != pp) continue;
      out.push_back({h, xm});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::size_t, VSet>> suitable_edges(const PackingState& s, const CandidacyCollection& c,
                                                         const VSet& g) {
  std::vector<std::pair<std::size_t, VSet>> out;
  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    std::vector<bool> in(s.guests[h].n(), false);
    for (Vertex v : g) {
      int i = s.host_parts.at(v);
      if (s.embedded[i]) {
        for (std::size_t x = 0; x < s.phi[h].size(); ++x)
          if (s.phi[h][x] == static_cast<long>(v)) in[x] = true;
      } else {
        const auto& sc = c.a[h][i];
        if (!sc) throw InputError("suitable_edges: missing candidacy graph");
        for (const auto& cert : sc->certs)
          if (std::binary_search(cert.nbr.begin(), cert.nbr.end(), v)) in[cert.x] = true;
      }
    }
    std::set<std::uint32_t> ids;
    for (Vertex x = 0; x < in.size(); ++x)
      if (in[x])
        for (auto id : s.guests[h].incident(x)) ids.insert(id);
    for (auto id : ids) {
      const auto& e = s.guests[h].edge(id);
      if (std::all_of(e.begin(), e.end(), [&](Vertex y) { return in[y]; })) out.push_back({h, e});
    }
  }
  return out;
}

std::vector<std::pair<std::pair<std::size_t, VSet>, std::pair<std::size_t, VSet>>> suitable_pairs_E(
    const PackingState& s, const CandidacyCollection& c, const VSet& g, const VSet& hh) {
  auto last = [&](const VSet& e) {
    Vertex best = e.at(0);
    for (Vertex v : e)
      if (s.host_parts.at(v) > s.host_parts.at(best)) best = v;
    return best;
  };
  if (g == hh) throw InputError("suitable_pairs_E: edges must differ");
  Vertex w = last(g);
  if (last(hh) != w) throw InputError("suitable_pairs_E: edges must share their last vertex");
  int ik = s.host_parts[w];
  auto eg = suitable_edges(s, c, g), eh = suitable_edges(s, c, hh);
  std::vector<std::pair<std::pair<std::size_t, VSet>, std::pair<std::size_t, VSet>>> out;
  for (const auto& a : eg)
    for (const auto& b : eh) {
      if (a.first != b.first) continue;
      for (Vertex y : set_intersect(a.second, b.second))
        if (s.guest_parts[a.first][y] == ik) {
          out.push_back({a, b});
          break;
        }
    }
  return out;
}

}  // namespace hpack
