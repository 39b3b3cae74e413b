#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "hpack/bigraph.hpp"
#include "hpack/errors.hpp"
#include "hpack/packer.hpp"

namespace hpack {

namespace {

using EdgeSet = std::unordered_set<VSet, VSetHash>;

struct Failure {
  std::string clause;
};

VSet image_without(const VSet& e, Vertex y, const Phi& phi) {
  VSet out;
  for (Vertex x : e)
    if (x != y) out.push_back(static_cast<Vertex>(phi[x]));
  return sorted_set(out);
}

bool free_b_edge(const KGraph& gb, const EdgeSet& used, VSet e) {
  e = sorted_set(std::move(e));
  return gb.has_edge(e) && !used.count(e);
}

Assertion hypothesis(const std::string& clause, bool enforced) {
  Assertion a;
  a.q = -1;
  a.clause = clause;
  a.enforced = enforced;
  return a;
}

void note(Assertion& a, double excess) {
  ++a.checked;
  if (a.checked == 1 || excess > a.worst) a.worst = excess;
  if (excess > 0) ++a.violations;
}

// G_B minus the edges already spent by earlier guests.
KGraph residual(const KGraph& gb, const EdgeSet& used) {
  KGraph out(gb.k(), gb.n());
  for (const auto& e : gb.edges())
    if (!used.count(e)) out.add_edge(e);
  return out;
}

struct GuestRun {
  Phi phi;
  std::vector<VSet> images;  // host edges of the edges touching Y
  std::vector<std::pair<Vertex, Vertex>> good;
  std::size_t bad_vertices = 0, good_vertices = 0;
  std::vector<Assertion> hyp;
};

GuestRun complete_guest(const PartialPacking& p, std::size_t h, const EdgeSet& used, const KGraph& resid,
                        const std::vector<double>& d_i, std::mt19937_64& rng) {
  const auto& s = p.state;
  const auto& L = p.ladder;
  const auto& H = s.guests[h];
  const auto& parts = s.guest_parts[h];
  const double n = static_cast<double>(p.inst.n);
  const bool enf = L.enforce_all;
  GuestRun run;
  run.phi = s.phi[h];

  // activation
  std::bernoulli_distribution act(L.mu);
  std::vector<char> inY(H.n(), 0);
  std::vector<std::vector<Vertex>> Y(s.r), W(s.r);
  for (int i = 0; i < s.r; ++i) {
    std::vector<char> taken(s.host_parts.size(), 0);
    for (Vertex x : s.guest_cluster(h, i)) {
      if (run.phi[x] < 0 || act(rng)) {
        inY[x] = 1;
        Y[i].push_back(x);
        run.phi[x] = -1;
      } else {
        taken[run.phi[x]] = 1;
      }
    }
    for (Vertex v : s.host_clusters[i])
      if (!taken[v]) W[i].push_back(v);
  }

  // (A) sizes
  auto hA = hypothesis("completion:A-sizes", enf);
  for (int i = 0; i < s.r; ++i)
    note(hA, std::abs(static_cast<double>(Y[i].size()) - L.mu * n) - std::sqrt(L.epsT) * L.mu * n);
  run.hyp.push_back(hA);

  // bad edges: two or more Y-vertices
  std::vector<char> bad(H.n(), 0);
  std::map<VSet, std::size_t> bad_per_class;
  for (const auto& e : H.edges()) {
    int cnt = 0;
    for (Vertex x : e) cnt += inY[x];
    if (cnt < 2) continue;
    for (Vertex x : e)
      if (inY[x]) bad[x] = 1;
    VSet cls;
    for (Vertex x : e) cls.push_back(static_cast<Vertex>(parts[x]));
    ++bad_per_class[sorted_set(cls)];
  }
  auto hB = hypothesis("completion:B-bad-edges", enf);
  for (const auto& re : p.inst.reduced.edges()) {
    auto it = bad_per_class.find(re);
    note(hB, static_cast<double>(it == bad_per_class.end() ? 0 : it->second) - std::pow(L.mu, 1.5) * n);
  }
  run.hyp.push_back(hB);

  // (D) candidacy against G_B - G∘, one bigraph per cluster
  auto hD = hypothesis("completion:D-super-regular", enf);
  for (int i = 0; i < s.r; ++i) {
    auto xs = s.guest_cluster(h, i);
    const auto& vi = s.host_clusters[i];
    if (xs.empty()) continue;
    std::unordered_map<Vertex, std::uint32_t> pos;
    for (std::uint32_t a = 0; a < vi.size(); ++a) pos[vi[a]] = a;
    Bigraph g(xs.size(), vi.size());
    for (std::uint32_t a = 0; a < xs.size(); ++a) {
      std::vector<VSet> fam;
      for (auto id : H.incident(xs[a])) fam.push_back(image_without(H.edge(id), xs[a], s.phi_plus[h]));
      for (Vertex v : set_intersect(vi, joint_neighborhood(resid, fam))) g.add_edge(a, pos[v]);
    }
    auto w = is_super_regular(g, std::pow(L.mu, 0.2), d_i[i]);
    note(hD, w.ok ? 0.0 : std::max(std::abs(w.degree_ratio - 1) - std::pow(L.mu, 0.2), 1e-9));
  }
  run.hyp.push_back(hD);

  // bad phase, cluster by cluster
  std::vector<std::set<Vertex>> spent(s.r);
  auto candidates = [&](Vertex y) {
    int i = parts[y];
    std::vector<Vertex> out;
    for (Vertex w : W[i]) {
      if (spent[i].count(w)) continue;
      bool okw = true;
      for (auto id : H.incident(y)) {
        const auto& e = H.edge(id);
        bool fixed = true;
        VSet img{w};
        for (Vertex x : e)
          if (x != y) {
            if (run.phi[x] < 0) fixed = false;
            else img.push_back(static_cast<Vertex>(run.phi[x]));
          }
        if (fixed && !free_b_edge(s.gb, used, img)) {
          okw = false;
          break;
        }
      }
      if (okw) out.push_back(w);
    }
    return out;
  };
  for (int i = 0; i < s.r; ++i) {
    std::vector<Vertex> order;
    for (Vertex y : Y[i])
      if (bad[y]) order.push_back(y);
    std::shuffle(order.begin(), order.end(), rng);
    double floor = enf ? 2 * L.mu * d_i[i] * n / 3 : 1.0;
    for (Vertex y : order) {
      auto c = candidates(y);
      if (static_cast<double>(c.size()) < floor) throw Failure{"bad-phase choices below floor"};
      Vertex w = c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)];
      run.phi[y] = w;
      spent[i].insert(w);
      ++run.bad_vertices;
    }
  }

  // (C) bad images crowding a good vertex, (E) good restriction, then the matchings
  auto hC = hypothesis("completion:C-bad-neighbours", enf);
  auto hE = hypothesis("completion:E-good-super-regular", enf);
  for (int i = 0; i < s.r; ++i) {
    std::vector<Vertex> ys, ws;
    for (Vertex y : Y[i])
      if (!bad[y]) ys.push_back(y);
    for (Vertex w : W[i])
      if (!spent[i].count(w)) ws.push_back(w);
    if (ys.empty()) continue;
    if (ws.size() < ys.size()) throw Failure{"good phase: fewer free images than good vertices"};
    std::unordered_map<Vertex, std::uint32_t> pos;
    for (std::uint32_t b = 0; b < ws.size(); ++b) pos[ws[b]] = b;
    Bigraph g(ys.size(), ws.size());
    for (std::uint32_t a = 0; a < ys.size(); ++a) {
      std::size_t crowd = 0;
      for (Vertex w : candidates(ys[a])) {
        auto it = pos.find(w);
        if (it != pos.end()) g.add_edge(a, it->second);
      }
      for (Vertex w : spent[i]) {
        bool okw = true;
        for (auto id : H.incident(ys[a]))
          okw = okw && free_b_edge(s.gb, used, set_union(VSet{w}, image_without(H.edge(id), ys[a], run.phi)));
        crowd += okw;
      }
      note(hC, static_cast<double>(crowd) - std::pow(L.mu, 1.5) * d_i[i] * n);
    }
    {
      auto w = is_super_regular(g, std::pow(L.mu, 1.0 / 6), d_i[i]);
      note(hE, w.ok ? 0.0 : std::max(std::abs(w.degree_ratio - 1) - std::pow(L.mu, 1.0 / 6), 1e-9));
    }

    std::vector<long> mate;
    if (ys.size() == ws.size()) {
      std::size_t hi = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(L.mu * d_i[i] * n / 2)));
      std::size_t lo = 0;
      std::optional<Bigraph> best;
      // largest feasible m <= hi
      if (auto f = m_factor(g, hi)) {
        best = std::move(f);
        lo = hi;
      } else {
        std::size_t a = 1, b = hi - 1;
        while (a <= b && b >= 1) {
          std::size_t m = (a + b) / 2;
          if (auto f = m_factor(g, m)) {
            best = std::move(f);
            lo = m;
            a = m + 1;
          } else {
            b = m - 1;
          }
        }
      }
      if (!best || lo == 0) {
        std::size_t mind = ws.size();
        for (std::uint32_t a = 0; a < ys.size(); ++a) mind = std::min(mind, g.adj_a(a).size());
        throw Failure{"good phase: no perfect matching (min degree " + std::to_string(mind) + ")"};
      }
      auto ms = decompose_regular(std::move(*best), rng);
      mate = ms[std::uniform_int_distribution<std::size_t>(0, ms.size() - 1)(rng)];
    } else {
      auto pm = perfect_matching(g, rng);
      if (!pm.perfect) throw Failure{"good phase: no saturating matching"};
      mate = pm.mate_a;
    }
    for (std::uint32_t a = 0; a < ys.size(); ++a) {
      run.phi[ys[a]] = ws[mate[a]];
      run.good.push_back({ys[a], ws[mate[a]]});
      ++run.good_vertices;
    }
  }
  run.hyp.push_back(hC);
  run.hyp.push_back(hE);

  // every edge touching Y must sit on a free G_B edge
  std::set<VSet> seen;
  for (const auto& e : H.edges()) {
    bool touch = false;
    for (Vertex x : e) touch = touch || inY[x];
    if (!touch) continue;
    VSet img;
    for (Vertex x : e) img.push_back(static_cast<Vertex>(run.phi[x]));
    img = sorted_set(img);
    if (!free_b_edge(s.gb, used, img) || !seen.insert(img).second) throw Failure{"edge image outside G_B - G∘"};
    run.images.push_back(img);
  }

  // (G) proportional intersections of W with G_B neighbourhoods, sampled
  auto hG = hypothesis("completion:G-proportional", enf);
  const auto& R = p.inst.reduced;
  for (std::size_t k = 0; k < std::min<std::size_t>(L.sample_budget, 50) && R.num_edges(); ++k) {
    const auto& re = R.edge(std::uniform_int_distribution<std::size_t>(0, R.num_edges() - 1)(rng));
    int i = static_cast<int>(re[std::uniform_int_distribution<std::size_t>(0, re.size() - 1)(rng)]);
    VSet S;
    for (Vertex c : re)
      if (static_cast<int>(c) != i) {
        const auto& vc = s.host_clusters[c];
        S.push_back(vc[std::uniform_int_distribution<std::size_t>(0, vc.size() - 1)(rng)]);
      }
    auto nb = set_intersect(s.host_clusters[i], joint_neighborhood(s.gb, {sorted_set(S)}));
    auto wi = sorted_set(W[i]);
    double expect = static_cast<double>(nb.size()) * wi.size() / s.host_clusters[i].size();
    double got = static_cast<double>(set_intersect(nb, wi).size());
    note(hG, std::abs(got - expect) - std::sqrt(L.epsT) * expect - 1);
  }
  run.hyp.push_back(hG);
  return run;
}

}  // namespace

CompletionResult complete_packing(const PartialPacking& p, std::mt19937_64& rng) {
  const auto& s = p.state;
  const auto& L = p.ladder;
  for (int i = 0; i < s.r; ++i)
    if (!s.embedded[i]) throw InputError("complete_packing: partial packing has an unembedded cluster");
  CompletionResult out;
  out.d_i.assign(s.r, 1.0);
  for (int i = 0; i < s.r; ++i) out.d_i[i] = std::pow(L.dB, p.schedule.mq.empty() ? 0 : p.schedule.mq[s.r][i]);
  {
    auto left = hypothesis("completion:leftover", L.enforce_all);
    for (auto l : p.leftover_per_cluster) note(left, static_cast<double>(l) - 2 * L.epsT * p.inst.n);
    out.hypotheses.push_back(left);
  }

  EdgeSet used;
  for (std::size_t h = 0; h < s.guests.size(); ++h) {
    // (F) residual typicality before this guest
    KGraph resid = residual(s.gb, used);
    {
      auto hF = hypothesis("completion:F-typicality", L.enforce_all);
      if (p.inst.reduced.num_edges() && s.gb.num_edges()) {
        double frac = 1 - static_cast<double>(used.size()) / s.gb.num_edges();
        TypicalityOptions to;
        to.max_exhaustive = 0;
        to.samples = L.sample_budget;
        to.seed = rng();
        auto rep = is_typical_wrt_reduced(resid, s.host_parts, p.inst.reduced, std::sqrt(L.mu), 1, L.dB * frac, to);
        hF.checked = rep.families_checked;
        hF.worst = std::abs(rep.worst_deviation) - std::sqrt(L.mu);
        hF.violations = rep.typical ? 0 : 1;
      }
      out.hypotheses.push_back(hF);
    }
    std::string last;
    bool done = false;
    for (int attempt = 1; attempt <= L.completion_retries && !done; ++attempt) {
      try {
        auto run = complete_guest(p, h, used, resid, out.d_i, rng);
        std::string broken;
        for (const auto& a : run.hyp)
          if (a.enforced && !a.ok()) broken = a.clause;
        if (!broken.empty()) throw Failure{broken};
        for (auto& a : run.hyp) out.hypotheses.push_back(std::move(a));
        for (auto& e : run.images) {
          used.insert(e);
          out.used_b.push_back(std::move(e));
        }
        out.phi.push_back(std::move(run.phi));
        out.good_pairs.push_back(std::move(run.good));
        out.bad_vertices.push_back(run.bad_vertices);
        out.good_vertices.push_back(run.good_vertices);
        done = true;
      } catch (const Failure& f) {
        last = f.clause;
        ++out.retries;
      }
    }
    if (!done)
      throw RoundFailure("complete_packing: guest " + std::to_string(h) + ": " + last + " after " +
                         std::to_string(L.completion_retries) + " attempts");
  }
  std::sort(out.used_b.begin(), out.used_b.end());
  return out;
}

// ---- audits ------------------------------------------------------------------

nlohmann::json PackingAudit::to_json() const {
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : violations)
    vs.push_back({{"kind", v.kind}, {"guest", v.guest}, {"part", v.part}, {"edge", v.edge}, {"detail", v.detail}});
  return {{"ok", ok},
          {"violations", vs},
          {"guest_edges", guest_edges},
          {"host_edges", host_edges},
          {"coverage", coverage}};
}

PackingAudit verify_packing(const KGraph& host, const std::vector<KGraph>& guests, const std::vector<Phi>& phi,
                            const std::vector<int>* host_parts, const std::vector<std::vector<int>>* guest_parts) {
  PackingAudit a;
  a.host_edges = host.num_edges();
  auto flag = [&](std::string kind, long g, long part, VSet e, std::string detail) {
    a.violations.push_back({std::move(kind), g, part, std::move(e), std::move(detail)});
  };
  if (phi.size() != guests.size()) flag("shape", -1, -1, {}, "one map per guest expected");
  std::unordered_map<VSet, std::pair<long, VSet>, VSetHash> owner;
  for (std::size_t h = 0; h < guests.size() && h < phi.size(); ++h) {
    const auto& H = guests[h];
    const auto& f = phi[h];
    a.guest_edges += H.num_edges();
    if (f.size() != H.n()) {
      flag("shape", static_cast<long>(h), -1, {}, "map size differs from guest order");
      continue;
    }
    bool total = true;
    std::unordered_map<long, Vertex> pre;
    for (Vertex x = 0; x < H.n(); ++x) {
      if (f[x] < 0 || f[x] >= static_cast<long>(host.n())) {
        total = false;
        flag("partial", static_cast<long>(h), -1, {x}, "vertex without a host image");
        continue;
      }
      auto [it, fresh] = pre.emplace(f[x], x);
      if (!fresh) flag("injectivity", static_cast<long>(h), -1, {it->second, x}, "two vertices share an image");
      if (host_parts && guest_parts) {
        int gp = (*guest_parts)[h][x], hp = (*host_parts)[f[x]];
        if (gp != hp) flag("cluster", static_cast<long>(h), gp, {x}, "image outside V_" + std::to_string(gp));
      }
    }
    if (!total) continue;
    for (const auto& e : H.edges()) {
      VSet img;
      for (Vertex x : e) img.push_back(static_cast<Vertex>(f[x]));
      img = sorted_set(img);
      if (!host.has_edge(img)) {
        flag("non-edge", static_cast<long>(h), -1, e, "image is not a host edge");
        continue;
      }
      auto [it, fresh] = owner.emplace(img, std::make_pair(static_cast<long>(h), e));
      if (!fresh)
        flag("collision", static_cast<long>(h), -1, img,
             "host edge already used by guest " + std::to_string(it->second.first));
    }
  }
  if (host_parts && guest_parts) {
    // surjectivity onto V_i when the guest part is as large as the host part
    std::map<int, std::size_t> hsize;
    for (int c : *host_parts) ++hsize[c];
    for (std::size_t h = 0; h < guests.size() && h < phi.size(); ++h) {
      std::map<int, std::size_t> gsize;
      for (int c : (*guest_parts)[h]) ++gsize[c];
      for (const auto& [c, m] : gsize)
        if (m > hsize[c]) flag("cluster", static_cast<long>(h), c, {}, "guest part larger than V_i");
    }
  }
  a.ok = a.violations.empty();
  a.coverage = a.host_edges ? static_cast<double>(a.guest_edges) / a.host_edges : 0;
  return a;
}

PackingAudit verify_packing(const BlowupInstance& b, const std::vector<Phi>& phi) {
  return verify_packing(b.host, b.guests, phi, &b.host_parts, &b.guest_parts);
}

nlohmann::json TesterEvaluation::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : results)
    rs.push_back({{"kind", r.kind}, {"value", r.value}, {"expected", r.expected}, {"slack", r.slack}, {"ok", r.ok}});
  return {{"passed", passed}, {"total", results.size()}, {"pass_fraction", pass_fraction},
          {"max_deviation", max_deviation}, {"results", rs}};
}

TesterEvaluation evaluate_tester_suite(const TesterSuite& suite, const std::vector<Phi>& phi, double n, double alpha,
                                       double additive_exp) {
  if (n <= 0) throw InputError("evaluate_tester_suite: n must be positive");
  TesterEvaluation ev;
  auto push = [&](TesterOutcome o) {
    o.ok = std::abs(o.value - o.expected) <= o.slack + 1e-9;
    ev.passed += o.ok;
    ev.max_deviation = std::max(ev.max_deviation, std::abs(o.value - o.expected) / std::max(o.slack, 1e-12));
    ev.results.push_back(o);
  };
  for (const auto& t : suite.sets) {
    TesterOutcome o;
    o.kind = "set";
    o.value = static_cast<double>(eval_set_tester(t, phi));
    o.expected = static_cast<double>(t.W.size());
    for (const auto& [g, ys] : t.Y) o.expected *= static_cast<double>(ys.size()) / n;
    o.slack = alpha * n;
    push(o);
  }
  for (const auto& t : suite.vertices) {
    TesterOutcome o;
    o.kind = "vertex";
    o.value = eval_vertex_tester(t, phi);
    o.expected = t.total() / std::pow(n, static_cast<double>(t.I.size()));
    o.slack = alpha * o.expected + std::pow(n, additive_exp);
    push(o);
  }
  ev.pass_fraction = ev.results.empty() ? 1.0 : static_cast<double>(ev.passed) / ev.results.size();
  return ev;
}

}  // namespace hpack
