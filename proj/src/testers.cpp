#include "hpack/testers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hpack/errors.hpp"

namespace hpack {

namespace {

bool contains(const std::vector<int>& s, int i) { return std::find(s.begin(), s.end(), i) != s.end(); }

void check_centres(const std::vector<int>& I, const VSet& c, const PackingState& s) {
  if (c.size() != I.size()) throw InputError("tester: one centre per cluster required");
  for (std::size_t a = 0; a < I.size(); ++a) {
    if (a && I[a - 1] >= I[a]) throw InputError("tester: index set not sorted");
    if (c[a] >= s.host_parts.size() || s.host_parts[c[a]] != I[a])
      throw InputError("tester: centre not in its cluster");
  }
}

// Pieces of a tuple restricted to a sub-index-set.
void restrict_to(const std::vector<int>& I, const std::vector<Vertex>& xs, const VSet& cs,
                 const std::vector<int>& sub, std::vector<Vertex>& xo, VSet& co) {
  xo.clear();
  co.clear();
  for (std::size_t a = 0; a < I.size(); ++a)
    if (contains(sub, I[a])) {
      xo.push_back(xs[a]);
      co.push_back(cs[a]);
    }
}

bool inside_some_edge(const KGraph& h, const std::vector<Vertex>& xs) {
  if (xs.empty()) return false;
  auto want = sorted_set(xs);
  for (auto id : h.incident(xs[0]))
    if (is_subset(want, h.edge(id))) return true;
  return false;
}

}  // namespace

double VertexTester::total() const {
  double t = 0;
  for (const auto& [k, v] : w) t += v;
  return t;
}

double EdgeTesterSpec::total() const {
  double t = 0;
  for (const auto& [k, v] : w0) t += v;
  return t;
}

void validate_edge_tester(const EdgeTesterSpec& t, const PackingState& s) {
  check_centres(t.I, t.centres, s);
  for (int j : t.J)
    if (!contains(t.I, j)) throw InputError("edge tester: J not inside I");
  for (int j : t.JX)
    if (!contains(t.J, j) || contains(t.JV, j)) throw InputError("edge tester: J_X must be inside J and miss J_V");
  for (int j : t.JV)
    if (!contains(t.J, j)) throw InputError("edge tester: J_V not inside J");
  if (!(t.cap > 0)) throw InputError("edge tester: cap must be positive");
  for (const auto& [tup, w] : t.w0) {
    if (w < 0 || w > t.cap) throw InputError("edge tester: weight outside [0, cap]");
    if (tup.guest >= s.guests.size()) throw InputError("edge tester: guest out of range");
    const auto& h = s.guests[tup.guest];
    const auto& parts = s.guest_parts[tup.guest];
    check_tuple(parts, t.I, tup.xs);
    // single vertices need not lie in an edge; they carry the zero quad
    if (t.I.size() > 1 && !inside_some_edge(h, tup.xs)) throw InputError("edge tester: tuple not inside a guest edge");
    if (pattern_quad(h, parts, s.r, t.I, tup.xs, t.J) != t.P) throw InputError("edge tester: tuple has another pattern");
  }
}

bool LocalTester::clean() const {
  for (const auto& [set, w] : this->w) {
    std::set<std::pair<std::uint32_t, Vertex>> xs, vs;
    for (const auto& e : set)
      if (!xs.insert({e.guest, e.x}).second || !vs.insert({e.guest, e.v}).second) return false;
  }
  return true;
}

double LocalTester::norm(int lp) const {
  if (lp < 1 || lp > ell) throw InputError("LocalTester::norm: l' out of range");
  std::map<std::vector<CandRef>, double> acc;
  for (const auto& [set, w] : this->w) {
    VSet idx(set.size());
    for (std::size_t a = 0; a < set.size(); ++a) idx[a] = static_cast<Vertex>(a);
    for_each_subset(idx, lp, [&](const VSet& sub) {
      std::vector<CandRef> t;
      for (auto a : sub) t.push_back(set[a]);
      acc[t] += w;
    });
  }
  double best = 0;
  for (const auto& [t, w] : acc) best = std::max(best, w);
  return best;
}

bool LocalTester::norms_ok(double n, double eps) const {
  for (int lp = 1; lp <= ell; ++lp)
    if (norm(lp) > std::pow(n, ell - lp + eps * eps)) return false;
  return true;
}

std::size_t eval_set_tester(const SetTester& t, const std::vector<Phi>& phi) {
  VSet acc = sorted_set(t.W);
  for (const auto& [g, ys] : t.Y) {
    VSet img;
    for (Vertex y : ys)
      if (phi.at(g).at(y) >= 0) img.push_back(static_cast<Vertex>(phi[g][y]));
    acc = set_intersect(acc, sorted_set(img));
  }
  return acc.size();
}

double eval_vertex_tester(const VertexTester& t, const std::vector<Phi>& phi) {
  double sum = 0;
  for (const auto& [tup, w] : t.w) {
    bool hit = true;
    for (std::size_t a = 0; a < tup.xs.size() && hit; ++a)
      hit = phi.at(tup.guest).at(tup.xs[a]) == static_cast<long>(t.centres[a]);
    if (hit) sum += w;
  }
  return sum;
}

double eval_simple_edge_tester(const EdgeTesterSpec& t, const PackingState& s, const CandidacyCollection& c) {
  if (!t.J.empty() || pattern_norm(t.P.pB) || pattern_norm(t.P.ppB))
    throw InputError("simple edge tester: J must be empty and the B patterns zero");
  check_centres(t.I, t.centres, s);
  std::vector<int> open;
  for (int i : t.I)
    if (!s.embedded[i]) open.push_back(i);
  double sum = 0;
  std::vector<Vertex> xo;
  VSet co;
  for (const auto& [tup, w] : t.w0) {
    const auto& phi = s.phi[tup.guest];
    bool ok = true;
    for (std::size_t a = 0; a < t.I.size() && ok; ++a)
      if (s.embedded[t.I[a]]) ok = phi[tup.xs[a]] == static_cast<long>(t.centres[a]);
    if (!ok) continue;
    restrict_to(t.I, tup.xs, t.centres, open, xo, co);
    if (!open.empty() && !c.member(s, Side::A, tup.guest, open, xo, co)) continue;
    sum += w;
  }
  return sum;
}

double eval_general_edge_tester(const EdgeTesterSpec& t, const PackingState& s, const CandidacyCollection& c) {
  check_centres(t.I, t.centres, s);
  std::vector<int> open;  // I \ (embedded ∪ J)
  for (int i : t.I)
    if (!s.embedded[i] && !contains(t.J, i)) open.push_back(i);
  double sum = 0;
  std::vector<Vertex> xo;
  VSet co;
  for (const auto& [tup, w] : t.w0) {
    const auto h = tup.guest;
    const auto& phi = s.phi[h];
    const auto& phip = s.phi_plus[h];
    bool ok = true;
    for (std::size_t a = 0; a < t.I.size() && ok; ++a) {
      int i = t.I[a];
      Vertex x = tup.xs[a];
      long cen = static_cast<long>(t.centres[a]);
      bool inJ = contains(t.J, i);
      if (inJ) ok = c.b[h][i] && c.b[h][i]->has(x, t.centres[a]);
      if (!ok || !s.embedded[i]) continue;
      // (ii) embedded centres outside J are covered by x itself
      if (!inJ) ok = phi[x] == cen;
      // (iv) exactly the J_X vertices are left over
      if (ok) ok = (phi[x] < 0) == contains(t.JX, i);
      // (iii) J_V centres stay uncovered in this guest
      if (ok && contains(t.JV, i)) ok = std::find(phi.begin(), phi.end(), cen) == phi.end();
      // (v) the extension keeps J vertices off every centre
      if (ok && inJ)
        ok = std::find(t.centres.begin(), t.centres.end(), static_cast<Vertex>(phip[x])) == t.centres.end();
    }
    if (!ok) continue;
    restrict_to(t.I, tup.xs, t.centres, open, xo, co);
    if (!open.empty() && !c.member(s, Side::A, h, open, xo, co)) continue;
    sum += w;
  }
  return sum;
}

double eval_local_tester(const LocalTester& t, const std::vector<CandRef>& matched) {
  std::vector<CandRef> m(matched);
  std::sort(m.begin(), m.end());
  double sum = 0;
  for (const auto& [set, w] : t.w)
    if (std::includes(m.begin(), m.end(), set.begin(), set.end())) sum += w;
  return sum;
}

nlohmann::json TesterSuite::to_json() const {
  nlohmann::json j;
  j["sets"] = nlohmann::json::array();
  for (const auto& t : sets) {
    nlohmann::json ys = nlohmann::json::array();
    for (const auto& [g, y] : t.Y) ys.push_back({{"guest", g}, {"vertices", y}});
    j["sets"].push_back({{"cluster", t.cluster}, {"W", t.W}, {"Y", ys}});
  }
  j["vertices"] = nlohmann::json::array();
  for (const auto& t : vertices) {
    nlohmann::json ws = nlohmann::json::array();
    for (const auto& [tup, w] : t.w) ws.push_back({{"guest", tup.guest}, {"xs", tup.xs}, {"w", w}});
    j["vertices"].push_back({{"I", t.I}, {"centres", t.centres}, {"cap", t.cap}, {"w", ws}});
  }
  return j;
}

TesterSuite TesterSuite::from_json(const nlohmann::json& j) {
  TesterSuite s;
  try {
    for (const auto& t : j.at("sets")) {
      SetTester st;
      st.cluster = t.at("cluster").get<int>();
      st.W = sorted_set(t.at("W").get<VSet>());
      for (const auto& y : t.at("Y"))
        st.Y.push_back({y.at("guest").get<std::uint32_t>(), y.at("vertices").get<std::vector<Vertex>>()});
      s.sets.push_back(std::move(st));
    }
    for (const auto& t : j.at("vertices")) {
      VertexTester vt;
      vt.I = t.at("I").get<std::vector<int>>();
      vt.centres = t.at("centres").get<VSet>();
      vt.cap = t.at("cap").get<double>();
      for (const auto& w : t.at("w"))
        vt.w[{w.at("guest").get<std::uint32_t>(), w.at("xs").get<std::vector<Vertex>>()}] = w.at("w").get<double>();
      s.vertices.push_back(std::move(vt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("tester suite: ") + e.what());
  }
  return s;
}

}  // namespace hpack
