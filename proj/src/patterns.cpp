#include "hpack/patterns.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "hpack/errors.hpp"

namespace hpack {

namespace {

struct Slot {
  Vertex v;
  int cluster;
  bool copy;
};

bool contains(const std::vector<int>& s, int i) { return std::find(s.begin(), s.end(), i) != s.end(); }

// x' split into its real part {x_i : i in I\J} and the originals of its copies.
struct Primed {
  VSet real, copied;
};

Primed primed(const std::vector<int>& I, const std::vector<Vertex>& xs, const std::vector<int>& J) {
  Primed p;
  for (std::size_t a = 0; a < I.size(); ++a) (contains(J, I[a]) ? p.copied : p.real).push_back(xs[a]);
  std::sort(p.real.begin(), p.real.end());
  std::sort(p.copied.begin(), p.copied.end());
  return p;
}

bool in(const VSet& s, Vertex v) { return std::binary_search(s.begin(), s.end(), v); }

bool in_primed(const Primed& p, const Slot& s) { return s.copy ? in(p.copied, s.v) : in(p.real, s.v); }

// Edges of H_Z that can contribute: for A the edges through a real x' vertex,
// for B the copies pi(x_j) ∪ (f \ x_j). Copies of other J-cluster vertices are
// never inside x', so they are dropped here.
std::vector<std::vector<Slot>> candidates(const KGraph& h, const std::vector<int>& parts,
                                          const Primed& p, Side z) {
  std::vector<std::vector<Slot>> out;
  auto slots = [&](const VSet& e, long copy_of) {
    std::vector<Slot> f;
    for (Vertex v : e) f.push_back({v, parts[v], static_cast<long>(v) == copy_of});
    return f;
  };
  if (z == Side::A) {
    std::set<std::uint32_t> ids;
    for (Vertex x : p.real)
      for (auto id : h.incident(x)) ids.insert(id);
    for (auto id : ids) out.push_back(slots(h.edge(id), -1));
  } else {
    for (Vertex y : p.copied)
      for (auto id : h.incident(y)) out.push_back(slots(h.edge(id), y));
  }
  return out;
}

bool first_counts(const std::vector<Slot>& f, int l, const Primed& p) {
  bool last = false;
  int outside = 0;
  for (const auto& s : f) {
    if (!s.copy && s.cluster == l && !in(p.real, s.v)) last = true;
    if (s.copy || s.cluster > l) {
      if (!in_primed(p, s)) return false;
      ++outside;
    }
  }
  return last && outside >= 2;
}

bool second_counts(const std::vector<Slot>& f, int l, const Primed& p) {
  bool at = false;
  int outside = 0;
  for (const auto& s : f) {
    if (!s.copy && s.cluster == l && in(p.real, s.v)) at = true;
    if (s.copy || s.cluster > l) {
      if (!in_primed(p, s)) return false;
      ++outside;
    }
  }
  return at && outside == 1;
}

template <class Pred>
PatternVector tally(const KGraph& h, const std::vector<int>& parts, int r, const std::vector<int>& I,
                    const std::vector<Vertex>& xs, const std::vector<int>& J, Side z, Pred pred) {
  check_tuple(parts, I, xs);
  for (int j : J)
    if (!contains(I, j)) throw InputError("pattern: J not inside I");
  auto p = primed(I, xs, J);
  PatternVector out(r, 0);
  for (const auto& f : candidates(h, parts, p, z))
    for (const auto& s : f)
      if (!s.copy && s.cluster >= 0 && s.cluster < r && pred(f, s.cluster, p)) ++out[s.cluster];
  return out;
}

}  // namespace

int pattern_norm(const PatternVector& p) { return std::accumulate(p.begin(), p.end(), 0); }

void check_tuple(const std::vector<int>& parts, const std::vector<int>& I, const std::vector<Vertex>& xs) {
  if (I.size() != xs.size()) throw InputError("tuple: one vertex per cluster required");
  for (std::size_t a = 0; a < I.size(); ++a) {
    if (a && I[a - 1] >= I[a]) throw InputError("tuple: index set not sorted");
    if (xs[a] >= parts.size() || parts[xs[a]] != I[a]) throw InputError("tuple: vertex outside its cluster");
  }
}

PatternVector first_pattern(const KGraph& h, const std::vector<int>& parts, int r,
                            const std::vector<int>& I, const std::vector<Vertex>& xs,
                            const std::vector<int>& J, Side z) {
  return tally(h, parts, r, I, xs, J, z, first_counts);
}

PatternVector second_pattern(const KGraph& h, const std::vector<int>& parts, int r,
                             const std::vector<int>& I, const std::vector<Vertex>& xs,
                             const std::vector<int>& J, Side z) {
  return tally(h, parts, r, I, xs, J, z, second_counts);
}

PatternQuad pattern_quad(const KGraph& h, const std::vector<int>& parts, int r,
                         const std::vector<int>& I, const std::vector<Vertex>& xs,
                         const std::vector<int>& J) {
  return {first_pattern(h, parts, r, I, xs, J, Side::A), second_pattern(h, parts, r, I, xs, J, Side::A),
          first_pattern(h, parts, r, I, xs, J, Side::B), second_pattern(h, parts, r, I, xs, J, Side::B)};
}

bool tuple_is_edge(const KGraph& h, const std::vector<int>& parts, const std::vector<int>& I,
                   const std::vector<Vertex>& xs, const std::vector<int>& J, Side z) {
  check_tuple(parts, I, xs);
  if (static_cast<int>(xs.size()) != h.k()) return false;
  // x' in H_A needs no copies; in H_B exactly one.
  std::size_t copies = 0;
  for (int j : J) copies += contains(I, j);
  if (z == Side::A) return copies == 0 && h.has_edge(sorted_set(xs));
  if (copies != 1) return false;
  return h.has_edge(sorted_set(xs));
}

std::vector<GuestTuple> edge_tuples(const std::vector<KGraph>& guests,
                                    const std::vector<std::vector<int>>& parts,
                                    const std::vector<int>& I) {
  std::vector<GuestTuple> out;
  for (std::uint32_t g = 0; g < guests.size(); ++g) {
    std::set<std::vector<Vertex>> seen;
    for (const auto& e : guests[g].edges()) {
      std::vector<Vertex> xs;
      for (int i : I)
        for (Vertex v : e)
          if (parts[g][v] == i) xs.push_back(v);
      if (xs.size() == I.size() && seen.insert(xs).second) out.push_back({g, xs});
    }
  }
  return out;
}

std::map<PatternQuad, std::vector<GuestTuple>> classify(const std::vector<KGraph>& guests,
                                                        const std::vector<std::vector<int>>& parts,
                                                        int r, const std::vector<int>& I,
                                                        const std::vector<int>& J) {
  std::map<PatternQuad, std::vector<GuestTuple>> out;
  for (auto& t : edge_tuples(guests, parts, I))
    out[pattern_quad(guests[t.guest], parts[t.guest], r, I, t.xs, J)].push_back(t);
  return out;
}

std::vector<GuestTuple> pattern_class(const std::vector<KGraph>& guests,
                                      const std::vector<std::vector<int>>& parts, int r,
                                      const PatternQuad& P, const std::vector<int>& I,
                                      const std::vector<int>& J) {
  std::vector<GuestTuple> out;
  for (auto& t : edge_tuples(guests, parts, I))
    if (pattern_quad(guests[t.guest], parts[t.guest], r, I, t.xs, J) == P) out.push_back(t);
  return out;
}

PatternQuad simple_quad(const PatternVector& p, const PatternVector& pp) {
  return {p, pp, PatternVector(p.size(), 0), PatternVector(p.size(), 0)};
}

}  // namespace hpack
