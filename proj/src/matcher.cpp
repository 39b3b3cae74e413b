#include "hpack/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "hpack/errors.hpp"

namespace hpack {

void MatchHypergraph::validate() const {
  for (const auto& e : edges) {
    if (static_cast<int>(e.size()) != uniformity) throw InputError("MatchHypergraph: edge of wrong size");
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] >= num_vertices) throw InputError("MatchHypergraph: vertex out of range");
      if (i && e[i - 1] >= e[i]) throw InputError("MatchHypergraph: edge not sorted/distinct");
    }
  }
}

DegreeStats degree_stats(const MatchHypergraph& h) {
  DegreeStats s;
  s.edges = h.edges.size();
  std::vector<std::size_t> deg(h.num_vertices, 0);
  std::unordered_map<std::uint64_t, std::size_t> codeg;
  for (const auto& e : h.edges) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      s.delta = std::max(s.delta, ++deg[e[i]]);
      for (std::size_t j = i + 1; j < e.size(); ++j) {
        auto c = ++codeg[(static_cast<std::uint64_t>(e[i]) << 32) | e[j]];
        s.max_codegree = std::max(s.max_codegree, c);
      }
    }
  }
  s.delta2 = s.max_codegree >= 2 ? s.max_codegree : 0;
  return s;
}

void TupleWeight::add(EdgeTuple t, double w) {
  if (static_cast<int>(t.size()) != arity_) throw InputError("TupleWeight: arity mismatch");
  if (w < 0 || !std::isfinite(w)) throw InputError("TupleWeight: weight must be finite and >= 0");
  std::sort(t.begin(), t.end());
  if (std::adjacent_find(t.begin(), t.end()) != t.end()) throw InputError("TupleWeight: repeated edge id");
  if (w > 0) w_[std::move(t)] += w;
}

double TupleWeight::total() const {
  double s = 0;
  for (const auto& [t, w] : w_) s += w;
  return s;
}

double TupleWeight::norm(int m) const {
  if (m < 1 || m > arity_) throw InputError("TupleWeight::norm: m out of range");
  std::map<EdgeTuple, double> acc;
  for (const auto& [t, w] : w_) {
    VSet pool(t.begin(), t.end());
    for_each_subset(pool, m, [&](const VSet& s) { acc[EdgeTuple(s.begin(), s.end())] += w; });
  }
  double best = 0;
  for (const auto& [t, w] : acc) best = std::max(best, w);
  return best;
}

bool TupleWeight::clean(const MatchHypergraph& h) const {
  for (const auto& [t, w] : w_)
    if (!is_matching(h, t)) return false;
  return true;
}

double TupleWeight::on_edges(const std::vector<std::uint32_t>& ids) const {
  std::vector<std::uint32_t> s(ids);
  std::sort(s.begin(), s.end());
  double tot = 0;
  for (const auto& [t, w] : w_)
    if (std::includes(s.begin(), s.end(), t.begin(), t.end())) tot += w;
  return tot;
}

bool is_matching(const MatchHypergraph& h, const std::vector<std::uint32_t>& ids) {
  std::vector<Vertex> seen;
  for (auto i : ids) {
    if (i >= h.edges.size()) return false;
    seen.insert(seen.end(), h.edges[i].begin(), h.edges[i].end());
  }
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

bool is_maximal_matching(const MatchHypergraph& h, const std::vector<std::uint32_t>& ids) {
  if (!is_matching(h, ids)) return false;
  std::vector<bool> used(h.num_vertices, false);
  for (auto i : ids)
    for (auto v : h.edges[i]) used[v] = true;
  for (const auto& e : h.edges)
    if (std::none_of(e.begin(), e.end(), [&](Vertex v) { return used[v]; })) return false;
  return true;
}

std::vector<std::uint32_t> random_greedy_matching(const MatchHypergraph& h, std::mt19937_64& rng) {
  // Scanning a uniform random order and keeping every edge that is still free
  // picks, at each step, a uniform surviving edge.
  std::vector<std::uint32_t> order(h.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> used(h.num_vertices, false);
  std::vector<std::uint32_t> out;
  for (auto i : order) {
    const auto& e = h.edges[i];
    if (std::any_of(e.begin(), e.end(), [&](Vertex v) { return used[v]; })) continue;
    for (auto v : e) used[v] = true;
    out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

MatcherResult pseudorandom_matching(const MatchHypergraph& h, const std::vector<TupleWeight>& weights,
                                    const MatcherOptions& opt, std::mt19937_64& rng) {
  h.validate();
  auto st = degree_stats(h);
  if (opt.codegree_exponent > 0 && st.delta2 > std::pow(double(st.delta), 1.0 - opt.codegree_exponent))
    throw PreconditionError("pseudorandom_matching: codegree too large for the requested exponent");
  for (const auto& w : weights) {
    if (opt.require_clean && !w.clean(h)) throw PreconditionError("pseudorandom_matching: weight not clean");
    for (const auto& [t, x] : w.support())
      for (auto i : t)
        if (i >= h.edges.size()) throw InputError("pseudorandom_matching: weight on unknown edge");
  }
  MatcherResult best;
  double best_err = std::numeric_limits<double>::infinity();
  double delta = std::max<double>(1.0, static_cast<double>(st.delta));
  for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
    std::uint64_t seed = rng();
    std::mt19937_64 local(seed);
    MatcherResult r;
    r.seed = seed;
    r.restarts = attempt;
    r.matching = random_greedy_matching(h, local);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t wi = 0; wi < weights.size(); ++wi) {
      const auto& w = weights[wi];
      double target = w.total() / std::pow(delta, w.arity());
      double got = w.on_edges(r.matching);
      r.ratios.push_back(target > 0 ? got / target : (got == 0 ? 1.0 : INFINITY));
      double err = std::abs(got - target) - opt.tol * target - opt.additive_slack;
      if (err > worst) {
        worst = err;
        r.worst_weight = static_cast<long>(wi);
      }
    }
    r.worst_error = weights.empty() ? 0 : worst;
    r.ok = r.worst_error <= 1e-9;
    if (r.ok) return r;
    if (r.worst_error < best_err) {
      best_err = r.worst_error;
      best = r;
    }
  }
  if (!opt.throw_on_failure) return best;
  throw RoundFailure("pseudorandom_matching: restart budget exhausted; weight " +
                     std::to_string(best.worst_weight) + " off by " + std::to_string(best.worst_error));
}

namespace {

void extend(const MatchHypergraph& h, std::vector<int>& cover, std::vector<std::uint32_t>& cur,
            std::size_t from, std::vector<std::vector<std::uint32_t>>& out) {
  // Branch on the first free edge at or after `from`: take it, or skip it.
  // A skipped edge must end up blocked, which is checked at the leaf.
  std::size_t i = from;
  auto is_free = [&](std::size_t j) {
    return std::none_of(h.edges[j].begin(), h.edges[j].end(), [&](Vertex v) { return cover[v] > 0; });
  };
  while (i < h.edges.size() && !is_free(i)) ++i;
  if (i == h.edges.size()) {
    for (std::size_t j = 0; j < h.edges.size(); ++j)
      if (is_free(j)) return;
    out.push_back(cur);
    return;
  }
  for (auto v : h.edges[i]) ++cover[v];
  cur.push_back(static_cast<std::uint32_t>(i));
  extend(h, cover, cur, i + 1, out);
  cur.pop_back();
  for (auto v : h.edges[i]) --cover[v];
  extend(h, cover, cur, i + 1, out);
}

}  // namespace

std::vector<std::vector<std::uint32_t>> brute_force_matchings(const MatchHypergraph& h) {
  if (h.edges.size() > 22) throw InputError("brute_force_matchings: more than 22 edges");
  h.validate();
  std::vector<int> cover(h.num_vertices, 0);
  std::vector<std::uint32_t> cur;
  std::vector<std::vector<std::uint32_t>> out;
  extend(h, cover, cur, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hpack
