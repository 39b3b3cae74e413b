#include "hpack/bigraph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/push_relabel_max_flow.hpp>

#include "hpack/errors.hpp"

namespace hpack {

Bigraph::Bigraph(std::size_t a, std::size_t b)
    : a_(a), b_(b), adj_a_(a), adj_b_(b),
      row_a_(a, boost::dynamic_bitset<>(b)), row_b_(b, boost::dynamic_bitset<>(a)) {}

Bigraph::Bigraph(std::size_t a, std::size_t b, const std::vector<Edge>& edges) : Bigraph(a, b) {
  for (auto [x, y] : edges)
    if (!add_edge(x, y)) throw InputError("Bigraph: duplicate edge");
}

bool Bigraph::add_edge(std::uint32_t x, std::uint32_t y) {
  if (x >= a_ || y >= b_) throw InputError("Bigraph: vertex out of range");
  if (row_a_[x].test(y)) return false;
  row_a_[x].set(y);
  row_b_[y].set(x);
  adj_a_[x].push_back(y);
  adj_b_[y].push_back(x);
  ++m_;
  return true;
}

bool Bigraph::remove_edge(std::uint32_t x, std::uint32_t y) {
  if (x >= a_ || y >= b_ || !row_a_[x].test(y)) return false;
  row_a_[x].reset(y);
  row_b_[y].reset(x);
  std::erase(adj_a_[x], y);
  std::erase(adj_b_[y], x);
  --m_;
  return true;
}

std::vector<Bigraph::Edge> Bigraph::edges() const {
  std::vector<Edge> out;
  out.reserve(m_);
  for (std::uint32_t x = 0; x < a_; ++x)
    for (auto y : adj_a_[x]) out.emplace_back(x, y);
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json Bigraph::to_json() const {
  nlohmann::json e = nlohmann::json::array();
  for (auto [x, y] : edges()) e.push_back({x, y});
  return {{"a", a_}, {"b", b_}, {"edges", e}};
}

Bigraph Bigraph::from_json(const nlohmann::json& j) {
  Bigraph g(j.at("a").get<std::size_t>(), j.at("b").get<std::size_t>());
  for (const auto& e : j.at("edges")) {
    if (e.size() != 2) throw InputError("Bigraph json: edge must be a pair");
    if (!g.add_edge(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>()))
      throw InputError("Bigraph json: duplicate edge");
  }
  return g;
}

double density(const Bigraph& g, const std::vector<std::uint32_t>& w1,
               const std::vector<std::uint32_t>& w2) {
  if (w1.empty() || w2.empty()) throw InputError("density: empty side");
  boost::dynamic_bitset<> mask(g.b());
  for (auto y : w2) {
    if (y >= g.b()) throw InputError("density: vertex out of range");
    mask.set(y);
  }
  std::size_t e = 0;
  for (auto x : w1) {
    if (x >= g.a()) throw InputError("density: vertex out of range");
    e += (g.row_a(x) & mask).count();
  }
  return static_cast<double>(e) / (static_cast<double>(w1.size()) * w2.size());
}

double density(const Bigraph& g) {
  if (g.a() == 0 || g.b() == 0) throw InputError("density: empty side");
  return static_cast<double>(g.num_edges()) / (static_cast<double>(g.a()) * g.b());
}

std::uint64_t c4_count(const Bigraph& g) {
  std::uint64_t total = 0;
  for (std::uint32_t x = 0; x < g.a(); ++x) {
    if (g.adj_a(x).size() < 2) continue;
    for (std::uint32_t y = x + 1; y < g.a(); ++y) {
      std::uint64_t c = (g.row_a(x) & g.row_a(y)).count();
      total += c * (c - (c > 0)) / 2;
    }
  }
  return total;
}

bool certify_regular_c4(const Bigraph& g, double eps, double d, double n) {
  if (!(d > 0 && d <= 1)) throw InputError("certify_regular_c4: d must lie in (0,1]");
  auto within = [&](double s) { return std::abs(s - n) <= eps * n; };
  if (!within(static_cast<double>(g.a())) || !within(static_cast<double>(g.b())))
    throw InputError("certify_regular_c4: side sizes not within (1±eps)n");
  const double a = static_cast<double>(g.a()), b = static_cast<double>(g.b());
  if (std::abs(density(g) - d) > eps * d) return false;
  double bound = (1 + eps) * std::pow(d, 4) * a * a * b * b / 4.0;
  return static_cast<double>(c4_count(g)) < bound;
}

bool certify_regular_c4(const Bigraph& g, double eps, double d) {
  return certify_regular_c4(g, eps, d, (static_cast<double>(g.a()) + g.b()) / 2.0);
}

SuperRegularWitness is_super_regular(const Bigraph& g, double eps, double d) {
  if (!(d > 0 && d <= 1)) throw InputError("is_super_regular: d must lie in (0,1]");
  SuperRegularWitness w;
  if (g.a() == 0 || g.b() == 0) {
    w.ok = false;
    return w;
  }
  double worst = 0;
  auto scan = [&](bool side_a, std::size_t count, std::size_t opposite) {
    for (std::uint32_t v = 0; v < count; ++v) {
      double deg = static_cast<double>(side_a ? g.adj_a(v).size() : g.adj_b(v).size());
      double ratio = deg / (d * opposite);
      if (std::abs(ratio - 1) > eps && std::abs(ratio - 1) > worst) {
        worst = std::abs(ratio - 1);
        w.ok = false;
        w.side_a = side_a;
        w.vertex = v;
        w.degree_ratio = ratio;
      }
    }
  };
  scan(true, g.a(), g.b());
  scan(false, g.b(), g.a());
  w.density = density(g);
  const double a = static_cast<double>(g.a()), b = static_cast<double>(g.b());
  w.c4_ratio = static_cast<double>(c4_count(g)) / (std::pow(d, 4) * a * a * b * b / 4.0);
  double n = (a + b) / 2;
  bool sides_ok = std::abs(a - n) <= eps * n && std::abs(b - n) <= eps * n;
  if (!sides_ok || !certify_regular_c4(g, eps, d, n)) {
    w.ok = false;
    w.c4_failed = true;
  }
  return w;
}

std::optional<Bigraph> m_factor(const Bigraph& g, std::size_t m) {
  if (g.a() != g.b()) throw InputError("m_factor: sides must be balanced");
  const std::size_t n = g.a();
  if (m == 0) return Bigraph(n, n);
  using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
  using Graph = boost::adjacency_list<
      boost::vecS, boost::vecS, boost::directedS, boost::no_property,
      boost::property<boost::edge_capacity_t, long,
                      boost::property<boost::edge_residual_capacity_t, long,
                                      boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;
  Graph net(2 * n + 2);
  auto cap = boost::get(boost::edge_capacity, net);
  auto rev = boost::get(boost::edge_reverse, net);
  auto add = [&](std::size_t u, std::size_t v, long c) {
    auto e = boost::add_edge(u, v, net).first;
    auto r = boost::add_edge(v, u, net).first;
    cap[e] = c;
    cap[r] = 0;
    rev[e] = r;
    rev[r] = e;
    return e;
  };
  const std::size_t s = 2 * n, t = 2 * n + 1;
  for (std::size_t i = 0; i < n; ++i) {
    add(s, i, static_cast<long>(m));
    add(n + i, t, static_cast<long>(m));
  }
  std::vector<std::pair<Traits::edge_descriptor, Bigraph::Edge>> arcs;
  for (auto [x, y] : g.edges()) arcs.emplace_back(add(x, n + y, 1), Bigraph::Edge{x, y});
  long flow = boost::push_relabel_max_flow(net, s, t);
  if (flow < static_cast<long>(m * n)) return std::nullopt;
  auto res = boost::get(boost::edge_residual_capacity, net);
  Bigraph out(n, n);
  for (auto& [e, xy] : arcs)
    if (cap[e] - res[e] == 1) out.add_edge(xy.first, xy.second);
  return out;
}

MatchingResult perfect_matching(const Bigraph& g, std::mt19937_64& rng) {
  MatchingResult r;
  const std::size_t na = g.a(), nb = g.b();
  r.mate_a.assign(na, -1);
  std::vector<long> mate_b(nb, -1);
  std::vector<std::vector<std::uint32_t>> adj(na);
  for (std::uint32_t x = 0; x < na; ++x) {
    adj[x] = g.adj_a(x);
    std::shuffle(adj[x].begin(), adj[x].end(), rng);
  }
  std::vector<std::uint32_t> order(na);
  for (std::uint32_t x = 0; x < na; ++x) order[x] = x;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> seen(nb, -1);
  // iterative DFS for an augmenting path from root
  auto augment = [&](std::uint32_t root, int stamp) {
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{root, 0}};
    std::vector<std::uint32_t> via;  // B-vertex used to enter each stack level
    while (!stack.empty()) {
      auto& [x, pos] = stack.back();
      if (pos == adj[x].size()) {
        stack.pop_back();
        if (!via.empty()) via.pop_back();
        continue;
      }
      std::uint32_t y = adj[x][pos++];
      if (seen[y] == stamp) continue;
      seen[y] = stamp;
      if (mate_b[y] < 0) {
        // flip along the path
        via.push_back(y);
        for (std::size_t i = stack.size(); i-- > 0;) {
          std::uint32_t xa = stack[i].first, yb = via[i];
          mate_b[yb] = xa;
          r.mate_a[xa] = yb;
        }
        return true;
      }
      via.push_back(y);
      stack.emplace_back(static_cast<std::uint32_t>(mate_b[y]), 0);
    }
    return false;
  };
  int stamp = 0;
  for (auto x : order) augment(x, stamp++);

  std::size_t matched = 0;
  for (auto m : r.mate_a) matched += m >= 0;
  r.perfect = na == nb && matched == na;
  if (r.perfect) return r;

  // Alternating BFS from a free A-vertex gives a Hall violator.
  for (std::uint32_t x0 = 0; x0 < na; ++x0) {
    if (r.mate_a[x0] >= 0) continue;
    std::vector<char> in_s(na, 0), in_n(nb, 0);
    std::queue<std::uint32_t> q;
    q.push(x0);
    in_s[x0] = 1;
    while (!q.empty()) {
      auto x = q.front();
      q.pop();
      for (auto y : g.adj_a(x)) {
        if (in_n[y]) continue;
        in_n[y] = 1;
        long nx = mate_b[y];
        if (nx >= 0 && !in_s[nx]) {
          in_s[nx] = 1;
          q.push(static_cast<std::uint32_t>(nx));
        }
      }
    }
    for (std::uint32_t x = 0; x < na; ++x)
      if (in_s[x]) r.hall_violator.push_back(x);
    break;
  }
  return r;
}

std::vector<std::vector<long>> decompose_regular(Bigraph g, std::mt19937_64& rng) {
  if (g.a() != g.b()) throw InputError("decompose_regular: sides must be balanced");
  const std::size_t n = g.a();
  std::size_t m = n ? g.adj_a(0).size() : 0;
  for (std::uint32_t x = 0; x < n; ++x)
    if (g.adj_a(x).size() != m || g.adj_b(x).size() != m)
      throw InputError("decompose_regular: graph is not regular");
  std::vector<std::vector<long>> out;
  for (std::size_t i = 0; i < m; ++i) {
    auto pm = perfect_matching(g, rng);
    if (!pm.perfect) throw RoundFailure("decompose_regular: regular bigraph without perfect matching");
    for (std::uint32_t x = 0; x < n; ++x) g.remove_edge(x, static_cast<std::uint32_t>(pm.mate_a[x]));
    out.push_back(std::move(pm.mate_a));
  }
  return out;
}

bool sparse_edge_bound_check(const Bigraph& g, const std::vector<std::uint32_t>& x,
                             const std::vector<std::uint32_t>& y, double eps, double d,
                             double n, bool enforce) {
  if (enforce) {
    double lo = std::pow(n, 0.75 + 3 * eps), hi = eps * n;
    auto ok = [&](std::size_t s) { return lo <= s && s <= hi; };
    if (!ok(x.size()) || !ok(y.size()))
      throw PreconditionError("sparse_edge_bound_check: need n^{3/4+3eps} <= |X|,|Y| <= eps n");
  }
  boost::dynamic_bitset<> mask(g.b());
  for (auto v : y) mask.set(v);
  std::size_t e = 0;
  for (auto v : x) e += (g.row_a(v) & mask).count();
  return static_cast<double>(e) <=
         std::cbrt(eps) * d * n * static_cast<double>(std::max(x.size(), y.size()));
}

}  // namespace hpack
