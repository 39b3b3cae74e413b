#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hpack/errors.hpp"
#include "hpack/generators.hpp"
#include "hpack/matcher.hpp"

#include "oracles.hpp"

using namespace hpack;
using namespace oracles;

namespace {

MatchHypergraph random_hyper(std::size_t nv, int u, std::size_t ne, std::mt19937_64& rng) {
  MatchHypergraph h{nv, u, {}};
  std::set<VSet> seen;
  std::uniform_int_distribution<Vertex> pick(0, static_cast<Vertex>(nv - 1));
  while (h.edges.size() < ne) {
    VSet e;
    while (e.size() < static_cast<std::size_t>(u)) {
      Vertex v = pick(rng);
      if (std::find(e.begin(), e.end(), v) == e.end()) e.push_back(v);
    }
    std::sort(e.begin(), e.end());
    if (seen.insert(e).second) h.edges.push_back(e);
  }
  return h;
}

}  // namespace

TEST(DegreeStats, DisjointEdges) {
  MatchHypergraph h{9, 3, {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}}};
  auto s = degree_stats(h);
  EXPECT_EQ(s.delta, 1u);
  EXPECT_EQ(s.delta2, 0u);
  EXPECT_EQ(s.max_codegree, 1u);
  EXPECT_EQ(s.edges, 3u);
}

TEST(DegreeStats, Sunflower) {
  MatchHypergraph h{8, 3, {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}, {0, 1, 5}, {0, 1, 6}}};
  auto s = degree_stats(h);
  EXPECT_EQ(s.delta2, 5u);
  EXPECT_EQ(s.delta, 5u);
}

TEST(DegreeStats, MatchesTripleLoop) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    auto h = random_hyper(12, 3, 25, rng);
    std::size_t d = 0, c = 0;
    for (Vertex v = 0; v < 12; ++v) {
      std::size_t dv = 0;
      for (auto& e : h.edges) dv += std::count(e.begin(), e.end(), v);
      d = std::max(d, dv);
      for (Vertex w = v + 1; w < 12; ++w) {
        std::size_t cw = 0;
        for (auto& e : h.edges)
          cw += std::count(e.begin(), e.end(), v) && std::count(e.begin(), e.end(), w);
        c = std::max(c, cw);
      }
    }
    auto s = degree_stats(h);
    EXPECT_EQ(s.delta, d);
    EXPECT_EQ(s.max_codegree, c);
    EXPECT_EQ(s.delta2, c >= 2 ? c : 0);
  }
}

TEST(TupleWeight, NormsAndClean) {
  MatchHypergraph h{6, 2, {{0, 1}, {2, 3}, {4, 5}, {1, 2}}};
  TupleWeight w(2);
  w.add({0, 1}, 1.0);
  w.add({1, 0}, 0.5);  // same tuple
  w.add({0, 2}, 2.0);
  EXPECT_DOUBLE_EQ(w.total(), 3.5);
  EXPECT_DOUBLE_EQ(w.norm(1), 3.5);  // edge 0 is in both tuples
  EXPECT_DOUBLE_EQ(w.norm(2), 2.0);
  EXPECT_TRUE(w.clean(h));
  w.add({0, 3}, 1.0);  // {0,1} and {1,2} share vertex 1
  EXPECT_FALSE(w.clean(h));
  EXPECT_THROW(w.add({1, 1}, 1.0), InputError);
  EXPECT_THROW(w.add({1}, 1.0), InputError);
  EXPECT_THROW(w.add({1, 2}, -1.0), InputError);
}

TEST(TupleWeight, ZeroLawOnMatchings) {
  // omega(M) sums exactly the supported tuples inside M
  std::mt19937_64 rng(11);
  auto h = random_hyper(30, 3, 40, rng);
  auto m = random_greedy_matching(h, rng);
  TupleWeight w(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::uint32_t i = 0; i < h.edges.size(); ++i)
    for (std::uint32_t j = i + 1; j < h.edges.size(); ++j)
      if (is_matching(h, {i, j})) w.add({i, j}, u(rng));
  double direct = 0;
  for (std::size_t a = 0; a < m.size(); ++a)
    for (std::size_t b = a + 1; b < m.size(); ++b) {
      auto it = w.support().find({m[a], m[b]});
      if (it != w.support().end()) direct += it->second;
    }
  EXPECT_NEAR(w.on_edges(m), direct, 1e-9);
}

TEST(BruteForce, SmallCases) {
  MatchHypergraph tri{3, 2, {{0, 1}, {1, 2}, {0, 2}}};
  auto all = brute_force_matchings(tri);
  ASSERT_EQ(all.size(), 3u);
  for (auto& m : all) EXPECT_EQ(m.size(), 1u);
  MatchHypergraph two{4, 2, {{0, 1}, {2, 3}}};
  auto b = brute_force_matchings(two);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].size(), 2u);
  MatchHypergraph big{60, 2, {}};
  for (Vertex i = 0; i < 23; ++i) big.edges.push_back({i, static_cast<Vertex>(i + 30)});
  EXPECT_THROW(brute_force_matchings(big), InputError);
}

TEST(BruteForce, MatchesSubsetOracle) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 60; ++rep) {
    std::size_t ne = 4 + rep % 15;
    auto h = random_hyper(10, 2 + rep % 2, ne, rng);
    auto got = brute_force_matchings(h);
    std::set<std::vector<std::uint32_t>> gs(got.begin(), got.end());
    EXPECT_EQ(gs.size(), got.size());
    EXPECT_EQ(gs, subset_oracle(h));
  }
}

TEST(RandomGreedy, DisjointAndMaximal) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    auto h = random_hyper(40, 3, 80, rng);
    auto m = random_greedy_matching(h, rng);
    EXPECT_TRUE(is_maximal_matching(h, m));
  }
}

TEST(RandomGreedy, HitsEveryMaximalMatchingOnSmallInstances) {
  // Uniform surviving-edge greedy reaches every maximal matching with positive
  // probability; on a path of 5 edges the three maximal matchings all show up.
  MatchHypergraph p{6, 2, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}};
  auto all = brute_force_matchings(p);
  std::set<std::vector<std::uint32_t>> seen;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 400; ++i) seen.insert(random_greedy_matching(p, rng));
  EXPECT_EQ(seen, std::set<std::vector<std::uint32_t>>(all.begin(), all.end()));
}

TEST(PseudorandomMatching, DisjointEdgesTakeEverything) {
  MatchHypergraph h{12, 3, {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}}};
  TupleWeight count(1);
  for (std::uint32_t i = 0; i < 4; ++i) count.add({i}, 1.0);
  std::mt19937_64 rng(1);
  auto r = pseudorandom_matching(h, {count}, {}, rng);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.matching.size(), 4u);
  EXPECT_DOUBLE_EQ(r.ratios[0], 1.0);
}

TEST(PseudorandomMatching, LinearRegularCountingRatio) {
  int good = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    auto g = gen_linear_regular_3graph(100, 30, rng);
    MatchHypergraph h{g.n(), 3, g.edges()};
    auto st = degree_stats(h);
    ASSERT_EQ(st.delta, 30u);
    ASSERT_EQ(st.delta2, 0u);
    auto m = random_greedy_matching(h, rng);
    ASSERT_TRUE(is_maximal_matching(h, m));
    double ratio = double(m.size()) * 30.0 / 3000.0;
    good += std::abs(ratio - 1.0) <= 0.25;
  }
  EXPECT_GE(good, 18);
}

TEST(PseudorandomMatching, SlackAcceptsSmallWeights) {
  // A weight on one tuple has target far below 1; only the additive slack can
  // accept it whichever way the edge falls.
  std::mt19937_64 rng(4);
  auto g = gen_linear_regular_3graph(20, 6, rng);
  MatchHypergraph h{g.n(), 3, g.edges()};
  TupleWeight tiny(1);
  tiny.add({0}, 1.0);
  MatcherOptions opt;
  opt.restarts = 0;
  opt.additive_slack = 1.0;
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(pseudorandom_matching(h, {tiny}, opt, rng).ok);
  opt.additive_slack = 0;
  opt.throw_on_failure = false;
  opt.restarts = 3;
  int fails = 0;
  for (int i = 0; i < 10; ++i) fails += !pseudorandom_matching(h, {tiny}, opt, rng).ok;
  EXPECT_GT(fails, 0);
  opt.throw_on_failure = true;
  opt.restarts = 0;
  bool threw = false;
  for (int i = 0; i < 20 && !threw; ++i) {
    try {
      pseudorandom_matching(h, {tiny}, opt, rng);
    } catch (const RoundFailure&) {
      threw = true;
    }
  }
  EXPECT_TRUE(threw);
}

TEST(PseudorandomMatching, RejectsDirtyWeightsAndCodegree) {
  MatchHypergraph h{5, 2, {{0, 1}, {1, 2}, {3, 4}}};
  TupleWeight dirty(2);
  dirty.add({0, 1}, 1);
  std::mt19937_64 rng(1);
  EXPECT_THROW(pseudorandom_matching(h, {dirty}, {}, rng), PreconditionError);
  MatchHypergraph sun{8, 3, {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}, {0, 1, 5}}};
  MatcherOptions opt;
  opt.codegree_exponent = 0.5;
  EXPECT_THROW(pseudorandom_matching(sun, {}, opt, rng), PreconditionError);
}
