#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "hpack/errors.hpp"
#include "hpack/packer.hpp"

using namespace hpack;

namespace {

// r clusters of size n, one reduced edge {0,..,k-1} plus extra random ones,
// every guest a matching of per_edge edges in each reduced edge.
BlowupInstance instance(std::mt19937_64& rng, int r, std::size_t n, int guests, double d, int reduced_edges,
                        std::size_t per_edge) {
  return fixtures::random_blowup(rng, r, 3, n, guests, d, reduced_edges, per_edge);
}

PackingState split_state(const BlowupInstance& b, double gamma, std::mt19937_64& rng) {
  auto [a, bb] = fixtures::coin_split(b.host, gamma, rng);
  return make_state(b, a, bb);
}

std::vector<std::pair<VSet, std::vector<int>>> oracle_relevant(const KGraph& R, const std::vector<bool>& emb, int q) {
  std::vector<std::pair<VSet, std::vector<int>>> out;
  for (const auto& re : R.edges()) {
    if (!std::binary_search(re.begin(), re.end(), static_cast<Vertex>(q))) continue;
    int open = 0;
    for (Vertex c : re) open += static_cast<int>(c) != q && !emb[c];
    if (open > 1) continue;
    std::vector<int> rel;
    for (Vertex c : re)
      if (static_cast<int>(c) != q && (open == 0 || !emb[c])) rel.push_back(static_cast<int>(c));
    out.push_back({re, rel});
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Room for the completion at small n: mu d_B n well above one.
ParameterLadder roomy() {
  auto L = ParameterLadder::from_profile("desk");
  L.gamma = 0.5;
  L.mu = 0.3;
  return L;
}

}  // namespace

TEST(Ladder, DefaultsAndProfiles) {
  auto L = ParameterLadder::from_profile("desk");
  L.finalize(3);
  EXPECT_EQ(L.T, 27 * 64);
  EXPECT_DOUBLE_EQ(L.dA, 0.75);
  EXPECT_DOUBLE_EQ(L.dB, 0.25);
  EXPECT_DOUBLE_EQ(L.eps_at(0), L.eps0);
  EXPECT_DOUBLE_EQ(L.eps_at(L.T), L.epsT);
  EXPECT_DOUBLE_EQ(L.eps_at(10 * L.T), L.epsT);
  EXPECT_FALSE(L.enforce_all);
  auto P = ParameterLadder::from_profile("strict");
  EXPECT_TRUE(P.enforce_all);
  EXPECT_THROW(ParameterLadder::from_profile("loose"), InputError);
  auto bad = L;
  bad.mu = 0;
  EXPECT_THROW(bad.finalize(3), InputError);
  auto back = ParameterLadder::from_json(L.to_json());
  EXPECT_EQ(back.to_json(), L.to_json());
}

TEST(Augment, RelevantEdgesMatchDirectReading) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    int r = 5 + static_cast<int>(rng() % 4);
    auto R = fixtures::random_reduced(r, 3, 6, rng);
    std::vector<bool> emb(r);
    for (int i = 0; i < r; ++i) emb[i] = rng() % 2;
    int q = static_cast<int>(rng() % r);
    emb[q] = false;
    auto got = relevant_reduced_edges(R, emb, q);
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, oracle_relevant(R, emb, q));
  }
}

TEST(Augment, SaturatedGuestIsUnchanged) {
  std::mt19937_64 rng(5);
  auto b = instance(rng, 3, 12, 1, 1.0, 1, 12);
  auto s = split_state(b, 0.25, rng);
  fixtures::random_partial(s, {1}, 0.0, rng);
  auto rep = augment_guests(s, b.reduced, 0, rng);
  EXPECT_EQ(rep.added[0], 0u);
  EXPECT_EQ(s.cons[0].h.num_edges(), s.cons[0].real_edges);
  EXPECT_EQ(rep.b[2], 1);
  EXPECT_EQ(check_augmentation(s, b.reduced, 0), "");
}

TEST(Augment, NothingRelevantBeforeNeighboursAreEmbedded) {
  std::mt19937_64 rng(6);
  auto b = instance(rng, 3, 10, 1, 1.0, 1, 4);
  auto s = split_state(b, 0.25, rng);
  auto rep = augment_guests(s, b.reduced, 0, rng);
  EXPECT_EQ(rep.added[0], 0u);
  for (int x : rep.b) EXPECT_EQ(x, 0);
}

// Conditions (a)-(c) and the back-degree count hold after every round of a
// random schedule on sparse guests, with synthetic edges carried over.
TEST(Augment, ConditionsHoldAcrossRounds) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 12; ++trial) {
    std::size_t n = 14;
    auto b = instance(rng, 6, n, 2, 0.8, 5, 3 + rng() % 8);
    auto s = split_state(b, 0.25, rng);
    std::vector<int> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int q : order) {
      auto rep = augment_guests(s, b.reduced, q, rng);
      ASSERT_EQ(check_augmentation(s, b.reduced, q), "") << "trial " << trial << " q " << q;
      for (std::size_t h = 0; h < s.guests.size(); ++h)
        for (std::uint32_t e = 0; e < s.cons[h].real_edges; ++e) EXPECT_EQ(s.cons[h].h.edge(e), s.guests[h].edge(e));
      (void)rep;
      fixtures::random_partial(s, {q}, 0.1, rng);
    }
  }
}

TEST(Augment, BCountsReducedEdgesPerCluster) {
  std::mt19937_64 rng(8);
  auto b = instance(rng, 5, 10, 1, 1.0, 4, 10);
  auto s = split_state(b, 0.25, rng);
  fixtures::random_partial(s, {1, 2}, 0.0, rng);
  auto rep = augment_guests(s, b.reduced, 0, rng);
  std::vector<int> want(5, 0);
  for (const auto& [re, cls] : oracle_relevant(b.reduced, s.embedded, 0))
    for (int c : cls) ++want[c];
  EXPECT_EQ(rep.b, want);
}

TEST(AuxHypergraph, SingleEdgeSingleLabel) {
  EdgeLabelling l;
  l.width = 1;
  l.edges.push_back({0, 3, 7, {VSet{1, 2, 7}}});
  auto aux = build_aux_hypergraph(l);
  ASSERT_EQ(aux.h.edges.size(), 1u);
  EXPECT_EQ(aux.h.uniformity, 3);
  EXPECT_EQ(aux.h.edges[0].size(), 3u);
  EXPECT_EQ(aux.label_vertices, 1u);
  EXPECT_EQ(aux.dummy_vertices, 0u);
  EXPECT_EQ(pull_back(aux, {0}), std::vector<std::size_t>{0});
}

TEST(AuxHypergraph, ShortLabelListsArePadded) {
  EdgeLabelling l;
  l.width = 2;
  l.edges.push_back({0, 3, 7, {VSet{1, 2, 7}, VSet{4, 5, 7}}});
  l.edges.push_back({0, 3, 8, {}});
  auto aux = build_aux_hypergraph(l);
  aux.h.validate();
  EXPECT_EQ(aux.h.uniformity, 4);
  EXPECT_EQ(aux.dummy_vertices, 2u);
}

TEST(AuxHypergraph, RepeatedEdgeIsInternalError) {
  EdgeLabelling l;
  l.width = 0;
  l.edges.push_back({0, 3, 7, {}});
  l.edges.push_back({0, 3, 7, {}});
  EXPECT_THROW(build_aux_hypergraph(l), std::logic_error);
}

TEST(AuxHypergraph, MatchingsPullBackConflictFree) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto b = instance(rng, 4, 12, 3, 0.9, 3, 8);
    auto s = split_state(b, 0.25, rng);
    fixtures::random_partial(s, {1, 2, 3}, 0.1, rng);
    auto c = CandidacyCollection::build(s);
    auto l = build_labelling(s, c, 0);
    auto aux = build_aux_hypergraph(l);
    aux.h.validate();
    EXPECT_EQ(aux.h.edges.size(), l.edges.size());
    auto m = random_greedy_matching(aux.h, rng);
    EXPECT_TRUE(conflict_free(l, pull_back(aux, m)));
  }
}

// Degree census of the auxiliary hypergraph against (1+tol) d0 n on a dense
// first round, d0 measured from the candidacy graph.
TEST(AuxHypergraph, MaxDegreeNearAverage) {
  std::mt19937_64 rng(12);
  auto b = instance(rng, 3, 40, 2, 1.0, 1, 40);
  auto s = split_state(b, 0.25, rng);
  fixtures::random_partial(s, {1, 2}, 0.0, rng);
  auto c = CandidacyCollection::build(s);
  auto l = build_labelling(s, c, 0);
  auto aux = build_aux_hypergraph(l);
  double d0 = static_cast<double>(l.edges.size()) / (2.0 * 40 * 40);
  EXPECT_LE(static_cast<double>(degree_stats(aux.h).delta), 1.25 * d0 * 40);
}

TEST(PackCluster, CompleteInstanceCoversFirstCluster) {
  std::mt19937_64 rng(13);
  auto b = instance(rng, 3, 60, 1, 1.0, 1, 60);
  auto s = split_state(b, 0.25, rng);
  auto c = CandidacyCollection::build(s);
  auto L = ParameterLadder::from_profile("desk");
  L.finalize(3);
  auto out = pack_cluster(s, c, b.reduced, 0, L, rng);
  EXPECT_GE(out.ext.coverage[0], 1 - L.eps_prime);
  EXPECT_TRUE(s.embedded[0]);
  EXPECT_FALSE(c.a[0][0].has_value());
  // sigma+ is a bijection onto V_0
  std::set<Vertex> img;
  for (const auto& [x, v] : out.ext.sigma_plus[0]) {
    EXPECT_EQ(s.host_parts[v], 0);
    img.insert(v);
  }
  EXPECT_EQ(img.size(), 60u);
  for (const auto& [x, v] : out.ext.sigma[0]) EXPECT_EQ(out.ext.sigma_plus[0].at(x), v);
}

TEST(PackCluster, LastClusterKeepsEdgesDistinctAndLocalRatioNearOne) {
  std::mt19937_64 rng(14);
  auto b = instance(rng, 3, 40, 2, 1.0, 1, 40);
  auto s = split_state(b, 0.25, rng);
  fixtures::random_partial(s, {1, 2}, 0.0, rng);
  auto c = CandidacyCollection::build(s);
  auto L = ParameterLadder::from_profile("desk");
  L.finalize(3);
  auto out = pack_cluster(s, c, b.reduced, 0, L, rng);
  std::set<VSet> used(out.used.begin(), out.used.end());
  EXPECT_EQ(used.size(), out.used.size());
  for (const auto& e : out.used) EXPECT_TRUE(s.ga.has_edge(e));
  EXPECT_NEAR(out.report.local_ratio, out.report.min_coverage, 0.25);
}

TEST(PackCluster, EdgelessGuestLeavesOtherCandidacyAlone) {
  std::mt19937_64 rng(15);
  auto b = instance(rng, 3, 10, 1, 1.0, 1, 0);
  auto s = split_state(b, 0.25, rng);
  auto c = CandidacyCollection::build(s);
  auto before = c.b[0][1]->num_edges();
  auto L = ParameterLadder::from_profile("desk");
  L.finalize(3);
  auto out = pack_cluster(s, c, b.reduced, 0, L, rng);
  EXPECT_DOUBLE_EQ(out.ext.coverage[0], 1.0);
  EXPECT_EQ(c.b[0][1]->num_edges(), before);
}

TEST(PackCluster, RejectsEmbeddedCluster) {
  std::mt19937_64 rng(16);
  auto b = instance(rng, 3, 10, 1, 1.0, 1, 5);
  auto s = split_state(b, 0.25, rng);
  auto c = CandidacyCollection::build(s);
  s.embedded[0] = true;
  auto L = ParameterLadder::from_profile("desk");
  L.finalize(3);
  EXPECT_THROW(pack_cluster(s, c, b.reduced, 0, L, rng), InputError);
}

TEST(PackCluster, FailingCheckIsRetriedThenNamed) {
  std::mt19937_64 rng(17);
  auto b = instance(rng, 3, 10, 1, 1.0, 1, 5);
  auto s = split_state(b, 0.25, rng);
  auto c = CandidacyCollection::build(s);
  auto L = ParameterLadder::from_profile("desk");
  L.round_retries = 3;
  L.finalize(3);
  int calls = 0;
  RoundCheck always = [&](const PackingState& st, const CandidacyCollection&, int q) {
    ++calls;
    EXPECT_TRUE(st.embedded[q - 1]);
    Assertion a;
    a.q = q;
    a.clause = "x:never";
    a.enforced = true;
    a.checked = a.violations = 1;
    return std::vector<Assertion>{a};
  };
  try {
    pack_cluster(s, c, b.reduced, 0, L, rng, always);
    FAIL();
  } catch (const RoundFailure& e) {
    EXPECT_NE(std::string(e.what()).find("x:never"), std::string::npos);
  }
  EXPECT_EQ(calls, 3);
  // state restored after the last attempt
  EXPECT_FALSE(s.embedded[0]);
  for (long v : s.phi[0]) EXPECT_EQ(v, -1);
  EXPECT_TRUE(c.a[0][0].has_value());
}

TEST(Iterative, SmokeSingleReducedEdge) {
  std::mt19937_64 rng(21);
  auto b = instance(rng, 3, 40, 1, 1.0, 1, 40);
  auto L = ParameterLadder::from_profile("desk");
  auto p = run_iterative(b, {}, L, rng);
  ASSERT_EQ(p.rounds.size(), 3u);
  for (auto left : p.leftover_per_cluster) EXPECT_LE(static_cast<double>(left), p.ladder.epsT * 40 + 1e-9);
  // partial packing: every fully embedded edge on a distinct G_A edge
  std::set<VSet> seen;
  for (const auto& e : p.state.guests[0].edges()) {
    VSet img;
    bool full = true;
    for (Vertex x : e) {
      full = full && p.state.phi[0][x] >= 0;
      if (full) img.push_back(static_cast<Vertex>(p.state.phi[0][x]));
    }
    if (!full) continue;
    img = sorted_set(img);
    EXPECT_TRUE(p.state.ga.has_edge(img));
    EXPECT_TRUE(seen.insert(img).second);
  }
  EXPECT_FALSE(p.sq_assertions.empty());
}

TEST(Iterative, EarlierClustersNeverMove) {
  std::mt19937_64 rng(22);
  auto b = instance(rng, 5, 16, 2, 1.0, 3, 10);
  auto L = ParameterLadder::from_profile("desk");
  L.finalize(3);
  auto sch = build_schedule(b.reduced, L.alpha);
  auto rb = relabel(b, sch);
  auto split = split_host(rb.host, L.gamma, L.d, rng, {L.eps0, L.t, 50, 3, false}, rb.host_parts, &rb.reduced);
  auto s = make_state(rb, split.a, split.b);
  auto c = CandidacyCollection::build(s);
  std::vector<Phi> prev = s.phi;
  for (int q = 0; q < rb.r; ++q) {
    pack_cluster(s, c, rb.reduced, q, L, rng);
    for (std::size_t h = 0; h < s.guests.size(); ++h)
      for (Vertex x = 0; x < s.guests[h].n(); ++x)
        if (s.guest_parts[h][x] < q) EXPECT_EQ(s.phi[h][x], prev[h][x]);
    prev = s.phi;
  }
}

TEST(Iterative, ZeroGuests) {
  std::mt19937_64 rng(23);
  auto b = instance(rng, 3, 10, 0, 1.0, 1, 0);
  auto p = run_iterative(b, {}, ParameterLadder::from_profile("desk"), rng);
  EXPECT_EQ(p.used_a.size(), 0u);
  auto done = complete_packing(p, rng);
  EXPECT_TRUE(done.phi.empty());
  EXPECT_TRUE(verify_packing(p.inst, done.phi).ok);
}

TEST(Iterative, NonMatchingGuestIsRejected) {
  std::mt19937_64 rng(24);
  auto b = instance(rng, 3, 10, 1, 1.0, 1, 3);
  auto e = b.guests[0].edge(0);
  VSet f{e[0], e[1], e[2] == 20 ? 21u : 20u};
  b.guests[0].add_edge(sorted_set(f));
  EXPECT_THROW(run_iterative(b, {}, ParameterLadder::from_profile("desk"), rng), PreconditionError);
}

TEST(Completion, TotalAndValid) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    auto b = instance(rng, 3, 70, 2, 1.0, 1, 70);
    auto p = run_iterative(b, {}, roomy(), rng);
    auto done = complete_packing(p, rng);
    auto audit = verify_packing(p.inst, done.phi);
    EXPECT_TRUE(audit.ok) << audit.to_json().dump();
    for (const auto& f : done.phi)
      for (long v : f) EXPECT_GE(v, 0);
    // edges touching re-embedded vertices sit on G_B
    for (const auto& e : done.used_b) EXPECT_TRUE(p.state.gb.has_edge(e));
  }
}

TEST(Completion, UntouchedVerticesKeepTheirImages) {
  std::mt19937_64 rng(32);
  auto b = instance(rng, 3, 30, 1, 1.0, 1, 30);
  auto p = run_iterative(b, {}, roomy(), rng);
  auto done = complete_packing(p, rng);
  std::set<Vertex> moved;
  for (const auto& [y, w] : done.good_pairs[0]) moved.insert(y);
  std::size_t kept = 0;
  for (Vertex x = 0; x < p.state.guests[0].n(); ++x)
    if (p.state.phi[0][x] >= 0 && done.phi[0][x] == p.state.phi[0][x]) ++kept;
  EXPECT_GT(kept, 0u);
  EXPECT_EQ(done.good_vertices[0], moved.size());
}

TEST(Completion, RejectsUnfinishedPartial) {
  std::mt19937_64 rng(33);
  auto b = instance(rng, 3, 10, 1, 1.0, 1, 5);
  auto p = run_iterative(b, {}, ParameterLadder::from_profile("desk"), rng);
  p.state.embedded[1] = false;
  EXPECT_THROW(complete_packing(p, rng), InputError);
}

TEST(Verify, IdentityIsClean) {
  auto g = gen_complete_kgraph(7, 3);
  Phi id(7);
  std::iota(id.begin(), id.end(), 0);
  auto a = verify_packing(g, {g}, {id});
  EXPECT_TRUE(a.ok);
  EXPECT_DOUBLE_EQ(a.coverage, 1.0);
}

TEST(Verify, CollisionIsNamed) {
  auto g = gen_complete_kgraph(6, 3);
  KGraph h(3, 3, {VSet{0, 1, 2}});
  Phi f{0, 1, 2};
  auto a = verify_packing(g, {h, h}, {f, Phi{2, 1, 0}});
  ASSERT_FALSE(a.ok);
  EXPECT_EQ(a.violations[0].kind, "collision");
  EXPECT_EQ(a.violations[0].guest, 1);
}

TEST(Verify, OtherViolationKinds) {
  auto g = KGraph(3, 6, {VSet{0, 1, 2}});
  KGraph h(3, 4, {VSet{0, 1, 2}});
  std::vector<int> hp{0, 0, 1, 1, 2, 2}, gp{0, 1, 2, 2};
  std::vector<std::vector<int>> gps{gp};
  auto a = verify_packing(g, {h}, {Phi{0, 0, 5, -1}}, &hp, &gps);
  std::set<std::string> kinds;
  for (const auto& v : a.violations) kinds.insert(v.kind);
  EXPECT_TRUE(kinds.count("partial"));
  EXPECT_TRUE(kinds.count("injectivity"));
  EXPECT_TRUE(kinds.count("cluster"));
  auto b = verify_packing(g, {h}, {Phi{0, 1, 3, 4}});
  ASSERT_FALSE(b.ok);
  EXPECT_EQ(b.violations[0].kind, "non-edge");
}

TEST(TesterEvaluation, TrivialWindows) {
  TesterSuite suite;
  SetTester full;
  full.cluster = 0;
  full.W = {0, 1, 2, 3};
  full.Y = {{0, {0, 1, 2, 3}}};
  SetTester empty = full;
  empty.W.clear();
  suite.sets = {full, empty};
  std::vector<Phi> phi{Phi{3, 2, 1, 0}};
  auto ev = evaluate_tester_suite(suite, phi, 4, 0.1, 0.5);
  ASSERT_EQ(ev.results.size(), 2u);
  EXPECT_DOUBLE_EQ(ev.results[0].value, 4);
  EXPECT_DOUBLE_EQ(ev.results[0].expected, 4);
  EXPECT_DOUBLE_EQ(ev.results[1].value, 0);
  EXPECT_EQ(ev.passed, 2u);
  EXPECT_DOUBLE_EQ(ev.pass_fraction, 1.0);
}

TEST(TesterEvaluation, VertexTesterWindow) {
  TesterSuite suite;
  VertexTester t;
  t.I = {0};
  t.centres = {1};
  for (Vertex x = 0; x < 4; ++x) t.w[{0, {x}}] = x == 2 ? 1.0 : 0.0;
  suite.vertices = {t};
  auto hit = evaluate_tester_suite(suite, {Phi{0, 3, 1, 2}}, 4, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(hit.results[0].value, 1);
  EXPECT_DOUBLE_EQ(hit.results[0].expected, 0.25);
  EXPECT_TRUE(hit.results[0].ok);  // slack 0.025 + 1
  auto tight = evaluate_tester_suite(suite, {Phi{0, 3, 1, 2}}, 4, 0.1, -5);
  EXPECT_FALSE(tight.results[0].ok);
}
