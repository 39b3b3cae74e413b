#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpack/candidacy.hpp"
#include "hpack/instances.hpp"
#include "hpack/matcher.hpp"
#include "hpack/testers.hpp"

namespace hpack {

/// Explicit constants for one run. eps0 <= eps_j <= epsT along the colour
/// ladder; the desk profile only enforces the coverage contract, the strict
/// profile enforces every runtime clause.
struct ParameterLadder {
  std::string profile = "desk";
  double alpha = 0.25;
  double beta = 0.1;
  double gamma = 0.25;
  double mu = 0.1;
  double eps = 0.05;
  double eps0 = 0.05;
  double epsT = 0.08;
  double eps_prime = 0.15;
  int t = 2;
  int T = 0;  // 0: k^3 alpha^-3
  double d = 1.0;
  double dA = 0, dB = 0;  // 0: (1-gamma)d and gamma d
  double matcher_tol = 0.25;
  int round_retries = 5;
  int matcher_restarts = 20;
  int completion_retries = 5;
  std::size_t registry_budget = 120;
  std::size_t sample_budget = 200;
  bool enforce_all = false;
  std::uint64_t seed = 1;

  /// Fills T, dA, dB from k, alpha, gamma and d; validates ranges.
  void finalize(int k);
  /// eps_j, linear from eps0 at j = 0 to epsT at j = T.
  double eps_at(int j) const;

  nlohmann::json to_json() const;
  static ParameterLadder from_json(const nlohmann::json& j);
  /// "desk" or "strict"; throws InputError otherwise.
  static ParameterLadder from_profile(const std::string& name);
};

/// One runtime clause measured at one point of the run.
struct Assertion {
  int q = -1;  // clusters done, or -1 for the completion
  std::string clause;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  double worst = 0;  // largest excess over the allowed window, 0 if none
  bool enforced = false;
  std::string detail;

  bool ok() const { return violations == 0; }
  nlohmann::json to_json() const;
};

// ---- augmentation ------------------------------------------------------------

struct AugmentReport {
  int cluster = 0;
  std::vector<std::size_t> added;  // synthetic edges per guest
  std::vector<int> b;              // b_i for this round, per cluster
};

/// Reduced edges through q whose other clusters include at most one
/// unembedded cluster, with the clusters c for which the edge is in E_c^R.
std::vector<std::pair<VSet, std::vector<int>>> relevant_reduced_edges(const KGraph& reduced,
                                                                      const std::vector<bool>& embedded, int q);

/// Adds synthetic edges to every constraint graph so that inside each
/// relevant reduced edge every vertex of a relevant cluster lies in one or
/// two edges, cluster-q vertices in at most two, no edge holds two vertices of
/// degree two, and no synthetic pair {x_q, x_c} lies in a real edge. Side-B
/// ownership of synthetic edges follows H_+^c. Throws PreconditionError when
/// the conditions cannot be met.
AugmentReport augment_guests(PackingState& s, const KGraph& reduced, int q, std::mt19937_64& rng);

/// Conditions (a)-(c) and the back-degree count sum_r deg = b_c, checked
/// from scratch. Returns an empty string when all hold.
std::string check_augmentation(const PackingState& s, const KGraph& reduced, int q);

// ---- auxiliary hypergraph ------------------------------------------------------

struct AuxHypergraph {
  MatchHypergraph h;
  std::vector<std::size_t> back;  // aux edge -> labelling edge
  std::size_t width = 0;          // labels per edge after padding
  std::size_t label_vertices = 0;
  std::size_t dummy_vertices = 0;
};

/// One (width+2)-edge {x, v copy} ∪ psi(e) per labelling edge, labels padded
/// with fresh dummy vertices. Throws std::logic_error on a repeated edge.
AuxHypergraph build_aux_hypergraph(const EdgeLabelling& l);

/// Labelling edges of a matching.
std::vector<std::size_t> pull_back(const AuxHypergraph& aux, const std::vector<std::uint32_t>& matching);

// ---- one round -----------------------------------------------------------------

struct ClusterExtension {
  int cluster = 0;
  std::vector<std::map<Vertex, Vertex>> sigma;       // per guest
  std::vector<std::map<Vertex, Vertex>> sigma_plus;  // per guest, cluster-injective
  std::vector<std::size_t> chosen;                   // labelling edges of M(sigma)
  std::vector<double> coverage;                      // |X_0^sigma ∩ X_0^H| / |X_0^H|
};

struct RoundReport {
  int cluster = 0;
  int attempts = 0;
  std::size_t candidacy_edges = 0;
  std::size_t aux_edges = 0;
  std::size_t aux_delta = 0;
  double aux_delta_bound = 0;  // (1+eps^{2/3}) d0 n
  std::size_t label_width = 0;
  bool matcher_ok = false;
  std::vector<double> matcher_ratios;
  double min_coverage = 1;
  double local_ratio = 1;  // |M| d0 n / e(A_0), the counting local tester
  std::vector<Assertion> assertions;

  nlohmann::json to_json() const;
};

/// Post-round check run on the updated state; enforced violations trigger a
/// retry of the round.
using RoundCheck = std::function<std::vector<Assertion>(const PackingState&, const CandidacyCollection&, int)>;

struct ClusterOutcome {
  ClusterExtension ext;
  RoundReport report;
  std::vector<VSet> used;  // G_A edges consumed
};

/// Embeds cluster q: labelling, auxiliary matching, uniform sigma^+, update of
/// every candidacy graph. s and c are updated in place. Throws RoundFailure
/// naming the violated contract after ladder.round_retries attempts.
ClusterOutcome pack_cluster(PackingState& s, CandidacyCollection& c, const KGraph& reduced, int q,
                            const ParameterLadder& ladder, std::mt19937_64& rng, const RoundCheck& check = {});

// ---- iterative driver ----------------------------------------------------------

/// W_initial sampled to a budget, on relabelled clusters.
struct TesterRegistry {
  std::vector<EdgeTesterSpec> edge;
  std::vector<std::string> kind;  // "vertex", "reduced", "leftover", "pair"
  std::vector<VertexTester> hit;

  std::size_t size() const { return edge.size(); }
};

TesterRegistry build_registry(const PackingState& s, const KGraph& reduced, const TesterSuite& suite,
                              const ParameterLadder& ladder, std::mt19937_64& rng);

/// Edge-tester window: value against the S(q) formula. Returns the excess
/// over the window (<= 0 inside).
double edge_tester_excess(const EdgeTesterSpec& t, double value, const PackingState& s, const ClusterSchedule& sch,
                          const ParameterLadder& ladder, int q, double n);

struct PartialPacking {
  BlowupInstance inst;  // relabelled to processing order
  ClusterSchedule schedule;
  ParameterLadder ladder;
  PackingState state;
  CandidacyCollection cand;
  TesterSuite suite;  // relabelled
  std::vector<VSet> used_a;
  std::vector<RoundReport> rounds;
  std::vector<Assertion> sq_assertions;
  std::vector<std::size_t> leftover_per_cluster;  // max over guests
  SplitReport split;
  int retries = 0;
  std::size_t registry_size = 0;
};

/// S(q) clauses (a)-(g) on the current state.
std::vector<Assertion> check_sq(const PackingState& s, const CandidacyCollection& c, const ClusterSchedule& sch,
                                const TesterRegistry& reg, const TesterSuite& suite, const ParameterLadder& ladder,
                                int q, std::mt19937_64& rng);

/// Splits the host, relabels to the colour order, seeds the registry and
/// packs every cluster in turn. alpha_schedule overrides ladder.alpha for the
/// colouring (0 keeps it). Throws RoundFailure naming q and the clause.
PartialPacking run_iterative(const BlowupInstance& b, const TesterSuite& suite, const ParameterLadder& ladder,
                             std::mt19937_64& rng, double alpha_schedule = 0);

// ---- completion ----------------------------------------------------------------

struct CompletionResult {
  std::vector<Phi> phi;  // total, per guest
  std::vector<VSet> used_b;  // G∘
  std::vector<Assertion> hypotheses;
  int retries = 0;
  /// Per guest: (y, w) pairs fixed by the good-phase matchings.
  std::vector<std::vector<std::pair<Vertex, Vertex>>> good_pairs;
  std::vector<std::size_t> bad_vertices, good_vertices;  // per guest
  std::vector<double> d_i;  // B-side density exponent d_B^{m_i(r)} per cluster
};

/// The random packing procedure on an r-partial packing. Throws RoundFailure
/// naming the guest and clause after ladder.completion_retries attempts.
CompletionResult complete_packing(const PartialPacking& p, std::mt19937_64& rng);

// ---- audits --------------------------------------------------------------------

struct PackingAudit {
  bool ok = true;
  std::vector<Violation> violations;
  std::size_t guest_edges = 0;
  std::size_t host_edges = 0;
  double coverage = 0;  // sum e(H) / e(G)

  nlohmann::json to_json() const;
};

/// Exact audit: totality, injectivity, cluster respect (when parts given),
/// edge images and global edge-disjointness.
PackingAudit verify_packing(const KGraph& host, const std::vector<KGraph>& guests, const std::vector<Phi>& phi,
                            const std::vector<int>* host_parts = nullptr,
                            const std::vector<std::vector<int>>* guest_parts = nullptr);
PackingAudit verify_packing(const BlowupInstance& b, const std::vector<Phi>& phi);

struct TesterOutcome {
  std::string kind;  // "set" or "vertex"
  double value = 0, expected = 0, slack = 0;
  bool ok = true;
};

struct TesterEvaluation {
  std::vector<TesterOutcome> results;
  std::size_t passed = 0;
  double pass_fraction = 1;
  double max_deviation = 0;  // largest |value-expected| / max(slack, 1e-12)

  nlohmann::json to_json() const;
};

/// Set testers against |W|prod|Y_j|/n^m ± alpha n, vertex testers against
/// (1±alpha) w(X_I)/n^|I| ± n^additive_exp.
TesterEvaluation evaluate_tester_suite(const TesterSuite& suite, const std::vector<Phi>& phi, double n, double alpha,
                                       double additive_exp);

}  // namespace hpack
