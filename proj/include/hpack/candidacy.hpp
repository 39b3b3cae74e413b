#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hpack/hypercore.hpp"
#include "hpack/instances.hpp"
#include "hpack/patterns.hpp"

namespace hpack {

/// Per-guest map into the host, -1 where undefined.
using Phi = std::vector<long>;

/// A guest together with the synthetic edges that shape its candidacy. Real
/// edges come first in h; every later edge is synthetic.
struct ConstraintGraph {
  KGraph h;
  std::size_t real_edges = 0;
  /// For synthetic edge real_edges+j: the vertices whose side-B candidacy
  /// sees it (H_+^i keeps one back-edge per reduced edge).
  std::vector<VSet> b_owners;

  ConstraintGraph() = default;
  explicit ConstraintGraph(const KGraph& g) : h(g), real_edges(g.num_edges()) {}

  bool synthetic(std::uint32_t e) const { return e >= real_edges; }
  /// Whether edge e constrains the side-z candidacy of its vertex x.
  bool sees(Side z, std::uint32_t e, Vertex x) const;
  /// Adds a synthetic edge; returns its id.
  std::uint32_t add_synthetic(const VSet& e, const VSet& b_owner);
};

/// Guests, the split host and the current partial packing. Clusters keep
/// their absolute indices; `embedded` marks the clusters already processed.
struct PackingState {
  int k = 3;
  int r = 0;
  std::vector<KGraph> guests;
  std::vector<std::vector<int>> guest_parts;
  std::vector<int> host_parts;
  std::vector<VSet> host_clusters;  // V_i
  KGraph ga, gb;
  std::vector<bool> embedded;
  std::vector<Phi> phi;       // the packing itself
  std::vector<Phi> phi_plus;  // cluster-injective extension used by candidacy
  std::vector<ConstraintGraph> cons;

  std::vector<Vertex> guest_cluster(std::size_t h, int i) const;
  /// Host graph of a side.
  const KGraph& host(Side z) const { return z == Side::A ? ga : gb; }
};

/// Empty packing over a blow-up instance with its host already split.
PackingState make_state(const BlowupInstance& b, KGraph ga, KGraph gb);

/// The membership condition for {x_i, v_i}_{i in I}, evaluated edge by edge
/// over the constraint graph against phi_plus.
bool candidacy_member(const PackingState& s, Side z, std::size_t h, const std::vector<int>& I,
                      const std::vector<Vertex>& xs, const VSet& vs);

struct Certificate {
  Vertex x = 0;
  std::vector<VSet> family;  // images of the embedded remainders of edges at x
  VSet nbr;                  // V_i ∩ N_G(family)
};

/// A single-cluster candidacy graph stored through certificates.
struct SingleCandidacy {
  std::size_t guest = 0;
  int cluster = 0;
  Side side = Side::A;
  std::vector<Certificate> certs;  // ordered as the guest's cluster vertices
  std::unordered_map<Vertex, std::size_t> at;

  const Certificate& of(Vertex x) const { return certs[at.at(x)]; }
  bool has(Vertex x, Vertex v) const;
  std::size_t num_edges() const;
  /// Per-vertex certificate lists for fixtures and debugging.
  nlohmann::json dump() const;
};

SingleCandidacy build_single(const PackingState& s, Side z, std::size_t h, int i);

/// Extends certificates with the sets of edges completed between phi_old and
/// s.phi_plus and narrows the neighbourhoods. Returns, per certificate, the
/// number of sets added.
std::vector<std::size_t> update_single(SingleCandidacy& c, const PackingState& s, const Phi& phi_old);

/// True iff every stored neighbourhood equals the one rebuilt from its family.
bool certificates_faithful(const SingleCandidacy& c, const PackingState& s);

/// Singles for every guest and cluster; side A only for unembedded clusters.
struct CandidacyCollection {
  std::vector<std::vector<std::optional<SingleCandidacy>>> a, b;  // [guest][cluster]

  static CandidacyCollection build(const PackingState& s);
  /// Multi-cluster membership from the singles plus the edges meeting the
  /// tuple at least twice.
  bool member(const PackingState& s, Side z, std::size_t h, const std::vector<int>& I,
              const std::vector<Vertex>& xs, const VSet& vs) const;
};

struct CandidacyEdge {
  std::vector<Vertex> xs;
  VSet vs;  // one host vertex per cluster of I, in index order
  auto operator<=>(const CandidacyEdge&) const = default;
};

/// Every edge of A_I^H (or B_i^H) by enumeration. Throws InputError when the
/// product of the part sizes exceeds limit.
std::vector<CandidacyEdge> build_candidacy(const PackingState& s, const CandidacyCollection& c, Side z,
                                           std::size_t h, const std::vector<int>& I,
                                           std::uint64_t limit = 20000000);

struct WellIntersecting {
  bool ok = true;
  std::size_t max_family = 0;
  std::size_t max_partners = 0;
  double partner_bound = 0;
  long worst_vertex = -1;
  std::vector<std::size_t> partners;  // per certificate
};

/// |S_x| <= q and at most n^{1/4+eps} partners sharing a certificate set.
WellIntersecting check_well_intersecting(const SingleCandidacy& c, double eps, std::size_t q, double n);

struct LabelledEdge {
  std::size_t guest = 0;
  Vertex x = 0, v = 0;
  std::vector<VSet> labels;  // G_A edges used if x goes to v
};

struct EdgeLabelling {
  int cluster = 0;
  std::vector<LabelledEdge> edges;
  std::size_t delta = 0;     // max edges per label
  std::size_t delta_c = 0;   // max edges per label pair
  std::size_t width = 0;     // max labels on an edge
};

/// psi on the cluster-i candidacy graphs. Throws PreconditionError when a
/// label is not a G_A edge.
EdgeLabelling build_labelling(const PackingState& s, const CandidacyCollection& c, int i);

/// The guest edge images of a set of candidacy edges are distinct G_A edges
/// and no label repeats.
bool conflict_free(const EdgeLabelling& l, const std::vector<std::size_t>& chosen);

/// X_{g,p,pp,phi}: tuples over the unembedded clusters of g's reduced edge
/// still mappable onto g with patterns (p, pp). g lists one host vertex per
/// cluster of the reduced edge.
std::vector<GuestTuple> suitable_set_X(const PackingState& s, const CandidacyCollection& c,
                                       const VSet& g, const PatternVector& p, const PatternVector& pp);

/// E_{g,phi}: guest edges induced on phi^{-1}(g) plus the candidacy
/// neighbourhoods of g's unembedded vertices.
std::vector<std::pair<std::size_t, VSet>> suitable_edges(const PackingState& s, const CandidacyCollection& c,
                                                         const VSet& g);

/// E_{g,h,phi}: pairs from E_{g,phi} x E_{h,phi} meeting in the cluster of
/// the shared vertex.
std::vector<std::pair<std::pair<std::size_t, VSet>, std::pair<std::size_t, VSet>>> suitable_pairs_E(
    const PackingState& s, const CandidacyCollection& c, const VSet& g, const VSet& hh);

}  // namespace hpack
