#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "hpack/candidacy.hpp"
#include "hpack/patterns.hpp"

namespace hpack {

/// |W ∩ ⋂ phi(Y_j)| with W inside one host cluster and each Y_j inside the
/// same cluster of a distinct guest.
struct SetTester {
  int cluster = 0;
  VSet W;
  std::vector<std::pair<std::uint32_t, std::vector<Vertex>>> Y;  // (guest, vertices)
};

/// Weight on tuples over the clusters I, tracked at the centres.
struct VertexTester {
  std::vector<int> I;
  VSet centres;  // one per cluster of I, in index order
  std::map<GuestTuple, double> w;
  double cap = 1;

  double total() const;
};

/// Initial weight with its copied set J, the leftover flags J_X, J_V and the
/// pattern quad every supported tuple carries.
struct EdgeTesterSpec {
  std::vector<int> I, J, JX, JV;
  VSet centres;
  PatternQuad P;
  double cap = 1;
  std::map<GuestTuple, double> w0;

  double total() const;
};

/// Throws InputError unless centres, index sets and caps are well formed and
/// every supported tuple lies in E_H(P, I, J).
void validate_edge_tester(const EdgeTesterSpec& t, const PackingState& s);

/// A candidacy edge of the cluster being processed.
struct CandRef {
  std::uint32_t guest = 0;
  Vertex x = 0, v = 0;
  auto operator<=>(const CandRef&) const = default;
};

/// Weight on l-sets of candidacy edges that form matchings.
struct LocalTester {
  int ell = 1;
  double cap = 1;
  std::map<std::vector<CandRef>, double> w;

  /// Every supported set is a matching (no shared x or v in one guest).
  bool clean() const;
  /// max over l'-subsets T of the weight of sets containing T.
  double norm(int lp) const;
  /// ||w||_{l'} <= n^{l-l'+eps^2} for all l' in [1, l].
  bool norms_ok(double n, double eps) const;
};

std::size_t eval_set_tester(const SetTester& t, const std::vector<Phi>& phi);

/// Sum of w(x) over tuples mapped onto the centres.
double eval_vertex_tester(const VertexTester& t, const std::vector<Phi>& phi);

/// Simple edge tester total: J must be empty and the B half of the quad zero.
/// An empty unembedded part counts as the single empty candidacy edge.
double eval_simple_edge_tester(const EdgeTesterSpec& t, const PackingState& s, const CandidacyCollection& c);

/// General edge tester total: the unique suitable tuple of each mixed edge.
double eval_general_edge_tester(const EdgeTesterSpec& t, const PackingState& s, const CandidacyCollection& c);

/// omega on an edge set M(sigma) given as candidacy refs.
double eval_local_tester(const LocalTester& t, const std::vector<CandRef>& matched);

struct TesterSuite {
  std::vector<SetTester> sets;
  std::vector<VertexTester> vertices;

  nlohmann::json to_json() const;
  static TesterSuite from_json(const nlohmann::json& j);
};

}  // namespace hpack
