#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hpack/hypercore.hpp"

namespace hpack {

/// Uniform hypergraph given by an edge list over vertices [0, num_vertices).
struct MatchHypergraph {
  std::size_t num_vertices = 0;
  int uniformity = 0;
  std::vector<VSet> edges;

  /// Throws InputError for out-of-range vertices or mixed edge sizes.
  void validate() const;
};

struct DegreeStats {
  std::size_t delta = 0;         // max vertex degree
  std::size_t delta2 = 0;        // max pair codegree if >= 2, else 0
  std::size_t max_codegree = 0;  // raw max pair codegree
  std::size_t edges = 0;
};

DegreeStats degree_stats(const MatchHypergraph& h);

using EdgeTuple = std::vector<std::uint32_t>;  // sorted edge ids

/// l-tuple weight on edge ids, stored sparsely.
class TupleWeight {
 public:
  explicit TupleWeight(int arity) : arity_(arity) {}

  int arity() const { return arity_; }
  /// Adds w to the tuple (sorted internally). Throws on arity mismatch,
  /// repeated ids or negative weight.
  void add(EdgeTuple t, double w);
  const std::map<EdgeTuple, double>& support() const { return w_; }

  /// omega(E(H)).
  double total() const;
  /// ||omega||_m: max over m-sets T of the weight of tuples containing T.
  double norm(int m) const;
  /// True iff every supported tuple is a matching in h.
  bool clean(const MatchHypergraph& h) const;
  /// omega over all l-subsets of the given edge set.
  double on_edges(const std::vector<std::uint32_t>& edge_ids) const;

 private:
  int arity_;
  std::map<EdgeTuple, double> w_;
};

struct MatcherOptions {
  double tol = 0.25;
  /// Accepted absolute error on top of tol*target.
  double additive_slack = 0.0;
  int restarts = 20;
  /// Requires delta2 <= delta^(1-codegree_exponent); 0 disables the check.
  double codegree_exponent = 0.0;
  /// Require every weight to be clean.
  bool require_clean = true;
  /// When unset, exhaustion returns the best attempt with ok=false.
  bool throw_on_failure = true;
};

struct MatcherResult {
  bool ok = false;
  std::vector<std::uint32_t> matching;  // edge ids, sorted
  std::vector<double> ratios;           // omega(M) * delta^l / omega(E)
  int restarts = 0;
  std::uint64_t seed = 0;               // seed of the accepted attempt
  long worst_weight = -1;               // index of the worst weight
  double worst_error = 0;               // |omega(M)-target| - tol*target - slack
};

/// Random greedy matching with verify-and-restart against the weight
/// contract. Throws RoundFailure when the budget is exhausted.
MatcherResult pseudorandom_matching(const MatchHypergraph& h, const std::vector<TupleWeight>& weights,
                                    const MatcherOptions& opt, std::mt19937_64& rng);

/// One random greedy pass; returns sorted edge ids of a maximal matching.
std::vector<std::uint32_t> random_greedy_matching(const MatchHypergraph& h, std::mt19937_64& rng);

/// Every maximal matching, each as sorted edge ids. Needs at most 22 edges.
std::vector<std::vector<std::uint32_t>> brute_force_matchings(const MatchHypergraph& h);

bool is_matching(const MatchHypergraph& h, const std::vector<std::uint32_t>& ids);
bool is_maximal_matching(const MatchHypergraph& h, const std::vector<std::uint32_t>& ids);

}  // namespace hpack
