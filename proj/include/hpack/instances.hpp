#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpack/hypercore.hpp"

namespace hpack {

/// Guests, host and reduced graph with their cluster partitions. Clusters
/// are numbered 0..r-1.
struct BlowupInstance {
  std::size_t n = 0;
  int k = 3;
  int r = 0;
  std::vector<KGraph> guests;
  KGraph host;
  KGraph reduced;
  std::vector<std::vector<int>> guest_parts;  // [guest][vertex] -> cluster
  std::vector<int> host_parts;                // [host vertex] -> cluster

  std::vector<Vertex> host_cluster(int i) const;
  std::vector<Vertex> guest_cluster(std::size_t h, int i) const;

  nlohmann::json to_json(const nlohmann::json& params = nlohmann::json::object()) const;
  static BlowupInstance from_json(const nlohmann::json& j);
};

struct Violation {
  std::string kind;
  long guest = -1;  // -1 for the host or reduced graph
  long part = -1;
  VSet edge;
  std::string detail;
};

/// The four blow-up bullet conditions, every violation listed.
std::vector<Violation> validate_blowup(const BlowupInstance& b);

/// A weight on tuples of guest vertices. With clusters set, a tuple has one
/// vertex per listed cluster (in that order); with clusters empty it is an
/// ordered tuple of distinct vertices of one guest.
struct GuestWeight {
  struct Entry {
    std::uint32_t guest;
    std::vector<Vertex> tuple;
    double w;
  };
  std::vector<int> clusters;
  int arity = 1;
  std::vector<Entry> entries;

  double total() const;
};

struct WeightDeviation {
  int weight = 0;   // index into the weight list
  int guest = -1;   // set for per-guest single-vertex checks
  int part = -1;
  std::vector<int> classes;
  double value = 0, expected = 0, bound = 0;
  bool tracked = true;  // conclusion (iv) only tracks totals >= n^{1+eps}
  bool within = true;
};

struct RefineResult {
  int classes = 0;  // beta^{-1}
  /// cls[h][x] = class of x inside its part, in [0, classes).
  std::vector<std::vector<int>> cls;
  std::vector<WeightDeviation> deviations;
  int attempts = 0;

  /// Refined cluster index of x: part * classes + class.
  int refined(const std::vector<std::vector<int>>& parts, std::size_t h, Vertex x) const {
    return parts[h][x] * classes + cls[h][x];
  }
};

struct RefineOptions {
  double eps = 0.05;        // error term of the tuple conclusion
  int retries_per_class = 10;
};

/// Splits every X_i^H into beta^{-1} classes independent in H_*^2 with sizes
/// differing by at most one; reports weight deviations. Throws InputError when
/// beta^{-1} exceeds a part size and RoundFailure when the swap repair stalls.
RefineResult refine_partitions(const std::vector<KGraph>& guests,
                               const std::vector<std::vector<int>>& parts, int r, double beta,
                               const std::vector<GuestWeight>& weights, std::mt19937_64& rng,
                               const RefineOptions& opt = {});

/// r = 1 variant; weights are on ordered tuples.
RefineResult refine_partitions_single(const std::vector<KGraph>& guests, double beta,
                                      const std::vector<GuestWeight>& weights,
                                      std::mt19937_64& rng, const RefineOptions& opt = {});

struct SplitOptions {
  double eps0 = 0.2;
  int t = 2;
  std::uint64_t samples = 2000;
  int retries = 10;
  /// When unset, a failed check is reported but does not throw.
  bool enforce = true;
};

struct SplitReport {
  bool ok = true;
  int attempts = 0;
  std::uint64_t checked = 0;
  double worst_deviation = 0;  // signed relative deviation
};

struct HostSplit {
  KGraph a, b;
  SplitReport report;
};

/// Each edge to G_B with probability gamma, else G_A. The joint neighbourhood
/// condition |V_i ∩ N_A(S_A) ∩ N_B(S_B)| = (1±eps0) d_A^|S_A| d_B^|S_B| |V_i|
/// is checked on sampled families. parts/reduced may be empty for an
/// unpartitioned host.
HostSplit split_host(const KGraph& g, double gamma, double d, std::mt19937_64& rng,
                     const SplitOptions& opt = {}, const std::vector<int>& parts = {},
                     const KGraph* reduced = nullptr);

struct ClusterSchedule {
  int r = 0;
  int T = 0;                 // colour budget k^3 alpha^{-3}
  std::vector<int> colour;   // colour of each original cluster, from 1
  std::vector<int> order;    // order[p] = original cluster processed at step p+1
  std::vector<int> position; // inverse of order
  KGraph relabelled;         // R with clusters renamed to positions

  /// Counters over relabelled clusters i in [0,r), q in [0,r] (q clusters done).
  int c_i(int i, int q) const;
  int c_I(const std::vector<int>& I, int q) const;
  int m_i(int i, int q) const;
  /// b_i when cluster q is processed next with clusters [0,q) done.
  int b_i(int i, int q) const;

  std::vector<std::vector<int>> cq;  // cq[q][i]
  std::vector<std::vector<int>> mq;  // mq[q][i]
};

/// Greedy proper colouring of R_*^3 and the relabelled processing order.
/// Throws InputError if Delta(R) > 1/alpha.
ClusterSchedule build_schedule(const KGraph& reduced, double alpha);

/// Relabels clusters of a blow-up instance to schedule positions.
BlowupInstance relabel(const BlowupInstance& b, const ClusterSchedule& s);

struct SliceResult {
  std::vector<std::vector<std::size_t>> groups;  // guest indices per slice
  std::vector<KGraph> hosts;                     // edge-disjoint host slices
  std::vector<TypicalityReport> typicality;
  bool edges_ok = true;  // e(H_p) <= (1+eps) e(H)/P + n^{1+eps}
  int attempts = 0;
};

struct SliceOptions {
  double eps = 0.15;
  int t = 2;
  double d = 1.0;           // host density; slices are checked at d/P
  bool check_typicality = false;
  int retries = 5;
};

/// Uniform random assignment of guests and host edges to P slices.
SliceResult group_and_slice(const std::vector<KGraph>& guests, const KGraph& host, int P,
                            std::mt19937_64& rng, const SliceOptions& opt = {});

}  // namespace hpack
