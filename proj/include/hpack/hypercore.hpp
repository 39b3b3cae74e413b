#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace hpack {

using Vertex = std::uint32_t;
/// A vertex set, always kept sorted ascending.
using VSet = std::vector<Vertex>;

struct VSetHash {
  std::size_t operator()(const VSet& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size();
    for (Vertex v : s) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

VSet sorted_set(VSet s);
bool is_subset(const VSet& small, const VSet& big);
VSet set_minus(const VSet& a, const VSet& b);
VSet set_union(const VSet& a, const VSet& b);
VSet set_intersect(const VSet& a, const VSet& b);

/// k-uniform hypergraph on vertices [0,n). Immutable once built; the
/// incidence lists are filled eagerly so concurrent readers never race.
class KGraph {
 public:
  KGraph() = default;
  KGraph(int k, std::size_t n);
  KGraph(int k, std::size_t n, const std::vector<VSet>& edges);

  int k() const { return k_; }
  std::size_t n() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<VSet>& edges() const { return edges_; }
  const VSet& edge(std::size_t i) const { return edges_[i]; }

  bool has_edge(const VSet& e) const;
  /// Index of e in edges(), or -1.
  long edge_index(const VSet& e) const;
  /// Edge indices through v.
  const std::vector<std::uint32_t>& incident(Vertex v) const { return inc_[v]; }
  std::size_t degree(Vertex v) const { return inc_[v].size(); }

  /// Builder path. Throws InputError for bad edges; returns false on duplicates.
  bool add_edge(VSet e);

  nlohmann::json to_json() const;
  static KGraph from_json(const nlohmann::json& j);

 private:
  void check_edge(const VSet& e) const;

  int k_ = 2;
  std::size_t n_ = 0;
  std::vector<VSet> edges_;
  std::unordered_map<VSet, std::uint32_t, VSetHash> index_;
  std::vector<std::vector<std::uint32_t>> inc_;
};

/// N_G(S) = { e \ S : S ⊆ e }.
std::vector<VSet> neighborhood(const KGraph& g, const VSet& s);
std::size_t degree_of(const KGraph& g, const VSet& s);

/// Intersection of N_G(S) over a family of (k-1)-sets, as a vertex set.
VSet joint_neighborhood(const KGraph& g, const std::vector<VSet>& fam);

/// Maximum degree over all m-sets.
std::size_t max_m_degree(const KGraph& g, int m);

struct TypicalityOptions {
  std::uint64_t max_exhaustive = 1000000;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
};

struct TypicalityReport {
  bool typical = true;
  bool sampled = false;
  std::uint64_t families_checked = 0;
  std::vector<VSet> worst_family;
  double worst_deviation = 0.0;  // |N(S)|/(d^{|S|} size) - 1, signed
  int worst_part = -1;           // set by the reduced-graph variant
};

/// (eps,t,d)-typicality of g over all families of (k-1)-sets of size <= t.
TypicalityReport is_typical(const KGraph& g, double eps, int t, double d,
                            const TypicalityOptions& opt = {});

/// Typicality of a multipartite host relative to a reduced k-graph R on part
/// indices. parts[v] is the part of vertex v.
TypicalityReport is_typical_wrt_reduced(const KGraph& g, const std::vector<int>& parts,
                                        const KGraph& reduced, double eps, int t, double d,
                                        const TypicalityOptions& opt = {});

/// Simple undirected graph as adjacency sets, used for shadows and powers.
struct Graph2 {
  std::size_t n = 0;
  std::vector<std::vector<Vertex>> adj;  // sorted
  bool adjacent(Vertex a, Vertex b) const;
  std::size_t max_degree() const;
};

/// 2-shadow: the clique on every edge.
Graph2 shadow(const KGraph& h);
/// m-th power: join vertices at distance <= m.
Graph2 graph_power(const Graph2& g, int m);
/// shadow(h) squared, the conflict structure used by refinement.
Graph2 shadow_square(const KGraph& h);

/// Greedy proper colouring; returns colour per vertex, colours from 0.
std::vector<int> greedy_colouring(const Graph2& g);

std::uint64_t binom(std::uint64_t n, std::uint64_t k);
/// Calls f on every sorted m-subset of `pool`.
void for_each_subset(const VSet& pool, int m, const std::function<void(const VSet&)>& f);

}  // namespace hpack
