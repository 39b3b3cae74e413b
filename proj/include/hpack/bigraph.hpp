#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>
#include <json.hpp>

namespace hpack {

/// Bipartite graph with sides A = [0,a) and B = [0,b).
class Bigraph {
 public:
  using Edge = std::pair<std::uint32_t, std::uint32_t>;

  Bigraph() = default;
  Bigraph(std::size_t a, std::size_t b);
  Bigraph(std::size_t a, std::size_t b, const std::vector<Edge>& edges);

  std::size_t a() const { return a_; }
  std::size_t b() const { return b_; }
  std::size_t num_edges() const { return m_; }

  /// Returns false if already present. Throws InputError when out of range.
  bool add_edge(std::uint32_t x, std::uint32_t y);
  bool remove_edge(std::uint32_t x, std::uint32_t y);
  bool has_edge(std::uint32_t x, std::uint32_t y) const { return row_a_[x].test(y); }

  const std::vector<std::uint32_t>& adj_a(std::uint32_t x) const { return adj_a_[x]; }
  const std::vector<std::uint32_t>& adj_b(std::uint32_t y) const { return adj_b_[y]; }
  const boost::dynamic_bitset<>& row_a(std::uint32_t x) const { return row_a_[x]; }
  const boost::dynamic_bitset<>& row_b(std::uint32_t y) const { return row_b_[y]; }
  std::vector<Edge> edges() const;

  nlohmann::json to_json() const;
  static Bigraph from_json(const nlohmann::json& j);

 private:
  std::size_t a_ = 0, b_ = 0, m_ = 0;
  std::vector<std::vector<std::uint32_t>> adj_a_, adj_b_;
  std::vector<boost::dynamic_bitset<>> row_a_, row_b_;
};

/// e(W1,W2)/(|W1||W2|).
double density(const Bigraph& g, const std::vector<std::uint32_t>& w1,
               const std::vector<std::uint32_t>& w2);
double density(const Bigraph& g);

/// Number of unordered 4-cycles: sum over A-pairs of C(codeg,2).
std::uint64_t c4_count(const Bigraph& g);

/// Density and 4-cycle certificate of (eps^{1/13},d)-regularity. n is the
/// declared side size; sides must be (1±eps)n.
bool certify_regular_c4(const Bigraph& g, double eps, double d, double n);
bool certify_regular_c4(const Bigraph& g, double eps, double d);

struct SuperRegularWitness {
  bool ok = true;
  bool side_a = true;       // side of the offending vertex
  long vertex = -1;         // offending vertex, or -1
  double degree_ratio = 1;  // deg/(d*|opposite|) of the offender
  bool c4_failed = false;
  double c4_ratio = 0;      // C4 / (d^4|A|^2|B|^2/4)
  double density = 0;
};

/// Degree condition plus the 4-cycle regularity certificate.
SuperRegularWitness is_super_regular(const Bigraph& g, double eps, double d);

/// Spanning m-regular subgraph via integral max-flow, or nullopt.
std::optional<Bigraph> m_factor(const Bigraph& g, std::size_t m);

struct MatchingResult {
  bool perfect = false;
  std::vector<long> mate_a;                // mate of each A-vertex, -1 if free
  std::vector<std::uint32_t> hall_violator;  // A-set S with |N(S)| < |S| on failure
};

/// Maximum matching by augmenting paths with rng-shuffled scan order.
MatchingResult perfect_matching(const Bigraph& g, std::mt19937_64& rng);

/// Splits an m-regular bigraph into m perfect matchings (mate_a vectors).
std::vector<std::vector<long>> decompose_regular(Bigraph g, std::mt19937_64& rng);

/// e(X,Y) <= eps^{1/3} d n max(|X|,|Y|). With enforce set, throws
/// PreconditionError unless n^{3/4+3eps} <= |X|,|Y| <= eps n.
bool sparse_edge_bound_check(const Bigraph& g, const std::vector<std::uint32_t>& x,
                             const std::vector<std::uint32_t>& y, double eps, double d,
                             double n, bool enforce = true);

}  // namespace hpack
