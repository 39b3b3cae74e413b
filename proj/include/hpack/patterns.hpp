#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "hpack/hypercore.hpp"

namespace hpack {

/// A: the partial-packing side of the host split; B: the reserved side.
enum class Side { A, B };

/// Entry l counts guest edges trailing off a tuple at cluster l.
using PatternVector = std::vector<int>;

struct PatternQuad {
  PatternVector pA, ppA, pB, ppB;
  auto operator<=>(const PatternQuad&) const = default;
};

/// A guest tuple: one vertex per cluster of an index set, in index order.
struct GuestTuple {
  std::uint32_t guest = 0;
  std::vector<Vertex> xs;
  auto operator<=>(const GuestTuple&) const = default;
};

int pattern_norm(const PatternVector& p);

/// Checks xs has one vertex per cluster of I (I sorted, distinct). Throws InputError.
void check_tuple(const std::vector<int>& parts, const std::vector<int>& I, const std::vector<Vertex>& xs);

/// First pattern of x = xs over clusters I, copied clusters J (subset of I).
/// r is the number of clusters.
PatternVector first_pattern(const KGraph& h, const std::vector<int>& parts, int r,
                            const std::vector<int>& I, const std::vector<Vertex>& xs,
                            const std::vector<int>& J, Side z);

PatternVector second_pattern(const KGraph& h, const std::vector<int>& parts, int r,
                             const std::vector<int>& I, const std::vector<Vertex>& xs,
                             const std::vector<int>& J, Side z);

PatternQuad pattern_quad(const KGraph& h, const std::vector<int>& parts, int r,
                         const std::vector<int>& I, const std::vector<Vertex>& xs,
                         const std::vector<int>& J);

/// True iff x' (x with the J-vertices replaced by copies) is an edge of H_Z.
bool tuple_is_edge(const KGraph& h, const std::vector<int>& parts, const std::vector<int>& I,
                   const std::vector<Vertex>& xs, const std::vector<int>& J, Side z);

/// Tuples x = e ∩ X_I over all guest edges e meeting every cluster of I,
/// without repeats.
std::vector<GuestTuple> edge_tuples(const std::vector<KGraph>& guests,
                                    const std::vector<std::vector<int>>& parts,
                                    const std::vector<int>& I);

/// Every edge tuple over I grouped by its pattern quad for copied set J.
std::map<PatternQuad, std::vector<GuestTuple>> classify(const std::vector<KGraph>& guests,
                                                        const std::vector<std::vector<int>>& parts,
                                                        int r, const std::vector<int>& I,
                                                        const std::vector<int>& J);

/// E_H(P, I, J).
std::vector<GuestTuple> pattern_class(const std::vector<KGraph>& guests,
                                      const std::vector<std::vector<int>>& parts, int r,
                                      const PatternQuad& P, const std::vector<int>& I,
                                      const std::vector<int>& J);

/// The J = ∅ quad (p, pp, 0, 0).
PatternQuad simple_quad(const PatternVector& p, const PatternVector& pp);

}  // namespace hpack
