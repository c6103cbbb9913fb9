#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "recon/classify.hpp"
#include "recon/rng.hpp"
#include "recon/tree.hpp"

namespace recon {

// Colours are 0-indexed throughout: the palette is {0, ..., k-1}.

// Proper colouring of a whole tree, one colour per node id.
struct Colouring {
  int k = 0;
  std::vector<std::uint8_t> colour;
};

// Colours of the depth-h nodes only, indexed in node-id order: entry i
// belongs to node boundary_first() + i.
struct Boundary {
  int k = 0;
  std::vector<std::uint8_t> colour;
};

// Probability vector over the k colours; entries sum to one.
struct Marginal {
  std::vector<double> probs;
  double max() const;
};

// Per-node sets of colours still available given the boundary, as bitmasks
// (so k <= 64).  A node whose set is a singleton is forced.
struct AllowedSets {
  int k = 0;
  std::vector<std::uint64_t> mask;
  bool root_freezing() const;
};

// True iff colours are in range and no node shares its parent's colour.
bool is_proper(const Tree& tree, const Colouring& col);

// Top-down sampling: the root gets root_colour and every other node draws
// uniformly among the k-1 colours different from its parent's.
Colouring broadcast(const Tree& tree, int k, int root_colour, Rng& rng);

// One broadcast driven from two root colours c != q simultaneously.  Where
// the parents agree the children are copied; where they disagree with
// colours (a, b), the first child colour X is uniform off a and the second
// is X unless X = b, in which case it is a.  Each output marginally is a
// correct broadcast, so a child of a disagreeing edge disagrees with
// probability 1/(k-1).
std::pair<Colouring, Colouring> broadcast_coupled(const Tree& tree, int k,
                                                  int c, int q, Rng& rng);

// Restriction of a colouring to the depth-h nodes.
Boundary boundary_of(const Tree& tree, const Colouring& col);

// Number of depth-h nodes on which the two colourings differ.
std::uint64_t boundary_hamming(const Tree& tree, const Colouring& a,
                               const Colouring& b);

// Exact colour distribution of node v under the uniform proper colouring of
// v's subtree conditioned on the boundary beneath it.  Computed by a
// depth-first upward pass in log space (O(height * k) scratch memory), with
// per-node renormalization so deep trees do not underflow.  Childless nodes
// above the boundary are unconstrained.  Throws InconsistentBoundary when
// no proper colouring is compatible.
Marginal subtree_marginal(const Tree& tree, const Boundary& boundary,
                          std::uint32_t v);

Marginal root_marginal(const Tree& tree, const Boundary& boundary);

// Upward propagation of forced colours: a leaf allows only its boundary
// colour, and an internal node allows everything except the forced colours
// of its children.  Throws InconsistentBoundary if some set empties.
AllowedSets allowed_sets(const Tree& tree, const Boundary& boundary);

// Largest root marginal entry; 1.0 exactly when the boundary freezes the
// root.
double bias_score(const Tree& tree, const Boundary& boundary);

// Labels every node 1 (non-biased), 0 (biased) or -1 (not applicable: the
// node is non-mixing or sits on the boundary).  A mixing node one level
// above the boundary is non-biased iff its leaf children miss at least
// delta_plus^gamma of the k colours; higher up, iff at most
// floor(delta_plus^delta) of its mixing children are biased.  Requires
// gamma <= delta and flags.mixing from classify_mixing.
std::vector<std::int8_t> classify_nonbiasing(const Tree& tree,
                                             const Boundary& boundary,
                                             double delta_plus, double delta,
                                             double gamma,
                                             const NodeFlags& flags);

// CSV exchange format: a `leaf_id,colour` header followed by one row per
// depth-h node, using global node ids.
void write_boundary(std::ostream& out, const Tree& tree,
                    const Boundary& boundary);

// Accepts rows in any order (header optional) but requires exactly the
// depth-h ids, each once, with colours in [0, k).
Boundary read_boundary(std::istream& in, const Tree& tree, int k);

}  // namespace recon
