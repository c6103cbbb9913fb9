#pragma once

#include <cstdint>
#include <vector>

#include "recon/tree.hpp"

namespace recon {

// Per-node labels produced by the classification passes.  Each pass fills
// only its own vector; entries are 0/1 indexed by node id.
struct NodeFlags {
  std::vector<std::uint8_t> mixing;
  std::vector<std::uint8_t> freezable;
};

// Upward pass.  Depth-h nodes are mixing.  An internal node is mixing iff
// its child count is at most delta_plus and at most floor(delta_plus^delta)
// of its children are non-mixing.  Deciding a node only inspects its own
// subtree, so labels agree with classifying any extracted subtree.
void classify_mixing(const Tree& tree, double delta_plus, double delta,
                     NodeFlags& flags);

// Upward pass over depths h-1..0; requires height >= 1.  A depth-(h-1) node
// is freezable iff its child count is at least delta_minus.  A node at a
// smaller depth additionally needs at least ceil(delta_minus -
// delta_minus^delta) freezable children.  Depth-h nodes get label 0.
void classify_freezable(const Tree& tree, double delta_minus, double delta,
                        NodeFlags& flags);

// True iff every root-to-depth-h path contains at least ceil((1-zeta)*h)
// mixing vertices, counting all h+1 vertices on the path.  Trees with no
// depth-h vertex qualify vacuously.  Needs flags.mixing from
// classify_mixing.
bool in_A(const Tree& tree, const NodeFlags& flags, double zeta);

}  // namespace recon
