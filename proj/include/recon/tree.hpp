#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "recon/distribution.hpp"
#include "recon/errors.hpp"
#include "recon/rng.hpp"

namespace recon {

// Height-truncated tree in a flat arena with breadth-first node numbering.
// Children of a node occupy a contiguous id range, and nodes of equal depth
// are contiguous, which keeps the classification passes cache-friendly at
// 10^7+ nodes.  Immutable after construction.
struct Tree {
  static constexpr std::uint32_t kNoParent = 0xFFFFFFFFu;

  std::vector<std::uint32_t> parent;       // kNoParent for the root
  std::vector<std::uint32_t> child_begin;  // first child id (0 if childless)
  std::vector<std::uint32_t> child_count;
  std::vector<std::uint32_t> level_begin;  // size height+2; depth-t nodes are
                                           // ids [level_begin[t], level_begin[t+1])
  int height = 0;

  std::uint32_t root() const { return 0; }
  std::size_t node_count() const { return parent.size(); }

  std::uint32_t level_size(int t) const {
    return level_begin[static_cast<std::size_t>(t) + 1] -
           level_begin[static_cast<std::size_t>(t)];
  }
  // Number of depth-h vertices; zero means the tree went extinct early.
  std::uint32_t boundary_size() const { return level_size(height); }
  std::uint32_t boundary_first() const {
    return level_begin[static_cast<std::size_t>(height)];
  }

  int depth_of(std::uint32_t v) const;

  // One line per node, breadth-first: `id parent depth child_count` with -1
  // for the root's parent.
  void dump(std::ostream& out) const;

  // Consistency check used by tests; throws ValidationError on violation.
  void validate() const;
};

// Node cap for sampling; RECON_NODE_CAP overrides the 1e8 default.
std::uint64_t default_node_cap();

// Breadth-first sampling: every node at depth < h independently draws its
// offspring count from dist.  Deterministic given the stream state.
Tree sample_tree(const OffspringDistribution& dist, int h, Rng& rng,
                 std::uint64_t node_cap = default_node_cap());

// Builds the arena from a parent array with parents[i] < i (parents[0]
// ignored).  Nodes are renumbered breadth-first, preserving the relative
// order of siblings.  The tree's height is the maximum depth unless a
// non-negative target height is given.
Tree tree_from_parents(const std::vector<std::uint32_t>& parents,
                       int target_height = -1);

// Common shapes for tests and the oracle.
Tree make_star(std::uint32_t leaves);
Tree make_path(int h);
Tree make_complete(std::uint32_t arity, int h);

}  // namespace recon
