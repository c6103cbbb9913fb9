#include "recon/tree.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <string>

namespace recon {

int Tree::depth_of(std::uint32_t v) const {
  auto it = std::upper_bound(level_begin.begin(), level_begin.end(), v);
  return static_cast<int>(it - level_begin.begin()) - 1;
}

void Tree::dump(std::ostream& out) const {
  for (std::uint32_t v = 0; v < node_count(); ++v) {
    const std::int64_t p =
        parent[v] == kNoParent ? -1 : static_cast<std::int64_t>(parent[v]);
    out << v << ' ' << p << ' ' << depth_of(v) << ' ' << child_count[v]
        << '\n';
  }
}

void Tree::validate() const {
  const std::size_t n = node_count();
  if (n == 0 || child_begin.size() != n || child_count.size() != n)
    throw ValidationError("tree: arena vectors disagree in size");
  if (height < 0 ||
      level_begin.size() != static_cast<std::size_t>(height) + 2)
    throw ValidationError("tree: level index has wrong size");
  if (level_begin.front() != 0 || level_begin.back() != n)
    throw ValidationError("tree: level index does not span the arena");
  if (!std::is_sorted(level_begin.begin(), level_begin.end()))
    throw ValidationError("tree: level index not monotone");
  if (parent[0] != kNoParent)
    throw ValidationError("tree: root has a parent");
  for (std::uint32_t v = 0; v < n; ++v) {
    const int d = depth_of(v);
    if (v != 0) {
      const std::uint32_t p = parent[v];
      if (p >= v) throw ValidationError("tree: parent id not below child id");
      if (depth_of(p) != d - 1)
        throw ValidationError("tree: parent not one level up");
      if (v < child_begin[p] || v >= child_begin[p] + child_count[p])
        throw ValidationError("tree: node outside its parent's child range");
    }
    if (d == height && child_count[v] != 0)
      throw ValidationError("tree: boundary node with children");
    for (std::uint32_t c = 0; c < child_count[v]; ++c) {
      const std::uint32_t u = child_begin[v] + c;
      if (u >= n || parent[u] != v)
        throw ValidationError("tree: child range inconsistent");
    }
  }
}

std::uint64_t default_node_cap() {
  static const std::uint64_t cap = [] {
    if (const char* env = std::getenv("RECON_NODE_CAP")) {
      const unsigned long long v = std::strtoull(env, nullptr, 10);
      if (v > 0) return static_cast<std::uint64_t>(v);
    }
    return std::uint64_t{100000000};
  }();
  return cap;
}

Tree sample_tree(const OffspringDistribution& dist, int h, Rng& rng,
                 std::uint64_t node_cap) {
  if (h < 0) throw ParameterViolation("sample_tree: height must be >= 0");
  Tree t;
  t.height = h;
  t.parent.push_back(Tree::kNoParent);
  t.level_begin.assign(2, 0);
  t.level_begin[1] = 1;
  for (int depth = 0; depth < h; ++depth) {
    const std::uint32_t begin = t.level_begin[depth];
    const std::uint32_t end = t.level_begin[depth + 1];
    if (begin == end) break;  // extinct; remaining levels stay empty
    for (std::uint32_t v = begin; v < end; ++v) {
      const std::uint64_t kids = dist.sample(rng);
      if (t.parent.size() + kids > node_cap)
        throw ResourceLimit("sample_tree: node cap " +
                            std::to_string(node_cap) + " exceeded");
      t.child_begin.push_back(static_cast<std::uint32_t>(t.parent.size()));
      t.child_count.push_back(static_cast<std::uint32_t>(kids));
      t.parent.insert(t.parent.end(), kids, v);
    }
    t.level_begin.push_back(static_cast<std::uint32_t>(t.parent.size()));
  }
  // Depth-h nodes (and levels lost to extinction) are childless.
  t.child_begin.resize(t.parent.size(), 0);
  t.child_count.resize(t.parent.size(), 0);
  t.level_begin.resize(static_cast<std::size_t>(h) + 2,
                       static_cast<std::uint32_t>(t.parent.size()));
  return t;
}

Tree tree_from_parents(const std::vector<std::uint32_t>& parents,
                       int target_height) {
  const std::size_t n = parents.size();
  if (n == 0)
    throw ValidationError("tree_from_parents: need at least the root");

  std::vector<int> depth(n, 0);
  std::vector<std::vector<std::uint32_t>> kids(n);
  int max_depth = 0;
  for (std::uint32_t v = 1; v < n; ++v) {
    if (parents[v] >= v)
      throw ValidationError("tree_from_parents: parent id must precede child");
    depth[v] = depth[parents[v]] + 1;
    max_depth = std::max(max_depth, depth[v]);
    kids[parents[v]].push_back(v);
  }
  const int h = target_height < 0 ? max_depth : target_height;
  if (max_depth > h)
    throw ValidationError("tree_from_parents: node deeper than target height");

  // Breadth-first renumbering; sibling order follows the input ids.
  std::vector<std::uint32_t> order;
  order.reserve(n);
  order.push_back(0);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::uint32_t c : kids[order[i]]) order.push_back(c);

  std::vector<std::uint32_t> new_id(n);
  for (std::uint32_t i = 0; i < n; ++i) new_id[order[i]] = i;

  Tree t;
  t.height = h;
  t.parent.resize(n);
  t.child_begin.resize(n);
  t.child_count.resize(n);
  t.level_begin.assign(static_cast<std::size_t>(h) + 2, 0);
  std::uint32_t next_child = 1;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t old = order[i];
    t.parent[i] =
        old == 0 ? Tree::kNoParent : new_id[parents[old]];
    t.child_begin[i] = kids[old].empty() ? 0 : next_child;
    t.child_count[i] = static_cast<std::uint32_t>(kids[old].size());
    next_child += t.child_count[i];
    ++t.level_begin[static_cast<std::size_t>(depth[old]) + 1];
  }
  for (std::size_t d = 1; d < t.level_begin.size(); ++d)
    t.level_begin[d] += t.level_begin[d - 1];
  return t;
}

Tree make_star(std::uint32_t leaves) {
  std::vector<std::uint32_t> parents(static_cast<std::size_t>(leaves) + 1, 0);
  return tree_from_parents(parents, 1);
}

Tree make_path(int h) {
  std::vector<std::uint32_t> parents(static_cast<std::size_t>(h) + 1);
  for (std::size_t v = 1; v < parents.size(); ++v)
    parents[v] = static_cast<std::uint32_t>(v - 1);
  return tree_from_parents(parents, h);
}

Tree make_complete(std::uint32_t arity, int h) {
  std::vector<std::uint32_t> parents{0};
  std::uint32_t level_start = 0;
  std::uint32_t level_size = 1;
  for (int d = 0; d < h; ++d) {
    const std::uint32_t next_start = level_start + level_size;
    for (std::uint32_t v = level_start; v < next_start; ++v)
      parents.insert(parents.end(), arity, v);
    level_start = next_start;
    level_size *= arity;
  }
  return tree_from_parents(parents, h);
}

}  // namespace recon
