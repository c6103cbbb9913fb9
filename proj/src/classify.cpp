#include "recon/classify.hpp"

#include <cmath>

#include "recon/errors.hpp"

namespace recon {

void classify_mixing(const Tree& tree, double delta_plus, double delta,
                     NodeFlags& flags) {
  if (delta_plus < 1.0)
    throw ParameterViolation("classify_mixing: delta_plus must be >= 1");
  if (!(delta > 0.0))
    throw ParameterViolation("classify_mixing: delta must be > 0");
  const std::uint64_t max_children = static_cast<std::uint64_t>(delta_plus);
  const std::uint64_t bad_allowance =
      static_cast<std::uint64_t>(std::floor(std::pow(delta_plus, delta)));

  const std::size_t n = tree.node_count();
  flags.mixing.assign(n, 1);
  // Children carry larger ids, so one reverse sweep sees them first.
  for (std::uint32_t v = static_cast<std::uint32_t>(n); v-- > 0;) {
    const std::uint32_t deg = tree.child_count[v];
    if (deg == 0) continue;  // depth-h or extinct: mixing
    if (deg > max_children) {
      flags.mixing[v] = 0;
      continue;
    }
    std::uint64_t bad = 0;
    for (std::uint32_t c = 0; c < deg; ++c)
      bad += flags.mixing[tree.child_begin[v] + c] == 0;
    flags.mixing[v] = bad <= bad_allowance ? 1 : 0;
  }
}

void classify_freezable(const Tree& tree, double delta_minus, double delta,
                        NodeFlags& flags) {
  if (tree.height < 1)
    throw ParameterViolation("classify_freezable: tree height must be >= 1");
  if (delta_minus < 1.0)
    throw ParameterViolation("classify_freezable: delta_minus must be >= 1");
  if (!(delta > 0.0))
    throw ParameterViolation("classify_freezable: delta must be > 0");
  const auto min_children = static_cast<std::uint64_t>(std::ceil(delta_minus));
  const auto min_frozen_children = static_cast<std::uint64_t>(
      std::ceil(delta_minus - std::pow(delta_minus, delta)));

  const std::size_t n = tree.node_count();
  flags.freezable.assign(n, 0);
  const std::uint32_t last_internal =
      tree.level_begin[static_cast<std::size_t>(tree.height)];
  for (std::uint32_t v = last_internal; v-- > 0;) {
    const std::uint32_t deg = tree.child_count[v];
    if (deg < min_children) continue;
    if (tree.depth_of(v) == tree.height - 1) {
      flags.freezable[v] = 1;
      continue;
    }
    std::uint64_t frozen = 0;
    for (std::uint32_t c = 0; c < deg; ++c)
      frozen += flags.freezable[tree.child_begin[v] + c];
    flags.freezable[v] = frozen >= min_frozen_children ? 1 : 0;
  }
}

bool in_A(const Tree& tree, const NodeFlags& flags, double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0))
    throw ParameterViolation("in_A: zeta must lie in (0, 1)");
  if (flags.mixing.size() != tree.node_count())
    throw ParameterViolation("in_A: mixing labels missing; run classify_mixing");
  if (tree.boundary_size() == 0) return true;  // extinct before depth h

  const auto need = static_cast<std::uint64_t>(
      std::ceil((1.0 - zeta) * tree.height));
  std::vector<std::uint16_t> count(tree.node_count());
  count[0] = flags.mixing[0];
  for (std::uint32_t v = 1; v < tree.node_count(); ++v)
    count[v] = static_cast<std::uint16_t>(count[tree.parent[v]] +
                                          flags.mixing[v]);
  const std::uint32_t begin = tree.boundary_first();
  const std::uint32_t end = begin + tree.boundary_size();
  for (std::uint32_t v = begin; v < end; ++v)
    if (count[v] < need) return false;
  return true;
}

}  // namespace recon
