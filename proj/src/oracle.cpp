#include "recon/oracle.hpp"

#include <cstdlib>
#include <string>
#include <unordered_map>
#include <vector>

#include "recon/errors.hpp"

namespace recon {

namespace {

using PatternCounts = std::unordered_map<std::uint64_t,
                                         std::pair<std::uint64_t, std::uint64_t>>;

void require_palette(int k) {
  if (k < 2) throw ParameterViolation("oracle: k must be >= 2");
  if (k > 255) throw ParameterViolation("oracle: k must be <= 255");
}

// k * (k-1)^(n-1), guarded by the enumeration budget.
std::uint64_t total_colourings_or_throw(const Tree& tree, int k,
                                        EnumerationLimit limit) {
  unsigned __int128 total = k;
  for (std::size_t i = 1; i < tree.node_count(); ++i) {
    total *= static_cast<unsigned>(k - 1);
    if (total > limit.max_total_colourings)
      throw LimitExceeded(
          "oracle: colouring count exceeds the enumeration limit of " +
          std::to_string(limit.max_total_colourings));
  }
  if (total > limit.max_total_colourings)
    throw LimitExceeded(
        "oracle: colouring count exceeds the enumeration limit of " +
        std::to_string(limit.max_total_colourings));
  return static_cast<std::uint64_t>(total);
}

void require_pattern_capacity(const Tree& tree, int k) {
  if (tree.boundary_size() > 16)
    throw LimitExceeded("oracle: more than 16 boundary nodes; patterns no "
                        "longer fit a 64-bit key");
  if (k > 16)
    throw LimitExceeded("oracle: k > 16; patterns no longer fit a 64-bit key");
}

// Depth-first enumeration over breadth-first node positions.  root_colour
// -1 means all root colours; a non-null boundary pins the depth-h nodes.
// fn sees the completed colour vector.
template <class Fn>
void for_each_colouring(const Tree& tree, int k, int root_colour,
                        const Boundary* boundary, Fn&& fn) {
  const std::size_t n = tree.node_count();
  const std::uint32_t bf = tree.boundary_first();
  std::vector<std::uint8_t> colour(n);

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      fn(colour);
      return;
    }
    if (i == 0) {
      if (boundary != nullptr && bf == 0 && tree.boundary_size() > 0) {
        // Height-zero tree: the root is the boundary.
        colour[0] = boundary->colour[0];
        if (root_colour < 0 || colour[0] == root_colour) self(self, 1);
      } else if (root_colour >= 0) {
        colour[0] = static_cast<std::uint8_t>(root_colour);
        self(self, 1);
      } else {
        for (int c = 0; c < k; ++c) {
          colour[0] = static_cast<std::uint8_t>(c);
          self(self, 1);
        }
      }
      return;
    }
    const std::uint8_t p = colour[tree.parent[i]];
    if (boundary != nullptr && i >= bf) {
      const std::uint8_t forced = boundary->colour[i - bf];
      if (forced == p) return;  // improper; prune
      colour[i] = forced;
      self(self, i + 1);
      return;
    }
    for (int digit = 0; digit < k - 1; ++digit) {
      colour[i] = static_cast<std::uint8_t>(digit + (digit >= p));
      self(self, i + 1);
    }
  };
  rec(rec, 0);
}

std::uint64_t pattern_key(const Tree& tree,
                          const std::vector<std::uint8_t>& colour) {
  const std::uint32_t bf = tree.boundary_first();
  std::uint64_t key = 0;
  for (std::uint32_t i = 0; i < tree.boundary_size(); ++i)
    key |= static_cast<std::uint64_t>(colour[bf + i]) << (4 * i);
  return key;
}

}  // namespace

std::uint64_t count_proper_colourings(const Tree& tree, int k,
                                      EnumerationLimit limit) {
  require_palette(k);
  const std::uint64_t expected = total_colourings_or_throw(tree, k, limit);
  std::uint64_t count = 0;
  for_each_colouring(tree, k, -1, nullptr,
                     [&](const std::vector<std::uint8_t>& colour) {
                       for (std::size_t v = 1; v < colour.size(); ++v)
                         if (colour[v] == colour[tree.parent[v]])
                           throw std::logic_error(
                               "oracle: enumerator produced an improper "
                               "colouring");
                       ++count;
                     });
  if (count != expected)
    throw std::logic_error("oracle: enumeration disagrees with the closed "
                           "form k*(k-1)^(n-1)");
  return count;
}

Marginal exact_root_marginal(const Tree& tree, const Boundary& boundary,
                             EnumerationLimit limit) {
  require_palette(boundary.k);
  if (boundary.colour.size() != tree.boundary_size())
    throw ValidationError("oracle: boundary size must match depth-h nodes");
  total_colourings_or_throw(tree, boundary.k, limit);

  std::vector<std::uint64_t> counts(boundary.k, 0);
  for_each_colouring(tree, boundary.k, -1, &boundary,
                     [&](const std::vector<std::uint8_t>& colour) {
                       ++counts[colour[0]];
                     });
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  if (total == 0)
    throw InconsistentBoundary(
        "oracle: no proper colouring extends the boundary");
  Marginal out;
  out.probs.resize(boundary.k);
  for (int c = 0; c < boundary.k; ++c)
    out.probs[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  return out;
}

double exact_leaf_tv(const Tree& tree, int k, int i, int j,
                     EnumerationLimit limit) {
  require_palette(k);
  if (i < 0 || i >= k || j < 0 || j >= k)
    throw ParameterViolation("oracle: root colours out of range");
  if (i == j) return 0.0;
  require_pattern_capacity(tree, k);
  total_colourings_or_throw(tree, k, limit);

  PatternCounts patterns;
  double per_root = 0.0;
  for_each_colouring(tree, k, i, nullptr,
                     [&](const std::vector<std::uint8_t>& colour) {
                       ++patterns[pattern_key(tree, colour)].first;
                       per_root += 1.0;
                     });
  for_each_colouring(tree, k, j, nullptr,
                     [&](const std::vector<std::uint8_t>& colour) {
                       ++patterns[pattern_key(tree, colour)].second;
                     });
  std::uint64_t diff = 0;
  for (const auto& [key, counts] : patterns) {
    (void)key;
    diff += counts.first > counts.second ? counts.first - counts.second
                                         : counts.second - counts.first;
  }
  return static_cast<double>(diff) / (2.0 * per_root);
}

MagnetizationMoments exact_magnetization_moments(const Tree& tree, int k,
                                                 int c,
                                                 EnumerationLimit limit) {
  require_palette(k);
  if (c < 0 || c >= k)
    throw ParameterViolation("oracle: conditioning colour out of range");
  require_pattern_capacity(tree, k);
  total_colourings_or_throw(tree, k, limit);

  // Per boundary pattern: total extension count N and count N_c with the
  // root coloured c.
  PatternCounts patterns;
  for_each_colouring(tree, k, -1, nullptr,
                     [&](const std::vector<std::uint8_t>& colour) {
                       auto& entry = patterns[pattern_key(tree, colour)];
                       ++entry.first;
                       entry.second += colour[0] == c;
                     });

  boost::multiprecision::cpp_int big_total = 0;
  for (const auto& [key, counts] : patterns) {
    (void)key;
    big_total += counts.first;
  }

  // With Y = N_c/N - 1/k under pattern weight N/T:
  //   E|Y|    = sum |k N_c - N| / (k T)
  //   E[Y^2]  = sum (k N_c - N)^2 / (k^2 T N)
  //   E_c[Y]  = sum N_c (k N_c - N) / (T N)   (pattern weight k N_c / T)
  boost::multiprecision::cpp_int abs_num = 0;
  Rational sq = 0, cond = 0;
  for (const auto& [key, counts] : patterns) {
    (void)key;
    const boost::multiprecision::cpp_int big_n = counts.first;
    const boost::multiprecision::cpp_int centred =
        boost::multiprecision::cpp_int(counts.second) * k - big_n;
    abs_num += abs(centred);
    sq += Rational(centred * centred, big_n * k * k);
    cond += Rational(boost::multiprecision::cpp_int(counts.second) * centred,
                     big_n);
  }
  MagnetizationMoments out;
  out.abs_mean = Rational(abs_num, big_total * k);
  out.square_mean = sq / Rational(big_total);
  out.cond_mean = cond / Rational(big_total);
  return out;
}

}  // namespace recon
