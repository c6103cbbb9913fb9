#include "recon/colouring.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "recon/errors.hpp"

namespace recon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_colours(int k) {
  if (k < 2) throw ParameterViolation("colouring: k must be >= 2");
  if (k > 255)
    throw ParameterViolation("colouring: k must fit a byte (k <= 255)");
}

void require_boundary(const Tree& tree, const Boundary& b) {
  require_colours(b.k);
  if (b.colour.size() != tree.boundary_size())
    throw ValidationError("boundary: size must equal the depth-h node count");
  for (std::uint8_t c : b.colour)
    if (c >= b.k) throw ValidationError("boundary: colour out of range");
}

}  // namespace

double Marginal::max() const {
  return probs.empty() ? 0.0 : *std::max_element(probs.begin(), probs.end());
}

bool AllowedSets::root_freezing() const {
  return !mask.empty() && __builtin_popcountll(mask[0]) == 1;
}

bool is_proper(const Tree& tree, const Colouring& col) {
  if (col.k < 2 || col.colour.size() != tree.node_count()) return false;
  for (std::uint32_t v = 0; v < tree.node_count(); ++v) {
    if (col.colour[v] >= col.k) return false;
    if (v != 0 && col.colour[v] == col.colour[tree.parent[v]]) return false;
  }
  return true;
}

Colouring broadcast(const Tree& tree, int k, int root_colour, Rng& rng) {
  require_colours(k);
  if (root_colour < 0 || root_colour >= k)
    throw ParameterViolation("broadcast: root colour out of range");
  Colouring col;
  col.k = k;
  col.colour.resize(tree.node_count());
  col.colour[0] = static_cast<std::uint8_t>(root_colour);
  for (std::uint32_t v = 1; v < tree.node_count(); ++v)
    col.colour[v] = static_cast<std::uint8_t>(
        rng.colour_other_than(k, col.colour[tree.parent[v]]));
  return col;
}

std::pair<Colouring, Colouring> broadcast_coupled(const Tree& tree, int k,
                                                  int c, int q, Rng& rng) {
  require_colours(k);
  if (c == q) throw ParameterViolation("broadcast_coupled: roots must differ");
  if (c < 0 || c >= k || q < 0 || q >= k)
    throw ParameterViolation("broadcast_coupled: root colour out of range");
  Colouring x, z;
  x.k = z.k = k;
  x.colour.resize(tree.node_count());
  z.colour.resize(tree.node_count());
  x.colour[0] = static_cast<std::uint8_t>(c);
  z.colour[0] = static_cast<std::uint8_t>(q);
  for (std::uint32_t v = 1; v < tree.node_count(); ++v) {
    const std::uint8_t a = x.colour[tree.parent[v]];
    const std::uint8_t b = z.colour[tree.parent[v]];
    const auto draw =
        static_cast<std::uint8_t>(rng.colour_other_than(k, a));
    x.colour[v] = draw;
    z.colour[v] = (a == b) ? draw : (draw == b ? a : draw);
  }
  return {std::move(x), std::move(z)};
}

Boundary boundary_of(const Tree& tree, const Colouring& col) {
  Boundary b;
  b.k = col.k;
  const std::uint32_t begin = tree.boundary_first();
  b.colour.assign(col.colour.begin() + begin,
                  col.colour.begin() + begin + tree.boundary_size());
  return b;
}

std::uint64_t boundary_hamming(const Tree& tree, const Colouring& a,
                               const Colouring& b) {
  const std::uint32_t begin = tree.boundary_first();
  const std::uint32_t end = begin + tree.boundary_size();
  std::uint64_t ham = 0;
  for (std::uint32_t v = begin; v < end; ++v)
    ham += a.colour[v] != b.colour[v];
  return ham;
}

namespace {

// Fills m with the marginal of a childless node.
void terminal_marginal(const Tree& tree, const Boundary& b, std::uint32_t v,
                       std::vector<double>& m) {
  const std::uint32_t bf = tree.boundary_first();
  if (v >= bf && v < bf + tree.boundary_size()) {
    std::fill(m.begin(), m.end(), 0.0);
    m[b.colour[v - bf]] = 1.0;
  } else {
    std::fill(m.begin(), m.end(), 1.0 / static_cast<double>(b.k));
  }
}

void absorb_child(std::vector<double>& logacc, const std::vector<double>& m) {
  for (std::size_t c = 0; c < logacc.size(); ++c)
    logacc[c] += std::log1p(-m[c]);
}

// Normalizes exp(logacc) into m; the shift by the maximum keeps deep
// products in range.
void finalize_node(const std::vector<double>& logacc, std::vector<double>& m) {
  const double top = *std::max_element(logacc.begin(), logacc.end());
  if (top == kNegInf)
    throw InconsistentBoundary(
        "no proper colouring is compatible with the boundary");
  double sum = 0.0;
  for (std::size_t c = 0; c < logacc.size(); ++c) {
    m[c] = std::exp(logacc[c] - top);
    sum += m[c];
  }
  for (double& p : m) p /= sum;
}

}  // namespace

Marginal subtree_marginal(const Tree& tree, const Boundary& boundary,
                          std::uint32_t v) {
  require_boundary(tree, boundary);
  if (v >= tree.node_count())
    throw ParameterViolation("subtree_marginal: node id out of range");
  const int k = boundary.k;

  Marginal out;
  out.probs.assign(k, 0.0);
  if (tree.child_count[v] == 0) {
    terminal_marginal(tree, boundary, v, out.probs);
    return out;
  }

  struct Frame {
    std::uint32_t node;
    std::uint32_t next_child;
    std::vector<double> logacc;
  };
  std::vector<Frame> stack;
  stack.push_back({v, 0, std::vector<double>(k, 0.0)});
  std::vector<double> m(k);
  while (true) {
    Frame& top = stack.back();
    if (top.next_child < tree.child_count[top.node]) {
      const std::uint32_t u = tree.child_begin[top.node] + top.next_child;
      ++top.next_child;
      if (tree.child_count[u] == 0) {
        terminal_marginal(tree, boundary, u, m);
        absorb_child(top.logacc, m);
      } else {
        stack.push_back({u, 0, std::vector<double>(k, 0.0)});
      }
      continue;
    }
    finalize_node(top.logacc, m);
    stack.pop_back();
    if (stack.empty()) break;
    absorb_child(stack.back().logacc, m);
  }
  out.probs = m;
  return out;
}

Marginal root_marginal(const Tree& tree, const Boundary& boundary) {
  return subtree_marginal(tree, boundary, tree.root());
}

AllowedSets allowed_sets(const Tree& tree, const Boundary& boundary) {
  require_boundary(tree, boundary);
  if (boundary.k > 64)
    throw ParameterViolation("allowed_sets: k must be <= 64");
  const std::uint64_t full = boundary.k == 64
                                 ? ~std::uint64_t{0}
                                 : (std::uint64_t{1} << boundary.k) - 1;
  AllowedSets out;
  out.k = boundary.k;
  out.mask.assign(tree.node_count(), full);
  const std::uint32_t bf = tree.boundary_first();
  for (std::uint32_t i = 0; i < tree.boundary_size(); ++i)
    out.mask[bf + i] = std::uint64_t{1} << boundary.colour[i];
  for (std::uint32_t v = bf; v-- > 0;) {
    std::uint64_t mask = full;
    for (std::uint32_t c = 0; c < tree.child_count[v]; ++c) {
      const std::uint64_t child = out.mask[tree.child_begin[v] + c];
      if (__builtin_popcountll(child) == 1) mask &= ~child;
    }
    if (mask == 0)
      throw InconsistentBoundary(
          "boundary forces contradictory colours at an internal node");
    out.mask[v] = mask;
  }
  return out;
}

double bias_score(const Tree& tree, const Boundary& boundary) {
  return root_marginal(tree, boundary).max();
}

std::vector<std::int8_t> classify_nonbiasing(const Tree& tree,
                                             const Boundary& boundary,
                                             double delta_plus, double delta,
                                             double gamma,
                                             const NodeFlags& flags) {
  require_boundary(tree, boundary);
  if (delta_plus < 1.0)
    throw ParameterViolation("classify_nonbiasing: delta_plus must be >= 1");
  if (!(gamma > 0.0) || !(delta > 0.0) || gamma > delta)
    throw ParameterViolation(
        "classify_nonbiasing: need 0 < gamma <= delta");
  if (flags.mixing.size() != tree.node_count())
    throw ParameterViolation(
        "classify_nonbiasing: mixing labels missing; run classify_mixing");

  const double min_missed = std::pow(delta_plus, gamma);
  const auto biased_allowance =
      static_cast<std::uint64_t>(std::floor(std::pow(delta_plus, delta)));
  const int k = boundary.k;
  const std::uint32_t bf = tree.boundary_first();

  std::vector<std::int8_t> out(tree.node_count(), -1);
  std::vector<std::uint8_t> seen(k);
  for (std::uint32_t v = bf; v-- > 0;) {
    if (!flags.mixing[v]) continue;
    if (tree.depth_of(v) == tree.height - 1) {
      std::fill(seen.begin(), seen.end(), 0);
      int used = 0;
      for (std::uint32_t c = 0; c < tree.child_count[v]; ++c) {
        const std::uint8_t col =
            boundary.colour[tree.child_begin[v] + c - bf];
        used += seen[col] == 0;
        seen[col] = 1;
      }
      out[v] = (k - used >= min_missed) ? 1 : 0;
    } else {
      std::uint64_t biased = 0;
      for (std::uint32_t c = 0; c < tree.child_count[v]; ++c)
        biased += out[tree.child_begin[v] + c] == 0;
      out[v] = biased <= biased_allowance ? 1 : 0;
    }
  }
  return out;
}

void write_boundary(std::ostream& out, const Tree& tree,
                    const Boundary& boundary) {
  require_boundary(tree, boundary);
  out << "leaf_id,colour\n";
  const std::uint32_t bf = tree.boundary_first();
  for (std::uint32_t i = 0; i < tree.boundary_size(); ++i)
    out << bf + i << ',' << static_cast<int>(boundary.colour[i]) << '\n';
}

Boundary read_boundary(std::istream& in, const Tree& tree, int k) {
  require_colours(k);
  Boundary b;
  b.k = k;
  b.colour.assign(tree.boundary_size(), 0);
  std::vector<std::uint8_t> seen(tree.boundary_size(), 0);
  const std::uint32_t bf = tree.boundary_first();
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("boundary csv: expected `leaf_id,colour` rows");
    const std::string id_field = line.substr(0, comma);
    if (id_field == "leaf_id") continue;  // header
    std::uint64_t id = 0;
    long long colour = -1;
    try {
      id = std::stoull(id_field);
      colour = std::stoll(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError("boundary csv: malformed row: " + line);
    }
    if (id < bf || id >= bf + tree.boundary_size())
      throw ValidationError("boundary csv: id " + std::to_string(id) +
                            " is not a depth-h node");
    if (colour < 0 || colour >= k)
      throw ValidationError("boundary csv: colour out of range in: " + line);
    const std::uint32_t slot = static_cast<std::uint32_t>(id) - bf;
    if (seen[slot])
      throw ValidationError("boundary csv: duplicate id " +
                            std::to_string(id));
    seen[slot] = 1;
    b.colour[slot] = static_cast<std::uint8_t>(colour);
    ++rows;
  }
  if (rows != tree.boundary_size())
    throw ValidationError("boundary csv: missing rows for some depth-h nodes");
  return b;
}

}  // namespace recon
