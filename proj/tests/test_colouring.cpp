#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "recon/classify.hpp"
#include "recon/colouring.hpp"
#include "recon/errors.hpp"
#include "recon/rng.hpp"
#include "recon/tree.hpp"

using namespace recon;

namespace {

Boundary boundary_from(const Tree& t, std::vector<std::uint8_t> colours,
                       int k) {
  Boundary b;
  b.k = k;
  b.colour = std::move(colours);
  REQUIRE(b.colour.size() == t.boundary_size());
  return b;
}

}  // namespace

TEST_SUITE("colouring") {

TEST_CASE("broadcast output is proper with the requested root colour") {
  Rng rng(100);
  const auto dist = OffspringDistribution::binomial(5, 0.6);
  for (int rep = 0; rep < 50; ++rep) {
    const Tree t = sample_tree(dist, 4, rng);
    const int k = 3 + rep % 3;
    const Colouring col = broadcast(t, k, rep % k, rng);
    CHECK(col.colour[0] == rep % k);
    CHECK(is_proper(t, col));
  }
  const Tree star = make_star(3);
  CHECK_THROWS_AS(broadcast(star, 1, 0, rng), ParameterViolation);
  CHECK_THROWS_AS(broadcast(star, 3, 3, rng), ParameterViolation);

  // k = 2 admits exactly one choice per child: the path alternates.
  const Colouring two = broadcast(make_path(5), 2, 0, rng);
  for (int d = 0; d <= 5; ++d) CHECK(two.colour[d] == d % 2);
}

TEST_CASE("child colours are uniform over the k-1 allowed values") {
  Rng rng(200);
  const Tree edge = make_path(1);
  int hits1 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Colouring col = broadcast(edge, 3, 0, rng);
    CHECK(col.colour[1] != 0);
    hits1 += col.colour[1] == 1;
  }
  const double freq = static_cast<double>(hits1) / n;
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(freq - 0.5) <= 3.0 * sigma);

  // Row of the transition matrix for k = 5 on a star.
  const Tree star = make_star(4);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < n / 4; ++i) {
    const Colouring col = broadcast(star, 5, 2, rng);
    for (int leaf = 1; leaf <= 4; ++leaf) ++counts[col.colour[leaf]];
  }
  CHECK(counts[2] == 0);
  const double per = 0.25, trials = n;
  for (int c = 0; c < 5; ++c) {
    if (c == 2) continue;
    const double f = counts[c] / trials;
    CHECK(std::abs(f - per) <= 3.0 * std::sqrt(per * (1 - per) / trials));
  }
}

TEST_CASE("coupled broadcasts agree wherever their parents agree") {
  Rng rng(300);
  const auto dist = OffspringDistribution::binomial(4, 0.7);
  for (int rep = 0; rep < 40; ++rep) {
    const Tree t = sample_tree(dist, 5, rng);
    const auto [x, z] = broadcast_coupled(t, 4, 0, 1, rng);
    CHECK(is_proper(t, x));
    CHECK(is_proper(t, z));
    CHECK(x.colour[0] == 0);
    CHECK(z.colour[0] == 1);
    for (std::uint32_t v = 1; v < t.node_count(); ++v) {
      const std::uint32_t p = t.parent[v];
      if (x.colour[p] == z.colour[p]) CHECK(x.colour[v] == z.colour[v]);
    }
  }
  CHECK_THROWS_AS(broadcast_coupled(make_star(2), 4, 1, 1, rng),
                  ParameterViolation);
}

TEST_CASE("coupled child disagreement rate is 1/(k-1) per child") {
  Rng rng(314159);
  const Tree star = make_star(1);
  const int k = 4, n = 100000;
  int differ = 0;
  std::vector<int> z_counts(k, 0);
  for (int i = 0; i < n; ++i) {
    const auto [x, z] = broadcast_coupled(star, k, 0, 1, rng);
    differ += x.colour[1] != z.colour[1];
    ++z_counts[z.colour[1]];
  }
  const double p = 1.0 / (k - 1);
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(differ / static_cast<double>(n) - p) <= 3.0 * sigma);

  // The second output must itself be a correct broadcast from root 1.
  CHECK(z_counts[1] == 0);
  for (int c : {0, 2, 3}) {
    const double f = z_counts[c] / static_cast<double>(n);
    CHECK(std::abs(f - p) <= 3.0 * sigma);
  }
}

TEST_CASE("coupled boundary distance grows like (d/(k-1))^h") {
  Rng rng(42424);
  const Tree t = make_complete(6, 4);
  const int n = 3000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto [x, z] = broadcast_coupled(t, 4, 0, 1, rng);
    const double ham = static_cast<double>(boundary_hamming(t, x, z));
    sum += ham;
    sumsq += ham * ham;
  }
  const double mean = sum / n;
  const double se =
      std::sqrt((sumsq - n * mean * mean) / (n - 1) / n);
  CHECK(std::abs(mean - 16.0) <= 3.0 * se);  // (6/3)^4
}

TEST_CASE("root marginal on two-node and three-node trees") {
  const Tree edge = make_path(1);
  const Marginal m1 = root_marginal(edge, boundary_from(edge, {0}, 3));
  REQUIRE(m1.probs.size() == 3);
  CHECK(m1.probs[0] == doctest::Approx(0.0));
  CHECK(m1.probs[1] == doctest::Approx(0.5));
  CHECK(m1.probs[2] == doctest::Approx(0.5));

  const Tree star2 = make_star(2);
  const Marginal m2 = root_marginal(star2, boundary_from(star2, {0, 1}, 3));
  CHECK(m2.probs[0] == doctest::Approx(0.0));
  CHECK(m2.probs[1] == doctest::Approx(0.0));
  CHECK(m2.probs[2] == doctest::Approx(1.0));
  CHECK(bias_score(star2, boundary_from(star2, {0, 1}, 3)) ==
        doctest::Approx(1.0));

  const Tree star3 = make_star(3);
  CHECK_THROWS_AS(root_marginal(star3, boundary_from(star3, {0, 1, 2}, 3)),
                  InconsistentBoundary);
}

TEST_CASE("height-zero and extinct trees have degenerate marginals") {
  Rng rng(7);
  const Tree point = sample_tree(OffspringDistribution::deterministic(3), 0,
                                 rng);
  const Marginal m = root_marginal(point, boundary_from(point, {2}, 3));
  CHECK(m.probs[2] == doctest::Approx(1.0));
  CHECK(bias_score(point, boundary_from(point, {2}, 3)) ==
        doctest::Approx(1.0));

  const Tree dead =
      sample_tree(OffspringDistribution::explicit_pmf({1.0}), 2, rng);
  const Marginal u = root_marginal(dead, boundary_from(dead, {}, 3));
  for (double p : u.probs) CHECK(p == doctest::Approx(1.0 / 3));
}

TEST_CASE("unconstrained interior leaves do not bias the marginal") {
  // Root has one constrained child (leaf colour 0 below it) and one child
  // that went extinct before the boundary.
  const Tree t = tree_from_parents({0, 0, 0, 1}, 2);
  const Marginal m = root_marginal(t, boundary_from(t, {0}, 3));
  CHECK(m.probs[0] == doctest::Approx(0.5));
  CHECK(m.probs[1] == doctest::Approx(0.25));
  CHECK(m.probs[2] == doctest::Approx(0.25));
}

TEST_CASE("deep paths neither underflow nor drift") {
  // On a path the recursion has a two-term closed form; iterate it with
  // plain doubles and compare against the log-space traversal.
  const int h = 120, k = 3;
  const Tree path = make_path(h);
  const Marginal got = root_marginal(path, boundary_from(path, {0}, k));
  std::vector<double> m(k, 0.0);
  m[0] = 1.0;
  for (int step = 0; step < h; ++step) {
    std::vector<double> next(k);
    double sum = 0.0;
    for (int c = 0; c < k; ++c) sum += next[c] = 1.0 - m[c];
    for (int c = 0; c < k; ++c) next[c] /= sum;
    m = next;
  }
  for (int c = 0; c < k; ++c)
    CHECK(got.probs[c] == doctest::Approx(m[c]).epsilon(1e-12));
}

TEST_CASE("subtree marginals compose into the parent marginal") {
  Rng rng(808);
  const auto dist = OffspringDistribution::binomial(4, 0.6);
  for (int rep = 0; rep < 25; ++rep) {
    const Tree t = sample_tree(dist, 4, rng);
    const int k = (rep % 2) ? 3 : 4;
    if (t.boundary_size() == 0) continue;
    const Boundary b = boundary_of(t, broadcast(t, k, 0, rng));
    const Marginal root = root_marginal(t, b);
    double sum = 0.0;
    std::vector<double> prod(k, 1.0);
    for (std::uint32_t c = 0; c < t.child_count[0]; ++c) {
      const Marginal mc = subtree_marginal(t, b, t.child_begin[0] + c);
      for (int col = 0; col < k; ++col) prod[col] *= 1.0 - mc.probs[col];
    }
    for (double p : prod) sum += p;
    for (int col = 0; col < k; ++col)
      CHECK(root.probs[col] == doctest::Approx(prod[col] / sum).epsilon(1e-10));
  }
}

TEST_CASE("broadcast boundaries are always consistent") {
  Rng rng(999);
  const auto dist = OffspringDistribution::poisson(2.5);
  for (int rep = 0; rep < 60; ++rep) {
    const Tree t = sample_tree(dist, 5, rng);
    const Boundary b = boundary_of(t, broadcast(t, 3, rep % 3, rng));
    CHECK_NOTHROW(root_marginal(t, b));
    CHECK_NOTHROW(allowed_sets(t, b));
  }
}

TEST_CASE("allowed sets propagate forced colours upward") {
  const Tree star2 = make_star(2);
  const AllowedSets freezing =
      allowed_sets(star2, boundary_from(star2, {0, 1}, 3));
  CHECK(freezing.mask[0] == 0b100);
  CHECK(freezing.root_freezing());

  const Tree edge = make_path(1);
  const AllowedSets open = allowed_sets(edge, boundary_from(edge, {0}, 3));
  CHECK(open.mask[0] == 0b110);
  CHECK_FALSE(open.root_freezing());

  const Tree star3 = make_star(3);
  CHECK_THROWS_AS(allowed_sets(star3, boundary_from(star3, {0, 1, 2}, 3)),
                  InconsistentBoundary);

  // A non-singleton child never removes a colour.
  const Tree t = tree_from_parents({0, 0, 0, 1}, 2);
  const AllowedSets part = allowed_sets(t, boundary_from(t, {0}, 3));
  CHECK(part.mask[1] == 0b110);  // child above leaf 0
  CHECK(part.mask[2] == 0b111);  // extinct child unconstrained
  CHECK(part.mask[0] == 0b111);
}

TEST_CASE("allowed sets equal the support of the exact marginal") {
  Rng rng(616);
  const auto dist = OffspringDistribution::binomial(3, 0.6);
  for (int rep = 0; rep < 50; ++rep) {
    const Tree t = sample_tree(dist, 3, rng);
    const int k = (rep % 2) ? 3 : 4;
    const Boundary b = boundary_of(t, broadcast(t, k, rng.below(k), rng));
    const AllowedSets sets = allowed_sets(t, b);
    for (std::uint32_t v = 0; v < t.node_count(); ++v) {
      const Marginal m = subtree_marginal(t, b, v);
      std::uint64_t support = 0;
      for (int c = 0; c < k; ++c)
        if (m.probs[c] > 1e-12) support |= std::uint64_t{1} << c;
      CHECK(sets.mask[v] == support);
    }
  }
}

TEST_CASE("height-one bias classification counts missed colours") {
  const double dplus = 30.0, delta = 0.5, gamma = 0.3;  // 30^0.3 = 2.77
  const Tree star = make_star(6);
  NodeFlags flags;
  classify_mixing(star, dplus, delta, flags);

  // Six leaves using three colours: three missed, enough.
  auto lab = classify_nonbiasing(star, boundary_from(star, {0, 0, 1, 1, 2, 2}, 6),
                                 dplus, delta, gamma, flags);
  CHECK(lab[0] == 1);
  for (int leaf = 1; leaf <= 6; ++leaf) CHECK(lab[leaf] == -1);

  // All six colours present: nothing missed.
  lab = classify_nonbiasing(star, boundary_from(star, {0, 1, 2, 3, 4, 5}, 6),
                            dplus, delta, gamma, flags);
  CHECK(lab[0] == 0);

  // Two missed is below the threshold of 2.77.
  lab = classify_nonbiasing(star, boundary_from(star, {0, 1, 2, 3, 0, 1}, 6),
                            dplus, delta, gamma, flags);
  CHECK(lab[0] == 0);

  // gamma above delta is rejected
  CHECK_THROWS_AS(classify_nonbiasing(star, boundary_from(star, {0, 0, 1, 1, 2, 2}, 6),
                                      dplus, 0.1, 0.3, flags),
                  ParameterViolation);
}

TEST_CASE("taller subtrees tolerate a bounded number of biased children") {
  const double dplus = 30.0, delta = 0.5, gamma = 0.3;  // allowance floor(30^0.5) = 5
  // Root over eight height-1 stars of six leaves each, k = 6.
  auto build = [&](int biased_children) {
    std::vector<std::uint32_t> parents(9, 0);
    parents[0] = 0;
    std::vector<std::uint8_t> colours;
    for (std::uint32_t child = 1; child <= 8; ++child) {
      for (int l = 0; l < 6; ++l) parents.push_back(child);
      const bool biased = static_cast<int>(child) <= biased_children;
      for (int l = 0; l < 6; ++l)
        colours.push_back(static_cast<std::uint8_t>(biased ? l : l % 3));
    }
    const Tree t = tree_from_parents(parents, 2);
    return std::make_pair(t, boundary_from(t, colours, 6));
  };

  NodeFlags flags;
  auto [one, bone] = build(5);
  classify_mixing(one, dplus, delta, flags);
  auto lab = classify_nonbiasing(one, bone, dplus, delta, gamma, flags);
  for (int child = 1; child <= 5; ++child) CHECK(lab[child] == 0);
  CHECK(lab[0] == 1);

  auto [two, btwo] = build(6);
  classify_mixing(two, dplus, delta, flags);
  lab = classify_nonbiasing(two, btwo, dplus, delta, gamma, flags);
  CHECK(lab[0] == 0);

  // A non-mixing child is not applicable and never counts as biased.
  std::vector<std::uint32_t> parents{0, 0};
  for (int l = 0; l < 31; ++l) parents.push_back(1);
  const Tree heavy = tree_from_parents(parents, 2);
  std::vector<std::uint8_t> colours(31);
  for (int l = 0; l < 31; ++l) colours[l] = static_cast<std::uint8_t>(l % 6);
  classify_mixing(heavy, dplus, delta, flags);
  CHECK(flags.mixing[1] == 0);
  lab = classify_nonbiasing(heavy, boundary_from(heavy, colours, 6), dplus,
                            delta, gamma, flags);
  CHECK(lab[1] == -1);
  CHECK(lab[0] == 1);
}

TEST_CASE("non-biased mixing roots have small bias scores") {
  // Contrapositive of the bias witness bound: a non-biased classification
  // must come with max marginal below delta_plus^(-gamma).  The palette is
  // wide enough that height-1 stars typically miss several colours, which
  // is the regime the bound addresses.
  const double dplus = 30.0, delta = 0.1, gamma = 0.05;
  const double cap = std::pow(dplus, -gamma);
  Rng rng(5150);
  const int k = 30;
  NodeFlags flags;
  int checked = 0;
  for (int h = 1; h <= 2; ++h) {
    const Tree t = make_complete(30, h);
    classify_mixing(t, dplus, delta, flags);
    for (int rep = 0; rep < (h == 1 ? 200 : 60); ++rep) {
      const Boundary b = boundary_of(t, broadcast(t, k, rng.below(k), rng));
      const auto lab =
          classify_nonbiasing(t, b, dplus, delta, gamma, flags);
      if (lab[0] != 1) continue;
      ++checked;
      CHECK(bias_score(t, b) < cap);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("broadcast boundaries are rarely biasing") {
  // Deterministic(30), h = 3: the biased-root rate must stay below
  // exp(-(1/8) * 30^(delta + (7/8) * alpha/(1+alpha))) + 3 sigma, the
  // closed-form level-3 bound.  A 30-colour palette keeps the height-1
  // missed-colour counts comfortably above the 30^gamma threshold; with a
  // palette near d/ln d the finite-size counts sit below it and every
  // boundary classifies as biasing.
  const double dplus = 30.0, delta = 0.1, gamma = 0.05, alpha = 0.2;
  const int k = 30;
  const double bound =
      std::exp(-0.125 * std::pow(30.0, delta + 0.875 * alpha / (1 + alpha)));
  const Tree t = make_complete(30, 3);
  NodeFlags flags;
  classify_mixing(t, dplus, delta, flags);
  Rng rng(33533);
  const int n = 300;
  int biased = 0;
  for (int rep = 0; rep < n; ++rep) {
    const Boundary b = boundary_of(t, broadcast(t, k, rng.below(k), rng));
    biased += classify_nonbiasing(t, b, dplus, delta, gamma, flags)[0] == 0;
  }
  const double rate = static_cast<double>(biased) / n;
  const double se = std::sqrt(rate * (1.0 - rate) / n);
  CHECK(rate <= bound + 3.0 * se);
}

TEST_CASE("boundary csv round-trips and rejects malformed input") {
  Rng rng(2024);
  const Tree t = sample_tree(OffspringDistribution::binomial(4, 0.6), 3, rng);
  REQUIRE(t.boundary_size() > 0);
  const Boundary b = boundary_of(t, broadcast(t, 4, 1, rng));

  std::ostringstream os;
  write_boundary(os, t, b);
  std::istringstream is(os.str());
  const Boundary back = read_boundary(is, t, 4);
  CHECK(back.colour == b.colour);
  CHECK(os.str().rfind("leaf_id,colour\n", 0) == 0);

  auto reject = [&](const std::string& text) {
    std::istringstream bad(text);
    CHECK_THROWS_AS(read_boundary(bad, t, 4), ValidationError);
  };
  const std::uint32_t bf = t.boundary_first();
  reject("0,1\n");                              // not a depth-h id
  reject(std::to_string(bf) + ",9\n");          // colour out of range
  reject(std::to_string(bf) + ",1\n" +          // duplicate id
         std::to_string(bf) + ",2\n");
  reject(std::to_string(bf) + ",1\n");          // missing rows
  reject("garbage\n");
}

}  // TEST_SUITE
