#pragma once

#include <cstdint>
#include <vector>

#include "recon/distribution.hpp"
#include "recon/rng.hpp"

namespace recon {

// Exact-law tools for Galton-Watson trees far too large to materialize:
// level-size chains, fixed-point recursions for survival / frozen-root /
// freezable-root probabilities, the path-membership probability, and a
// population-dynamics pool of root marginals.  Each returns (or samples
// from) the exact per-statistic law of the corresponding quantity on the
// random tree, so estimators can fall back to these when the explicit
// arena would blow the node budget.

// Z_0..Z_h with Z_0 = 1 and Z_{t+1} a sum of Z_t offspring draws, sampled
// through the distribution's aggregate sampler.
std::vector<std::uint64_t> sample_level_sizes(const OffspringDistribution& dist,
                                              int h, Rng& rng);

// s_0..s_h where s_t = Pr[some depth-t descendant exists]:
// s_t = 1 - G(1 - s_{t-1}) with G the offspring generating function.
std::vector<double> survival_probabilities(const OffspringDistribution& dist,
                                           int h);

// cov[j] = probability that j uniform draws over `colours` colours hit all
// of them; exactly zero for j < colours.  Computed by the positive
// occupancy recursion, so there is no cancellation even at colours = 63.
std::vector<double> coupon_cover_probabilities(int colours, int max_draws);

// p_0..p_h where p_t = Pr[a broadcast boundary at depth t freezes the
// root]: p_0 = 1, and a root is frozen when its frozen children (each
// independently frozen with probability p_{t-1}, carrying a uniform colour
// among the k-1 non-root ones) cover all k-1 colours.  Includes extinction:
// childless nodes are never frozen.
std::vector<double> frozen_probabilities(const OffspringDistribution& dist,
                                         int k, int h);

// f_1..f_h where f_t = Pr[the root of a height-t tree is freezable]:
// f_1 = Pr[D >= delta_minus], and deeper roots need D >= delta_minus
// offspring of which at least ceil(delta_minus - delta_minus^delta) are
// freezable.
std::vector<double> freezable_probabilities(const OffspringDistribution& dist,
                                            double delta_minus, double delta,
                                            int h);

// Both sides of the path-membership law: in_set + miss = 1 up to rounding.
// The failure side is accumulated directly from the failing states, so it
// stays meaningful even at 1e-40 scales where 1 - in_set would return 0.
struct MembershipSplit {
  double in_set = 1.0;
  double miss = 0.0;
};

// Law of the predicate "every root-to-depth-h path carries at least
// ceil((1-zeta)h) mixing vertices", extinct trees qualifying vacuously.
// Joint dynamic program over (mixing flag of the subtree root, minimal
// mixing count over its boundary paths).
MembershipSplit a_membership_split(const OffspringDistribution& dist, int h,
                                   double zeta, double delta_plus,
                                   double delta);

// Population-dynamics approximation of the law of the root marginal vector
// of a height-t broadcast-boundary tree.  Level t holds `size` vectors for
// broadcast root colour 0; other root colours are obtained by the
// colour-symmetry transposition (0 <-> root_colour).  Resampling children
// from the previous level (without replacement within a node) is the only
// approximation.  Its per-level bias is small, but shared ancestry builds
// up correlations across entries, and iterating many levels can drift the
// population visibly off the true law; estimators therefore keep the pool
// shallow and realize the top levels of each instance explicitly.
class MarginalPool {
 public:
  MarginalPool(const OffspringDistribution& dist, int k, int height,
               std::size_t size, Rng& rng);

  int colours() const { return k_; }
  int height() const { return height_; }
  std::size_t size() const { return size_; }

  // Pr[root colour = c] under pool entry i of the given level, relabelled
  // for the requested broadcast root colour.
  double prob(int level, std::size_t i, int root_colour, int c) const;

  // Writes entry i of the given level into out[0..k), relabelled for the
  // requested root colour with a fresh uniform relabelling of the other
  // k-1 colours.  The exact law is exchangeable in those colours, so this
  // is still a draw from the same law; the random relabelling stops the
  // pool's realization noise from pointing the same way in every draw,
  // which otherwise gets amplified when many draws are recombined.
  void draw_relabelled(int level, std::size_t i, int root_colour, Rng& rng,
                       double* out) const;

 private:
  int k_;
  int height_;
  std::size_t size_;
  std::vector<std::vector<double>> levels_;  // levels_[t]: size_ * k_ entries
};

}  // namespace recon
