#pragma once

#include <cstdint>
#include <vector>

#include "recon/distribution.hpp"
#include "recon/rng.hpp"
#include "recon/tree.hpp"

namespace recon {

// How an estimator realizes the tree-and-boundary law.
//
//   kExplicit  samples full tree arenas and boundaries node by node.
//   kExactLaw  replaces arenas with the exact generation chains where those
//              exist (survival, frozen and membership rates), so mean-30
//              trees of height 8 stay affordable.  Marginal-based statistics
//              have no exact chain; they sample and colour the top levels of
//              each instance explicitly as deep as node_budget allows and
//              seed the cut with boundary-conditioned messages from a
//              MarginalPool, which is kept shallow because deeply iterated
//              population dynamics drifts off the true law.  Standard errors
//              describe this scheme's own noise, not the residual pool bias.
//   kAuto      explicit while the expected node work fits node_budget,
//              exact law beyond it.
enum class SamplingMode { kAuto, kExplicit, kExactLaw };

struct EstimatorOptions {
  int workers = 1;
  SamplingMode mode = SamplingMode::kAuto;
  double node_budget = 2e9;       // kAuto switch point, in node-colour ops
  std::size_t pool_size = 20000;  // population per level in exact-law mode
  std::uint64_t node_cap = 0;     // per-tree arena cap; 0 = default_node_cap()
};

// Every estimator below follows one determinism contract: a single value is
// drawn from the caller's generator as master seed, per-sample generators
// are derived from (master, sample index), and reductions run in sample
// order.  Results are therefore bit-identical for any worker count.

// Moments of the root magnetization Y = mu(c) - 1/k, where mu is the exact
// root marginal given a broadcast boundary.  mean_abs_y and mean_y_sq use
// boundaries broadcast from a uniform root colour; cond_mean_y uses
// boundaries broadcast from colour c itself.
struct MagnetizationStats {
  int k = 0;
  int c = 0;
  long long n_samples = 0;
  double mean_abs_y = 0.0;
  double mean_abs_y_se = 0.0;
  double mean_y_sq = 0.0;
  double mean_y_sq_se = 0.0;
  double cond_mean_y = 0.0;
  double cond_mean_y_se = 0.0;
};

MagnetizationStats magnetization_stats(const OffspringDistribution& dist,
                                       int k, int h, int c, long long n,
                                       Rng& rng,
                                       const EstimatorOptions& opts = {});

// Monte Carlo non-reconstruction statistic.  `direct` averages the
// per-sample value (k/2) sum_c |mu(c) - 1/k| under uniform-root broadcast;
// `second_moment_bound` is the Cauchy-Schwarz relaxation
// (k/2) sum_c sqrt(E[Y_c^2]) of the same expectation, with a conservative
// per-colour delta-method error.
struct NonreconEstimate {
  int k = 0;
  long long n_samples = 0;
  double direct = 0.0;
  double direct_se = 0.0;
  double second_moment_bound = 0.0;
  double second_moment_se = 0.0;
};

NonreconEstimate nonrecon_estimate(const OffspringDistribution& dist, int k,
                                   int h, long long n, Rng& rng,
                                   const EstimatorOptions& opts = {});

// Frozen-root frequency under broadcast boundaries.  frozen_rate conditions
// on the tree reaching depth h; frozen_rate_uncond counts extinct trees as
// unfrozen.  std_error is cluster-robust: it is computed over per-tree
// frozen fractions, so repeated boundaries of one tree never masquerade as
// independent samples.
struct FrozenEstimate {
  long long n_trees = 0;
  long long n_boundaries_per_tree = 0;
  double frozen_rate = 0.0;
  double frozen_rate_uncond = 0.0;
  double extinct_rate = 0.0;
  double std_error = 0.0;
};

FrozenEstimate frozen_probability(const OffspringDistribution& dist, int k,
                                  int h, long long n_trees,
                                  long long n_boundaries, Rng& rng,
                                  const EstimatorOptions& opts = {});

// Deterministic lower-bound recursion for the frozen probability:
//   P_0 = 1,  P_h = max(0, (1 - exp(-P_{h-1} D))^(k-1) - s)
// with D = (f_size/(k-1)) (1 - 1/log k) and s = 1/k^2.  f_size is the
// guaranteed number of freezable children and may be fractional.  The log
// base defaults to 2, matching recon_bound; natural_log switches to ln.
std::vector<double> p_h_lower_sequence(int k, double f_size, int h_max,
                                       bool natural_log = false);

// Coupled-boundary decay along the leftmost root-leaf path that reaches
// depth h.  Each experiment broadcasts one boundary from a uniform root
// colour, flips the path leaf to a uniformly different colour, and records
// at every path vertex the total-variation gap between the exact subtree
// marginals under the two boundaries.  rate[j] is the mean gap at the
// depth-j path vertex (the disagreement probability under the optimal
// per-vertex coupling); rate[h] is 1 by construction.
struct DisagreementDecay {
  long long n_samples = 0;
  std::vector<double> rate;
  std::vector<double> rate_se;
};

DisagreementDecay disagreement_decay(const Tree& tree, int k, long long n,
                                     Rng& rng,
                                     const EstimatorOptions& opts = {});

// Fraction of sampled trees on which every root-to-depth-h path carries at
// least ceil((1-zeta)h) mixing vertices (extinct trees qualify vacuously).
struct RateEstimate {
  long long n_samples = 0;
  double rate = 0.0;
  double std_error = 0.0;
};

RateEstimate a_membership_rate(const OffspringDistribution& dist, int h,
                               double zeta, double delta_plus, double delta,
                               long long n, Rng& rng,
                               const EstimatorOptions& opts = {});

}  // namespace recon
