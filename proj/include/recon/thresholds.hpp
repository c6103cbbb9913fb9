#pragma once

#include <cmath>

#include "recon/distribution.hpp"

namespace recon {

// Witness report for the upper degree threshold: the smallest integer at or
// above the mean admitting a disagreement probability q below 3/4 that
// satisfies the defining tail inequalities.  All slacks are >= 0.
struct ThresholdPlusReport {
  long long delta_plus = 0;
  double q = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double slack_eq2 = 0.0;        // q - (upper tail + binomial term)
  double slack_eq3_left = 0.0;   // mean^-2beta - size-biased tail
  double slack_eq3_right = 0.0;  // mean^-2beta - strict binomial tail
};

// Witness report for the lower degree threshold: the largest integer at or
// below the mean whose failure-probability fixed point stays below 3/4.
struct ThresholdMinusReport {
  long long delta_minus = 0;
  double g = 0.0;
  double delta = 0.0;
  double slack_eq4 = 0.0;  // g - RHS(g) at the certified witness
};

// Integer event thresholds for real cutoffs: "B >= y" happens iff
// B >= threshold_geq(y); "B > y" happens iff B >= threshold_gt(y).
inline long long threshold_geq(double y) {
  return static_cast<long long>(std::ceil(y));
}
inline long long threshold_gt(double y) {
  return static_cast<long long>(std::floor(y)) + 1;
}

// Pr[B(n,p) >= m], by log-space summation of the smaller of the two sides of
// the mean (never 1 - tiny, so small results keep full relative precision).
double binomial_tail_geq(long long n, double p, long long m);

// Scan D upward from ceil(mean); for each D search q over a uniform grid of
// q_grid points on [0, 3/4) plus the ladder q = 2*mean^-c, c = 1..12.  The
// reported q is the smallest admissible candidate.  Throws NotFound when the
// support is exhausted.
ThresholdPlusReport compute_delta_plus(const OffspringDistribution& dist,
                                       double delta = 0.1, double beta = 4.0,
                                       int q_grid = 100);

// Scan D downward from floor(mean); for each D run the monotone fixed-point
// iteration g <- RHS(g) from g0 = mass below D (tolerance 1e-10, divergent
// once an iterate reaches 3/4, at most 1e4 steps).  The returned witness is
// nudged to the first nearby point with RHS(g) <= g so slack_eq4 >= 0.
ThresholdMinusReport compute_delta_minus(const OffspringDistribution& dist,
                                         double delta = 0.1);

// 8 k^2 (2 delta_plus)^(-0.45 delta h): non-reconstruction decay bound.
double nonrecon_bound(long long k, long long delta_plus, double delta,
                      long long h);

// (1/4)(1 - 2/log2 k); reconstruction lower bound on the frozen probability.
// The natural-log variant is exposed because the source convention is
// ambiguous; base 2 is the default everywhere in this codebase.
double recon_bound(long long k, bool natural_log = false);

// exp[-(1 - theta(1-zeta)) * beta * ln(d_xi) * h]: bound on the probability
// that a tree fails the mixing-path property at height h.
double a_set_bound(double d_xi, double beta, double zeta, double theta,
                   long long h);

// Numeric evaluation of the two-index path-counting recursion
//   Q(h,i) <= 2d*Q(h-1,i-1) + Q(h-1,i)*(2d*Pr[B(dp,q) >= dp^delta] + sb_tail)
// with Q(.,0) = 1 and Q(1,i>=1) = upper tail at delta_plus; capped at 1.
double q_recursion_bound(const OffspringDistribution& dist,
                         long long delta_plus, double q, double delta, int h,
                         int i);

// Largest gamma (bisection) with (1+alpha)d/ln d >= (1+alpha/2)rho/ln rho at
// rho = (1+gamma)d, and the mirrored lower-side version.  Used to bracket the
// thresholds of well-concentrated distributions around their mean.
double gamma_upper(double alpha, double d);
double gamma_lower(double alpha, double d);

}  // namespace recon
