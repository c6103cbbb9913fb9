#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>

#include "recon/colouring.hpp"
#include "recon/tree.hpp"

namespace recon {

// Exact rational scalar used by the enumeration ground truth.
using Rational = boost::multiprecision::cpp_rational;

// Work bound for the brute-force enumerators: the total number of proper
// colourings, k * (k-1)^(n-1), may not exceed this.
struct EnumerationLimit {
  std::uint64_t max_total_colourings = 10000000;
};

// Enumerates every proper k-colouring (mixed-radix over non-root nodes,
// each digit offset-mapped past the parent colour, so nothing is rejected)
// and cross-checks the count against the closed form k * (k-1)^(n-1).
std::uint64_t count_proper_colourings(const Tree& tree, int k,
                                      EnumerationLimit limit = {});

// Ground truth for root_marginal: enumerate all proper colourings agreeing
// with the boundary and histogram the root colour.
Marginal exact_root_marginal(const Tree& tree, const Boundary& boundary,
                             EnumerationLimit limit = {});

// Exact total-variation distance between the depth-h boundary laws of
// broadcasts started from root colours i and j.  Pattern probabilities are
// integer extension counts over (k-1)^(n-1), so the result is exact up to
// one final division.  Needs at most 16 boundary nodes and k <= 16 so
// patterns fit a 64-bit key.
double exact_leaf_tv(const Tree& tree, int k, int i, int j,
                     EnumerationLimit limit = {});

// Exact moments of Y = mu_r(c | boundary) - 1/k, the centred root weight of
// colour c given the boundary.  abs_mean and square_mean average over the
// unconditioned boundary law; cond_mean conditions the boundary on the root
// actually having colour c.  All three are exact rationals.
struct MagnetizationMoments {
  Rational abs_mean;
  Rational square_mean;
  Rational cond_mean;
};

MagnetizationMoments exact_magnetization_moments(const Tree& tree, int k,
                                                 int c,
                                                 EnumerationLimit limit = {});

}  // namespace recon
