#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "recon/errors.hpp"
#include "recon/rng.hpp"

namespace recon {

enum class DistKind { Deterministic, Binomial, Poisson, PowerLaw, Explicit };

enum class TailSide { Upper, LowerStrict };

// Offspring distribution with finite support.  Poisson and power-law kinds are
// truncated at an explicit cutoff and renormalized, so every moment and tail
// below is an exact finite sum over the stored pmf (compensated summation),
// never a closed-form approximation.
//
// Immutable after construction and safe for concurrent reads.
class OffspringDistribution {
 public:
  static OffspringDistribution deterministic(long long d);
  static OffspringDistribution binomial(long long n, double p);
  // cutoff < 0 selects the smallest N whose untruncated upper tail is < 1e-14.
  static OffspringDistribution poisson(double lambda, long long cutoff = -1);
  // pmf(i) proportional to i^-exponent on {1,...,cutoff}.  A cutoff is
  // required: polynomial tails have no sensible automatic truncation point.
  static OffspringDistribution power_law(double exponent, long long cutoff);
  static OffspringDistribution explicit_pmf(std::vector<double> probabilities);

  // Text forms: `deterministic:d=30`, `binomial:n=10000,p=0.003`,
  // `poisson:lambda=30` (optional `,cutoff=N`),
  // `powerlaw:exponent=1.2,cutoff=10000`, `explicit:@file.csv` (one
  // probability per line, index = row), or `explicit:0.5,0,0.5`.
  static OffspringDistribution parse(const std::string& spec);

  DistKind kind() const { return kind_; }
  // Largest i with pmf(i) > 0.
  long long support_max() const { return support_max_; }
  double pmf(long long i) const;
  double mean() const { return mean_; }
  // Upper: sum of pmf(j) over j >= x.  LowerStrict: over j < x.
  double tail(long long x, TailSide side) const;
  // Sum of t * pmf(t) over t > x.
  double size_biased_upper_tail(long long x) const;
  // G(z) = sum pmf(i) z^i, evaluated by Horner's rule.
  double generating_function(double z) const;
  // Canonical text form; round-trips through parse().
  const std::string& label() const { return label_; }

  // One draw from the (truncated) pmf.  O(1) via an alias table.
  long long sample(Rng& rng) const;
  // Exact-law sum of `count` independent draws without materializing them:
  // Deterministic multiplies, Binomial/Poisson use closed-form aggregation of
  // the standard samplers in bounded chunks, Explicit/PowerLaw chain a
  // multinomial split over the support.  For the Poisson kind the aggregate
  // ignores truncation (total truncated mass < 1e-14 by construction).
  unsigned long long sample_sum(unsigned long long count, Rng& rng) const;

  struct ConcentrationReport {
    bool holds;
    double worst_slack;  // min over all checks of (bound - tail)
    long long worst_x;   // where the minimum occurs
  };

 private:
  OffspringDistribution() = default;
  void finalize(std::string label);  // builds tails, mean, alias table

  DistKind kind_ = DistKind::Explicit;
  long long support_max_ = 0;
  double mean_ = 0.0;
  std::string label_;
  std::vector<double> pmf_;
  std::vector<double> suffix_;     // suffix_[i] = sum_{j >= i} pmf(j)
  std::vector<double> prefix_;     // prefix_[i] = sum_{j < i} pmf(j)
  std::vector<double> sb_suffix_;  // sb_suffix_[i] = sum_{t >= i} t*pmf(t)
  long long det_d_ = -1;
  long long bin_n_ = 0;
  double bin_p_ = 0.0;
  double poi_lambda_ = 0.0;
  std::shared_ptr<const AliasTable> alias_;
};

// Finite verification of the concentration property: checks
// upper_tail(x) <= x^-c for every integer x in [ceil((1+gamma)*mean), x_max]
// and mass below (1-gamma)*mean at most mean^-c.  Reports minimal slack
// rather than claiming anything beyond the checked range.
OffspringDistribution::ConcentrationReport check_well_concentrated(
    const OffspringDistribution& dist, double c, double gamma,
    long long x_max);

}  // namespace recon
