#include "recon/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace recon {

namespace {

struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

double log_binom_pmf(long long n, double p, long long j) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(static_cast<double>(n - j) + 1.0) +
         static_cast<double>(j) * std::log(p) +
         static_cast<double>(n - j) * std::log1p(-p);
}

}  // namespace

double binomial_tail_geq(long long n, double p, long long m) {
  if (n < 0) throw ParameterViolation("binomial_tail_geq: n < 0");
  if (m < 0 || m > n + 1) {
    throw ParameterViolation("binomial_tail_geq: m outside [0, n+1]");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterViolation("binomial_tail_geq: p outside [0,1]");
  }
  if (m == 0) return 1.0;
  if (m > n) return 0.0;
  if (p == 0.0) return 0.0;  // here m >= 1
  if (p == 1.0) return 1.0;  // here m <= n
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(mean * (1.0 - p));
  Kahan acc;
  if (static_cast<double>(m) > mean) {
    // Upper side is the smaller one; terms decay away from the mean, so stop
    // once they can no longer move the sum at double precision.
    for (long long j = m; j <= n; ++j) {
      const double term = std::exp(log_binom_pmf(n, p, j));
      acc.add(term);
      if (static_cast<double>(j) > mean + 5.0 * sd &&
          term < acc.sum * 1e-22) {
        break;
      }
    }
    return std::min(acc.sum, 1.0);
  }
  for (long long j = m - 1; j >= 0; --j) {
    const double term = std::exp(log_binom_pmf(n, p, j));
    acc.add(term);
    if (static_cast<double>(j) < mean - 5.0 * sd && term < acc.sum * 1e-22) {
      break;
    }
  }
  // Complement side: safe because the result is O(1) here (m <= mean), so the
  // cancellation cannot destroy relative accuracy.
  return std::max(0.0, 1.0 - acc.sum);
}

ThresholdPlusReport compute_delta_plus(const OffspringDistribution& dist,
                                       double delta, double beta, int q_grid) {
  if (!(delta > 0.0 && delta <= 0.1)) {
    throw ParameterViolation("compute_delta_plus: delta outside (0, 1/10]");
  }
  if (!(beta >= 4.0)) {
    throw ParameterViolation("compute_delta_plus: beta must be >= 4");
  }
  if (q_grid < 100) {
    throw ParameterViolation("compute_delta_plus: q_grid must be >= 100");
  }
  const double d = dist.mean();
  const double bound = std::pow(d, -2.0 * beta);

  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(q_grid) + 12);
  for (int j = 0; j < q_grid; ++j) {
    candidates.push_back(0.75 * j / q_grid);
  }
  // The closed-form choice q = 2 d^-c sits far below any affordable grid
  // resolution; include a ladder of such points so heavy-tailed-but-
  // concentrated distributions still find their natural witness.
  for (int c = 1; c <= 12; ++c) {
    const double q = 2.0 * std::pow(d, -static_cast<double>(c));
    if (q < 0.75) candidates.push_back(q);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  const long long start = std::max<long long>(
      0, static_cast<long long>(std::ceil(d)));
  for (long long D = start; D <= dist.support_max(); ++D) {
    const double sb = dist.size_biased_upper_tail(D);
    if (sb > bound) continue;
    const double cut = std::pow(static_cast<double>(D), delta);
    const long long m_geq = threshold_geq(cut);
    const long long m_gt = threshold_gt(cut);
    const double upper = dist.tail(D + 1, TailSide::Upper);
    for (double q : candidates) {
      const double pr_geq = binomial_tail_geq(D, q, std::min(m_geq, D + 1));
      if (q < upper + pr_geq) continue;
      const double pr_gt = binomial_tail_geq(D, q, std::min(m_gt, D + 1));
      if (pr_gt > bound) continue;
      return ThresholdPlusReport{D,     q,          beta,
                                 delta, q - upper - pr_geq,
                                 bound - sb, bound - pr_gt};
    }
  }
  throw NotFound("compute_delta_plus: no threshold within the support of " +
                 dist.label());
}

namespace {

// RHS of the lower-threshold fixed-point equation at failure probability g.
double delta_minus_rhs(const OffspringDistribution& dist, long long D,
                       long long m, double g) {
  Kahan acc;
  acc.add(dist.tail(D, TailSide::LowerStrict));
  for (long long i = D; i <= dist.support_max(); ++i) {
    // Contributions beyond this point are below any tolerance in play.
    if (dist.tail(i, TailSide::Upper) < 1e-18) break;
    const double w = dist.pmf(i);
    if (w <= 0.0) continue;
    acc.add(w * (1.0 - binomial_tail_geq(i, 1.0 - g, m)));
  }
  return acc.sum;
}

}  // namespace

ThresholdMinusReport compute_delta_minus(const OffspringDistribution& dist,
                                         double delta) {
  if (!(delta > 0.0 && delta <= 0.1)) {
    throw ParameterViolation("compute_delta_minus: delta outside (0, 1/10]");
  }
  const double d = dist.mean();
  for (long long D = static_cast<long long>(std::floor(d)); D >= 1; --D) {
    const long long m =
        threshold_geq(static_cast<double>(D) -
                      std::pow(static_cast<double>(D), delta));
    double g = dist.tail(D, TailSide::LowerStrict);
    bool converged = false;
    for (int iter = 0; iter < 10000; ++iter) {
      const double rhs = delta_minus_rhs(dist, D, m, g);
      if (rhs >= 0.75) break;  // iterates are non-decreasing: divergent
      if (std::abs(rhs - g) < 1e-10) {
        g = rhs;
        converged = true;
        break;
      }
      g = rhs;
    }
    if (!converged) continue;
    // The iteration approaches the least fixed point from below, so the
    // converged value can sit a hair under it.  Certify a witness by nudging
    // upward until RHS(g) <= g holds outright.
    for (double bump = 0.0; bump <= 1.1e-6;
         bump = (bump == 0.0 ? 1e-10 : bump * 10.0)) {
      const double gw = g + bump;
      if (gw >= 0.75) break;
      const double rhs = delta_minus_rhs(dist, D, m, gw);
      if (rhs <= gw) {
        return ThresholdMinusReport{D, gw, delta, gw - rhs};
      }
    }
  }
  throw NotFound("compute_delta_minus: no threshold down to 1 for " +
                 dist.label());
}

double nonrecon_bound(long long k, long long delta_plus, double delta,
                      long long h) {
  if (k < 1 || delta_plus < 1 || !(delta > 0.0) || h < 0) {
    throw ParameterViolation("nonrecon_bound: arguments must be positive");
  }
  return 8.0 * static_cast<double>(k) * static_cast<double>(k) *
         std::pow(2.0 * static_cast<double>(delta_plus),
                  -0.45 * delta * static_cast<double>(h));
}

double recon_bound(long long k, bool natural_log) {
  if (k < 2) throw ParameterViolation("recon_bound: k must be >= 2");
  const double lg = natural_log ? std::log(static_cast<double>(k))
                                : std::log2(static_cast<double>(k));
  return 0.25 * (1.0 - 2.0 / lg);
}

double a_set_bound(double d_xi, double beta, double zeta, double theta,
                   long long h) {
  if (!((1.0 - zeta) * theta < 1.0)) {
    throw ParameterViolation("a_set_bound: requires (1-zeta)*theta < 1");
  }
  if (!(beta * (1.0 - theta) < -1.0)) {
    throw ParameterViolation("a_set_bound: requires beta*(1-theta) < -1");
  }
  if (!(d_xi > 0.0) || h < 0) {
    throw ParameterViolation("a_set_bound: d_xi must be > 0 and h >= 0");
  }
  return std::exp(-(1.0 - theta * (1.0 - zeta)) * beta * std::log(d_xi) *
                  static_cast<double>(h));
}

double q_recursion_bound(const OffspringDistribution& dist,
                         long long delta_plus, double q, double delta, int h,
                         int i) {
  if (i < 0 || i > h) {
    throw ParameterViolation("q_recursion_bound: need 0 <= i <= h");
  }
  if (delta_plus < 1 || !(delta > 0.0) || !(q >= 0.0 && q < 0.75)) {
    throw ParameterViolation("q_recursion_bound: bad parameters");
  }
  if (i == 0) return 1.0;
  const double d = dist.mean();
  const long long m_geq =
      threshold_geq(std::pow(static_cast<double>(delta_plus), delta));
  const double factor =
      2.0 * d *
          binomial_tail_geq(delta_plus, q,
                            std::min(m_geq, delta_plus + 1)) +
      dist.size_biased_upper_tail(delta_plus);
  const double base = dist.tail(delta_plus, TailSide::Upper);
  // Height-1 base row: only the root is available to be counted, so entries
  // beyond the first column are impossible events, not copies of the tail.
  std::vector<double> row(static_cast<std::size_t>(i) + 1, 0.0);
  row[0] = 1.0;
  if (i >= 1) row[1] = std::min(base, 1.0);
  // Each level: a benign root contributes its expected offspring (at most 2d)
  // without consuming a count, while a heavy/bad root consumes one count and
  // contributes the small mixed factor.  Pairing the 2d with the index that
  // stays fixed is what keeps the bound non-vacuous for i < h.
  for (int level = 2; level <= h; ++level) {
    std::vector<double> next(row.size(), 0.0);
    next[0] = 1.0;
    for (int j = 1; j <= i; ++j) {
      const double v = 2.0 * d * row[static_cast<std::size_t>(j)] +
                       row[static_cast<std::size_t>(j) - 1] * factor;
      next[static_cast<std::size_t>(j)] = std::min(v, 1.0);
    }
    row.swap(next);
  }
  return row[static_cast<std::size_t>(i)];
}

double gamma_upper(double alpha, double d) {
  if (!(alpha > 0.0) || !(d > 1.0)) {
    throw ParameterViolation("gamma_upper: need alpha > 0 and d > 1");
  }
  const double target = (1.0 + alpha) * d / std::log(d);
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double rho = (1.0 + mid) * d;
    if ((1.0 + alpha / 2.0) * rho / std::log(rho) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double gamma_lower(double alpha, double d) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(d > 1.0)) {
    throw ParameterViolation("gamma_lower: need alpha in (0,1) and d > 1");
  }
  const double target = (1.0 - alpha) * d / std::log(d);
  double lo = 0.0, hi = 0.999999;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double rho = (1.0 - mid) * d;
    if (rho <= 1.0) {
      hi = mid;
      continue;
    }
    if ((1.0 - alpha / 2.0) * rho / std::log(rho) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace recon
