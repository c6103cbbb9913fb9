#include "recon/gw_exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "recon/errors.hpp"
#include "recon/thresholds.hpp"

namespace recon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// log Pr[B(n,p) = j]; callers handle p in {0,1} themselves.
double log_binom_pmf(long long n, double p, long long j) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(static_cast<double>(n - j) + 1.0) +
         static_cast<double>(j) * std::log(p) +
         static_cast<double>(n - j) * std::log1p(-p);
}

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

std::vector<std::uint64_t> sample_level_sizes(const OffspringDistribution& dist,
                                              int h, Rng& rng) {
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  std::vector<std::uint64_t> z(static_cast<std::size_t>(h) + 1, 0);
  z[0] = 1;
  for (int t = 1; t <= h; ++t) {
    if (z[t - 1] == 0) break;  // extinct: later levels stay empty
    z[t] = dist.sample_sum(z[t - 1], rng);
  }
  return z;
}

std::vector<double> survival_probabilities(const OffspringDistribution& dist,
                                           int h) {
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  std::vector<double> s(static_cast<std::size_t>(h) + 1, 1.0);
  for (int t = 1; t <= h; ++t) {
    s[t] = clamp01(1.0 - dist.generating_function(1.0 - s[t - 1]));
  }
  return s;
}

std::vector<double> coupon_cover_probabilities(int colours, int max_draws) {
  if (colours < 1) throw ParameterViolation("coupon cover needs >= 1 colour");
  if (max_draws < 0) throw ParameterViolation("max_draws must be nonnegative");
  const double m = static_cast<double>(colours);
  // q[r] = Pr[r distinct colours seen so far]; every update is a convex
  // combination of nonnegative terms, so no cancellation at any size.
  std::vector<double> q(static_cast<std::size_t>(colours) + 1, 0.0);
  q[0] = 1.0;
  std::vector<double> cov(static_cast<std::size_t>(max_draws) + 1, 0.0);
  for (int j = 1; j <= max_draws; ++j) {
    for (int r = std::min(colours, j); r >= 1; --r) {
      q[r] = q[r] * (static_cast<double>(r) / m) +
             q[r - 1] * (static_cast<double>(colours - r + 1) / m);
    }
    q[0] = 0.0;
    cov[j] = q[colours];
  }
  return cov;
}

std::vector<double> frozen_probabilities(const OffspringDistribution& dist,
                                         int k, int h) {
  if (k < 2 || k > 255) throw ParameterViolation("colour count must be in [2,255]");
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  const long long n_max = dist.support_max();
  const int need = k - 1;  // non-root colours a frozen boundary must cover
  const std::vector<double> cov =
      coupon_cover_probabilities(need, static_cast<int>(std::max<long long>(n_max, 1)));
  // Past j_star the cover probability is 1 up to 1e-15, so the remaining
  // binomial mass can be absorbed as a plain tail.
  long long j_star = n_max + 1;
  for (long long j = need; j <= n_max; ++j) {
    if (1.0 - cov[static_cast<std::size_t>(j)] < 1e-15) {
      j_star = j;
      break;
    }
  }

  std::vector<double> p(static_cast<std::size_t>(h) + 1, 0.0);
  p[0] = 1.0;
  for (int t = 1; t <= h; ++t) {
    const double prev = p[t - 1];
    if (prev == 0.0) break;  // absorbing: all deeper levels stay zero
    KahanSum acc;
    for (long long n = need; n <= n_max; ++n) {
      const double w = dist.pmf(n);
      if (w == 0.0) continue;
      double inner;
      if (prev == 1.0) {
        inner = cov[static_cast<std::size_t>(n)];
      } else {
        inner = 0.0;
        const long long j_hi = std::min(n, j_star - 1);
        const double centre = static_cast<double>(n) * prev;
        const double spread =
            std::sqrt(std::max(centre * (1.0 - prev), 1.0));
        for (long long j = need; j <= j_hi; ++j) {
          const double term = std::exp(log_binom_pmf(n, prev, j)) *
                              cov[static_cast<std::size_t>(j)];
          inner += term;
          if (static_cast<double>(j) > centre + 10.0 * spread + 20.0 &&
              term < inner * 1e-22) {
            break;
          }
        }
        if (j_star <= n) inner += binomial_tail_geq(n, prev, j_star);
      }
      acc.add(w * inner);
    }
    p[t] = clamp01(acc.sum);
  }
  return p;
}

std::vector<double> freezable_probabilities(const OffspringDistribution& dist,
                                            double delta_minus, double delta,
                                            int h) {
  if (!(delta_minus > 0.0)) {
    throw ParameterViolation("lower degree threshold must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterViolation("exponent must lie in (0,1)");
  }
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  const long long dm = threshold_geq(delta_minus);
  const long long m_req =
      threshold_geq(delta_minus - std::pow(delta_minus, delta));
  const long long n_max = dist.support_max();

  // Boundary nodes carry flag 0, so f[0] = 0 and f[1] only needs the degree.
  std::vector<double> f(static_cast<std::size_t>(h) + 1, 0.0);
  if (h >= 1) f[1] = dist.tail(dm, TailSide::Upper);
  for (int t = 2; t <= h; ++t) {
    KahanSum acc;
    for (long long n = dm; n <= n_max; ++n) {
      const double w = dist.pmf(n);
      if (w == 0.0) continue;
      acc.add(w * binomial_tail_geq(n, f[t - 1], m_req));
    }
    f[t] = clamp01(acc.sum);
  }
  return f;
}

namespace {

// n * log(v) with the convention that an empty factor contributes nothing,
// so v = 0 never produces 0 * (-inf).
double log_pow(long long n, double v) {
  return n == 0 ? 0.0 : static_cast<double>(n) * std::log(v);
}

// exp(lbase) * expm1(arg) for arg >= 0, evaluated so that an underflowing
// base times an overflowing growth factor never turns into 0 * inf: once
// either factor leaves the comfortable range the whole product moves to log
// space, where log(expm1(arg)) == arg to double precision for arg > 36.
double scaled_expm1(double lbase, double arg) {
  if (arg == 0.0) return 0.0;
  if (arg < 36.0 && lbase > -700.0) return std::exp(lbase) * std::expm1(arg);
  const double log_growth = arg > 36.0 ? arg : std::log(std::expm1(arg));
  return std::exp(lbase + log_growth);
}

// Sum over j in [j_from, n] of C(n,j) a^j b^(n-j), each term evaluated in
// log space; terms decay fast once past the mode, so break on negligible.
double binom_sum_from(long long n, double a, double b, long long j_from) {
  double total = 0.0;
  double prev = kInf;
  for (long long j = std::max<long long>(j_from, 0); j <= n; ++j) {
    const double lc = std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(j) + 1.0) -
                      std::lgamma(static_cast<double>(n - j) + 1.0);
    const double term = std::exp(lc + log_pow(j, a) + log_pow(n - j, b));
    total += term;
    if (term == 0.0 || (term <= prev && term < total * 1e-22)) break;
    prev = term;
  }
  return total;
}

// C(n,j) * (x^j y^(n-j) - a^j b^(n-j)) where x = a + da, y = b + db with
// da, db >= 0, computed through expm1 on the log ratio so the result keeps
// full relative precision even when the increments are 1e-15 of the base.
double binom_term_diff(long long n, double a, double b, double da, double db,
                       long long j) {
  const double lc = std::lgamma(static_cast<double>(n) + 1.0) -
                    std::lgamma(static_cast<double>(j) + 1.0) -
                    std::lgamma(static_cast<double>(n - j) + 1.0);
  if ((j > 0 && a == 0.0) || (j < n && b == 0.0)) {
    // The subtracted product is exactly zero.
    return std::exp(lc + log_pow(j, a + da) + log_pow(n - j, b + db));
  }
  const double arg =
      (j > 0 ? static_cast<double>(j) * std::log1p(da / a) : 0.0) +
      (j < n ? static_cast<double>(n - j) * std::log1p(db / b) : 0.0);
  return scaled_expm1(lc + log_pow(j, a) + log_pow(n - j, b), arg);
}

// Sum of binom_term_diff over j in [j_from, n]; terms decay fast past the
// mode, so break once they stop mattering.
double binom_sum_diff_from(long long n, double a, double b, double da,
                           double db, long long j_from) {
  if (da == 0.0 && db == 0.0) return 0.0;
  double total = 0.0;
  double prev = kInf;
  for (long long j = std::max<long long>(j_from, 0); j <= n; ++j) {
    const double term = binom_term_diff(n, a, b, da, db, j);
    total += term;
    if (term == 0.0 || (term <= prev && term < total * 1e-22)) break;
    prev = term;
  }
  return total;
}

// u^n - v^n for u = v + inc, inc >= 0, at full relative precision.
double pow_diff(long long n, double v, double inc) {
  if (inc == 0.0) return 0.0;
  if (v == 0.0) return std::exp(log_pow(n, inc));
  return scaled_expm1(log_pow(n, v),
                      static_cast<double>(n) * std::log1p(inc / v));
}

}  // namespace

MembershipSplit a_membership_split(const OffspringDistribution& dist, int h,
                                   double zeta, double delta_plus,
                                   double delta) {
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw ParameterViolation("zeta must lie in (0,1)");
  }
  if (!(delta_plus > 0.0)) {
    throw ParameterViolation("upper degree threshold must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterViolation("exponent must lie in (0,1)");
  }
  const long long deg_cap = static_cast<long long>(std::floor(delta_plus));
  const long long j_allow =
      static_cast<long long>(std::floor(std::pow(delta_plus, delta)));
  const long long n_max = dist.support_max();

  // Joint law of (root mixing flag, minimal mixing count over boundary
  // paths) for a subtree of target height t.  Extinct subtrees keep only
  // the flag: they have no boundary paths to constrain.
  //   ext[m]     = Pr[subtree extinct, root flag m]
  //   cnt[c][m]  = Pr[subtree reaches depth t, root flag m, min count c]
  //
  // Numerics: the interesting failure masses sit many orders of magnitude
  // below 1, and any absolute error in the state is amplified by roughly
  // the offspring mean per level.  Both per-flag buckets are therefore
  // accumulated from positive terms only (differences go through expm1,
  // never through subtraction of near-equal powers), and the state is
  // renormalized to total mass one after every level.
  double ext[2] = {0.0, 0.0};
  std::vector<std::array<double, 2>> cnt(static_cast<std::size_t>(h) + 2,
                                         {0.0, 0.0});
  cnt[1][1] = 1.0;  // height-0 subtree: the node itself, childless so mixing

  for (int t = 1; t <= h; ++t) {
    // Children have target height t-1, so their counts lie in [0, t].
    const int c_prev_max = t;
    // us[y][m] = Pr[a child has flag m and (is extinct or count >= y)].
    std::vector<std::array<double, 2>> us(
        static_cast<std::size_t>(c_prev_max) + 2, {ext[0], ext[1]});
    for (int y = c_prev_max; y >= 0; --y) {
      us[y][0] = us[y + 1][0] + cnt[y][0];
      us[y][1] = us[y + 1][1] + cnt[y][1];
    }

    double next_ext[2] = {0.0, 0.0};
    std::vector<std::array<double, 2>> next_cnt(
        static_cast<std::size_t>(h) + 2, {0.0, 0.0});
    auto add = [](double& slot, double v) {
      if (v > 0.0) slot += v;  // drop cancellation dust
    };

    const double e_all = ext[0] + ext[1];
    for (long long n = 0; n <= n_max; ++n) {
      const double w = dist.pmf(n);
      if (w < 1e-300) continue;
      if (n == 0) {
        next_ext[1] += w;  // childless roots mix by definition
        continue;
      }
      const bool deg_ok = n <= deg_cap;
      if (deg_ok) {
        // All children extinct, split by whether more than j_allow of them
        // carry flag 0 (which costs the root its mixing flag).
        double ext_ok = 0.0;
        double comb = 1.0;
        for (long long j = 0; j <= std::min(j_allow, n); ++j) {
          ext_ok += comb * std::pow(ext[0], static_cast<double>(j)) *
                    std::pow(ext[1], static_cast<double>(n - j));
          comb *= static_cast<double>(n - j) / static_cast<double>(j + 1);
        }
        add(next_ext[1], w * ext_ok);
        add(next_ext[0], w * binom_sum_from(n, ext[0], ext[1], j_allow + 1));
      } else {
        add(next_ext[0], w * std::exp(log_pow(n, e_all)));
      }
      // Peel the law of the minimal child count y.  The slice with minimal
      // count exactly y has mass u_y^n - u_{y+1}^n; within it the root is
      // non-mixing when more than j_allow children carry flag 0, a tail
      // accumulated directly so the dominant mixing mass never cancels.
      for (int y = 0; y <= t; ++y) {
        const double da = cnt[y][0], db = cnt[y][1];
        if (da == 0.0 && db == 0.0) continue;
        const double u1 = us[y + 1][0] + us[y + 1][1];
        const double slice = pow_diff(n, u1, da + db);
        if (deg_ok) {
          double bad = binom_sum_diff_from(n, us[y + 1][0], us[y + 1][1], da,
                                           db, j_allow + 1);
          double mix = slice - bad;
          if (bad > 0.5 * slice) {
            // The non-mixing tail dominates; evaluate the few mixing terms
            // directly so the minority bucket keeps relative precision too.
            mix = 0.0;
            for (long long j = 0; j <= std::min(j_allow, n); ++j) {
              mix += binom_term_diff(n, us[y + 1][0], us[y + 1][1], da, db, j);
            }
            bad = slice - mix;
          }
          add(next_cnt[y + 1][1], w * mix);
          add(next_cnt[y][0], w * bad);
        } else {
          add(next_cnt[y][0], w * slice);
        }
      }
    }

    // Project back onto the simplex: the buckets partition the sample
    // space, so their exact total is the pmf mass, and dividing it out
    // stops rounding defects from compounding by mean^h.
    double total = next_ext[0] + next_ext[1];
    for (const auto& pair : next_cnt) total += pair[0] + pair[1];
    if (total <= 0.0) throw ValidationError("membership recursion lost all mass");
    ext[0] = next_ext[0] / total;
    ext[1] = next_ext[1] / total;
    for (auto& pair : next_cnt) {
      pair[0] /= total;
      pair[1] /= total;
    }
    cnt.swap(next_cnt);
  }

  // Read off both sides of the split from their own buckets: the failure
  // mass can sit 40 orders of magnitude below 1, so it must never be
  // produced as 1 minus the success mass.
  const long long need = threshold_geq((1.0 - zeta) * static_cast<double>(h));
  MembershipSplit split;
  split.in_set = ext[0] + ext[1];
  split.miss = 0.0;
  for (std::size_t c = 0; c < cnt.size(); ++c) {
    if (static_cast<long long>(c) >= need) {
      split.in_set += cnt[c][0] + cnt[c][1];
    } else {
      split.miss += cnt[c][0] + cnt[c][1];
    }
  }
  split.in_set = clamp01(split.in_set);
  split.miss = clamp01(split.miss);
  return split;
}

namespace {

// Relabels a canonical (root colour 0) vector for the given root colour:
// root_colour receives the canonical colour 0, and the remaining colours
// receive the canonical colours 1..k-1 in a fresh uniform order.  The exact
// law is exchangeable in the non-root colours, so the result is a draw from
// the law for root_colour; randomizing the order keeps the finite pool's
// realization noise from pointing the same way in every draw.
void relabel_canonical(const double* vec, int k, int root_colour, Rng& rng,
                       double* out, std::uint8_t* scratch) {
  for (int i = 0; i < k - 1; ++i) {
    scratch[i] = static_cast<std::uint8_t>(i + 1);
  }
  for (int i = k - 2; i > 0; --i) {
    const auto j =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(scratch[i], scratch[j]);
  }
  out[root_colour] = vec[0];
  int next = 0;
  for (int c = 0; c < k; ++c) {
    if (c == root_colour) continue;
    out[c] = vec[scratch[next++]];
  }
}

}  // namespace

MarginalPool::MarginalPool(const OffspringDistribution& dist, int k,
                           int height, std::size_t size, Rng& rng)
    : k_(k), height_(height), size_(size) {
  if (k < 2 || k > 255) throw ParameterViolation("colour count must be in [2,255]");
  if (height < 0) throw ParameterViolation("height must be nonnegative");
  if (size == 0) throw ParameterViolation("pool size must be positive");
  levels_.resize(static_cast<std::size_t>(height) + 1);
  levels_[0].assign(size_ * static_cast<std::size_t>(k_), 0.0);
  for (std::size_t i = 0; i < size_; ++i) {
    levels_[0][i * static_cast<std::size_t>(k_)] = 1.0;  // boundary pins colour 0
  }

  std::vector<double> logacc(static_cast<std::size_t>(k_));
  std::vector<double> weight(static_cast<std::size_t>(k_));
  std::vector<double> child_vec(static_cast<std::size_t>(k_));
  std::vector<std::uint8_t> shuffle(static_cast<std::size_t>(k_));
  // Scratch permutation for drawing a node's children without replacement
  // (partial Fisher-Yates; the deck is never reset, which keeps every draw
  // uniform over the pool).  The exact recursion combines independent
  // subtrees, so feeding the same empirical message twice into one product
  // is pure finite-pool distortion.
  std::vector<std::size_t> deck(size_);
  for (std::size_t i = 0; i < size_; ++i) deck[i] = i;
  for (int t = 1; t <= height_; ++t) {
    const std::vector<double>& prev = levels_[t - 1];
    std::vector<double>& cur = levels_[t];
    cur.assign(size_ * static_cast<std::size_t>(k_), 0.0);
    for (std::size_t i = 0; i < size_; ++i) {
      double* out = cur.data() + i * static_cast<std::size_t>(k_);
      bool stored = false;
      // Recombining vectors from independent trees could in principle
      // block every colour at once, which the exact recursion never does.
      // Broadcast consistency rules it out here too (every stored vector
      // keeps positive mass on its own root colour), so the retry loop is
      // purely defensive.
      for (int attempt = 0; attempt < 64 && !stored; ++attempt) {
        const long long d = dist.sample(rng);
        if (d == 0) {
          for (int c = 0; c < k_; ++c) out[c] = 1.0 / static_cast<double>(k_);
          stored = true;
          break;
        }
        std::fill(logacc.begin(), logacc.end(), 0.0);
        const bool distinct = d < static_cast<long long>(size_);
        for (long long child = 0; child < d; ++child) {
          std::size_t entry;
          if (distinct) {
            const auto slot = static_cast<std::size_t>(child);
            const std::size_t other =
                slot + static_cast<std::size_t>(rng.below(size_ - slot));
            std::swap(deck[slot], deck[other]);
            entry = deck[slot];
          } else {
            // Degenerate pools smaller than the offspring count fall back
            // to replacement draws.
            entry = static_cast<std::size_t>(rng.below(size_));
          }
          const int cv = static_cast<int>(rng.colour_other_than(
              static_cast<std::uint32_t>(k_), 0));
          relabel_canonical(prev.data() + entry * static_cast<std::size_t>(k_),
                            k_, cv, rng, child_vec.data(), shuffle.data());
          for (int c = 0; c < k_; ++c) {
            logacc[c] += std::log1p(-child_vec[c]);
          }
        }
        double top = -kInf;
        for (int c = 0; c < k_; ++c) top = std::max(top, logacc[c]);
        if (top == -kInf) continue;  // fully blocked: resample the node
        double norm = 0.0;
        for (int c = 0; c < k_; ++c) {
          weight[c] = std::exp(logacc[c] - top);
          norm += weight[c];
        }
        for (int c = 0; c < k_; ++c) out[c] = weight[c] / norm;
        stored = true;
      }
      if (!stored) {
        throw ResourceLimit(
            "marginal pool: node rejected 64 resampling attempts");
      }
    }
  }
}

double MarginalPool::prob(int level, std::size_t i, int root_colour,
                          int c) const {
  if (level < 0 || level > height_) {
    throw ParameterViolation("pool level out of range");
  }
  if (i >= size_) throw ParameterViolation("pool index out of range");
  if (root_colour < 0 || root_colour >= k_ || c < 0 || c >= k_) {
    throw ParameterViolation("colour out of range");
  }
  const int src = (c == root_colour) ? 0 : (c == 0 ? root_colour : c);
  return levels_[static_cast<std::size_t>(level)]
                [i * static_cast<std::size_t>(k_) +
                 static_cast<std::size_t>(src)];
}

void MarginalPool::draw_relabelled(int level, std::size_t i, int root_colour,
                                   Rng& rng, double* out) const {
  if (level < 0 || level > height_) {
    throw ParameterViolation("pool level out of range");
  }
  if (i >= size_) throw ParameterViolation("pool index out of range");
  if (root_colour < 0 || root_colour >= k_) {
    throw ParameterViolation("colour out of range");
  }
  std::uint8_t scratch[255];
  relabel_canonical(levels_[static_cast<std::size_t>(level)].data() +
                        i * static_cast<std::size_t>(k_),
                    k_, root_colour, rng, out, scratch);
}

}  // namespace recon
