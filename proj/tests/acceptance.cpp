// Acceptance checks for the release gate.  Each criterion prints exactly one
// "CRITERION N: PASS|FAIL" line on stdout; the reasons for failing checks go
// to stderr.  Exit code 0 iff every requested criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "recon/colouring.hpp"
#include "recon/distribution.hpp"
#include "recon/errors.hpp"
#include "recon/estimators.hpp"
#include "recon/gw_exact.hpp"
#include "recon/oracle.hpp"
#include "recon/rng.hpp"
#include "recon/thresholds.hpp"
#include "recon/tree.hpp"

namespace fs = std::filesystem;
using namespace recon;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class Checker {
 public:
  explicit Checker(int criterion) : criterion_(criterion) {}

  void expect(bool condition, const std::string& detail) {
    if (!condition) {
      ok_ = false;
      std::fprintf(stderr, "criterion %d check failed: %s\n", criterion_,
                   detail.c_str());
    }
  }

  bool finish() const {
    std::printf("CRITERION %d: %s\n", criterion_, ok_ ? "PASS" : "FAIL");
    std::fflush(stdout);
    return ok_;
  }

 private:
  int criterion_;
  bool ok_ = true;
};

// Shared instance set for the oracle criteria: every parent array on up to 6
// nodes (a superset of every rooted shape at those sizes) plus 500 random
// parent arrays on 7-9 nodes.
std::vector<Tree> oracle_instance_set() {
  std::vector<Tree> trees;
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::uint32_t> parents(static_cast<std::size_t>(n), 0);
    while (true) {
      trees.push_back(tree_from_parents(parents));
      int pos = n - 1;
      while (pos >= 1) {
        if (parents[static_cast<std::size_t>(pos)] + 1 <
            static_cast<std::uint32_t>(pos)) {
          ++parents[static_cast<std::size_t>(pos)];
          break;
        }
        parents[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 1) break;
    }
  }
  Rng rng(0xACE0);
  for (int s = 0; s < 500; ++s) {
    const int n = 7 + static_cast<int>(rng.below(3));
    std::vector<std::uint32_t> parents(static_cast<std::size_t>(n), 0);
    for (int i = 1; i < n; ++i) {
      parents[static_cast<std::size_t>(i)] =
          static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(i)));
    }
    trees.push_back(tree_from_parents(parents));
  }
  return trees;
}

// Criterion 1: on every instance, dynamic-programming root marginals must
// match enumeration within 1e-10 and the allowed-set at the root must equal
// the marginal support exactly, over 20 broadcast boundaries per (tree, k).
bool criterion_1() {
  Checker check(1);
  const std::vector<Tree> trees = oracle_instance_set();
  Rng rng(0xACE1);
  long long marginal_breaks = 0;
  long long support_breaks = 0;
  double worst = 0.0;
  for (const Tree& tree : trees) {
    for (const int k : {3, 4}) {
      for (int b = 0; b < 20; ++b) {
        const int root_colour = static_cast<int>(rng.below(k));
        const Colouring col = broadcast(tree, k, root_colour, rng);
        const Boundary boundary = boundary_of(tree, col);
        const Marginal got = root_marginal(tree, boundary);
        const Marginal want = exact_root_marginal(tree, boundary);
        double err = 0.0;
        std::uint64_t support = 0;
        for (int c = 0; c < k; ++c) {
          err = std::max(err, std::abs(got.probs[static_cast<std::size_t>(c)] -
                                       want.probs[static_cast<std::size_t>(c)]));
          if (want.probs[static_cast<std::size_t>(c)] > 0.0) {
            support |= std::uint64_t{1} << c;
          }
        }
        worst = std::max(worst, err);
        if (err > 1e-10) ++marginal_breaks;
        if (allowed_sets(tree, boundary).mask[0] != support) ++support_breaks;
      }
    }
  }
  check.expect(marginal_breaks == 0,
               std::to_string(marginal_breaks) +
                   " marginals off by more than 1e-10 (worst " + num(worst) +
                   ")");
  check.expect(support_breaks == 0,
               std::to_string(support_breaks) +
                   " root allowed-sets differ from the marginal support");
  std::fprintf(stderr,
               "criterion 1: %zu trees, worst marginal gap %s\n",
               trees.size(), num(worst).c_str());
  return check.finish();
}

// Criterion 2: exact rational moments on the same instances satisfy
// E_cond[Y] = k E[Y^2] exactly and E|Y| <= sqrt(E[Y^2]).
bool criterion_2() {
  Checker check(2);
  const std::vector<Tree> trees = oracle_instance_set();
  long long identity_breaks = 0;
  long long cauchy_breaks = 0;
  for (const Tree& tree : trees) {
    for (const int k : {3, 4}) {
      const MagnetizationMoments m = exact_magnetization_moments(tree, k, 0);
      if (!(m.cond_mean == Rational(k) * m.square_mean)) ++identity_breaks;
      if (!(m.abs_mean * m.abs_mean <= m.square_mean)) ++cauchy_breaks;
    }
  }
  check.expect(identity_breaks == 0,
               std::to_string(identity_breaks) +
                   " instances break the conditional-mean identity");
  check.expect(cauchy_breaks == 0,
               std::to_string(cauchy_breaks) +
                   " instances break the Cauchy-Schwarz inequality");
  return check.finish();
}

// Criterion 3: coupled-broadcast marginals.  Star with 30 children at k=10:
// per-child disagreement rate within 3 sigma of 1/k.  6-ary tree at k=4,
// h=4: mean boundary Hamming distance within 3 sigma of (6/4)^4.
bool criterion_3() {
  Checker check(3);
  {
    const Tree star = make_star(30);
    const int k = 10;
    Rng rng(0xACE3);
    const long long runs = 100000;
    long long disagreements = 0;
    for (long long r = 0; r < runs; ++r) {
      const auto [a, b] = broadcast_coupled(star, k, 0, 1, rng);
      for (std::uint32_t u = 1; u <= 30; ++u) {
        disagreements += a.colour[u] != b.colour[u];
      }
    }
    const double n = static_cast<double>(runs) * 30.0;
    const double rate = static_cast<double>(disagreements) / n;
    const double se = std::sqrt(rate * (1.0 - rate) / n);
    const double target = 1.0 / static_cast<double>(k);
    check.expect(std::abs(rate - target) <= 3.0 * se,
                 "star child disagreement rate " + num(rate) + " vs " +
                     num(target) + " (gap " +
                     num(std::abs(rate - target) / se) + " sigma)");
  }
  {
    Rng rng(0xACE4);
    const OffspringDistribution dist = OffspringDistribution::deterministic(6);
    const Tree tree = sample_tree(dist, 4, rng);
    const long long runs = 10000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long long r = 0; r < runs; ++r) {
      const auto [a, b] = broadcast_coupled(tree, 4, 0, 1, rng);
      const double h = static_cast<double>(boundary_hamming(tree, a, b));
      sum += h;
      sum_sq += h * h;
    }
    const double mean = sum / static_cast<double>(runs);
    const double var =
        (sum_sq - sum * mean) / static_cast<double>(runs - 1);
    const double se = std::sqrt(var / static_cast<double>(runs));
    const double target = std::pow(6.0 / 4.0, 4);  // 5.0625
    check.expect(std::abs(mean - target) <= 3.0 * se,
                 "mean boundary Hamming distance " + num(mean) + " vs " +
                     num(target) + " (gap " +
                     num(std::abs(mean - target) / se) + " sigma)");
  }
  return check.finish();
}

double recompute_plus_eq2(const OffspringDistribution& dist,
                          const ThresholdPlusReport& r) {
  const long long D = r.delta_plus;
  const double cut = std::pow(static_cast<double>(D), r.delta);
  const long long m = std::min(threshold_geq(cut), D + 1);
  return r.q - dist.tail(D + 1, TailSide::Upper) -
         binomial_tail_geq(D, r.q, m);
}

double recompute_plus_eq3_left(const OffspringDistribution& dist,
                               const ThresholdPlusReport& r) {
  return std::pow(dist.mean(), -2.0 * r.beta) -
         dist.size_biased_upper_tail(r.delta_plus);
}

double recompute_plus_eq3_right(const OffspringDistribution& dist,
                                const ThresholdPlusReport& r) {
  const long long D = r.delta_plus;
  const double cut = std::pow(static_cast<double>(D), r.delta);
  const long long m = std::min(threshold_gt(cut), D + 1);
  return std::pow(dist.mean(), -2.0 * r.beta) -
         binomial_tail_geq(D, r.q, m);
}

double recompute_minus_eq4(const OffspringDistribution& dist,
                           const ThresholdMinusReport& r) {
  const long long D = r.delta_minus;
  const long long m = threshold_geq(static_cast<double>(D) -
                                    std::pow(static_cast<double>(D), r.delta));
  double rhs = dist.tail(D, TailSide::LowerStrict);
  for (long long i = D; i <= dist.support_max(); ++i) {
    const double w = dist.pmf(i);
    if (w <= 0.0) continue;
    rhs += w * (1.0 - binomial_tail_geq(i, 1.0 - r.g, std::min(m, i + 1)));
  }
  return r.g - rhs;
}

void check_slack(Checker& check, const std::string& label, double reported,
                 double recomputed) {
  check.expect(recomputed >= -1e-12,
               label + " recomputed slack is negative: " + num(recomputed));
  check.expect(std::abs(recomputed - reported) <=
                   1e-9 * std::max(1.0, std::abs(reported)),
               label + " reported slack " + num(reported) +
                   " differs from recomputation " + num(recomputed));
}

// Criterion 4: threshold calculators.  Deterministic(d) must give both
// thresholds equal to d; binomial laws with means 50 and 100 must land in
// the stated windows; every witness slack is recomputed from first
// principles.
bool criterion_4() {
  Checker check(4);
  for (const long long d : {10LL, 30LL, 100LL}) {
    const OffspringDistribution dist = OffspringDistribution::deterministic(d);
    const ThresholdPlusReport plus = compute_delta_plus(dist);
    const ThresholdMinusReport minus = compute_delta_minus(dist);
    check.expect(plus.delta_plus == d,
                 dist.label() + ": upper threshold " +
                     std::to_string(plus.delta_plus) + " != " +
                     std::to_string(d));
    check.expect(minus.delta_minus == d,
                 dist.label() + ": lower threshold " +
                     std::to_string(minus.delta_minus) + " != " +
                     std::to_string(d));
    check_slack(check, dist.label() + " eq2", plus.slack_eq2,
                recompute_plus_eq2(dist, plus));
    check_slack(check, dist.label() + " eq3 left", plus.slack_eq3_left,
                recompute_plus_eq3_left(dist, plus));
    check_slack(check, dist.label() + " eq3 right", plus.slack_eq3_right,
                recompute_plus_eq3_right(dist, plus));
    check_slack(check, dist.label() + " eq4", minus.slack_eq4,
                recompute_minus_eq4(dist, minus));
  }
  for (const long long d : {50LL, 100LL}) {
    const OffspringDistribution dist = OffspringDistribution::binomial(
        10000, static_cast<double>(d) / 10000.0);
    const ThresholdPlusReport plus = compute_delta_plus(dist);
    const ThresholdMinusReport minus = compute_delta_minus(dist);
    check.expect(plus.delta_plus >= d &&
                     2 * plus.delta_plus <= 3 * d,  // delta_plus <= 1.5 d
                 dist.label() + ": upper threshold " +
                     std::to_string(plus.delta_plus) + " outside [" +
                     std::to_string(d) + ", " + std::to_string(3 * d / 2) +
                     "]");
    check.expect(2 * minus.delta_minus >= d && minus.delta_minus <= d,
                 dist.label() + ": lower threshold " +
                     std::to_string(minus.delta_minus) + " outside [" +
                     std::to_string(d / 2) + ", " + std::to_string(d) + "]");
    check_slack(check, dist.label() + " eq2", plus.slack_eq2,
                recompute_plus_eq2(dist, plus));
    check_slack(check, dist.label() + " eq3 left", plus.slack_eq3_left,
                recompute_plus_eq3_left(dist, plus));
    check_slack(check, dist.label() + " eq3 right", plus.slack_eq3_right,
                recompute_plus_eq3_right(dist, plus));
    check_slack(check, dist.label() + " eq4", minus.slack_eq4,
                recompute_minus_eq4(dist, minus));
  }
  return check.finish();
}

// Criterion 5: structure statistics of Binomial(1000, 0.03) trees.  Mean
// boundary size at h=6 within 3 standard errors of mean^6; mixing-path
// failure rate at h=8 below mean^-0.8 plus noise; freezable-root rate at
// h=6 at least 1 - g.
bool criterion_5() {
  Checker check(5);
  const OffspringDistribution dist =
      OffspringDistribution::binomial(1000, 0.03);
  const double d = dist.mean();
  Rng rng(0xACE5);
  {
    const long long n = 10000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long long i = 0; i < n; ++i) {
      const double z =
          static_cast<double>(sample_level_sizes(dist, 6, rng)[6]);
      sum += z;
      sum_sq += z * z;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = (sum_sq - sum * mean) / static_cast<double>(n - 1);
    const double se = std::sqrt(var / static_cast<double>(n));
    const double target = std::pow(d, 6.0);
    check.expect(std::abs(mean - target) <= 3.0 * se,
                 "mean boundary size " + num(mean) + " vs " + num(target) +
                     " (3 se window " + num(3.0 * se) + ")");
  }
  {
    const ThresholdPlusReport plus = compute_delta_plus(dist);
    EstimatorOptions opts;
    opts.workers = 4;
    const RateEstimate member = a_membership_rate(
        dist, 8, 0.25, static_cast<double>(plus.delta_plus), 0.1, 10000, rng,
        opts);
    const double failure = 1.0 - member.rate;
    const double bound = std::pow(d, -0.8);
    check.expect(failure <= bound + 3.0 * member.std_error,
                 "mixing-path failure rate " + num(failure) +
                     " above bound " + num(bound));
  }
  {
    const ThresholdMinusReport minus = compute_delta_minus(dist);
    const std::vector<double> f = freezable_probabilities(
        dist, static_cast<double>(minus.delta_minus), 0.1, 6);
    const double f6 = f.back();
    const long long n = 10000;
    long long hits = 0;
    for (long long i = 0; i < n; ++i) hits += rng.unit() < f6;
    const double rate = static_cast<double>(hits) / static_cast<double>(n);
    const double se =
        std::sqrt(rate * (1.0 - rate) / static_cast<double>(n));
    check.expect(rate >= 1.0 - minus.g - 3.0 * se,
                 "freezable-root rate " + num(rate) + " below 1 - g = " +
                     num(1.0 - minus.g));
  }
  return check.finish();
}

// Criterion 6: Deterministic(30) behaviour on both sides of the colour
// threshold (~8.8).  k=6 keeps a frozen rate above the fixed-point floor at
// every height; k=12 loses the frozen root and its non-reconstruction
// statistic decays height over height.
bool criterion_6() {
  Checker check(6);
  const OffspringDistribution dist = OffspringDistribution::deterministic(30);
  EstimatorOptions opts;
  opts.workers = 4;
  Rng rng(0xACE6);
  const double floor6 = 1.0 - 1.0 / std::log2(6.0);
  for (int h = 1; h <= 8; ++h) {
    const FrozenEstimate fz = frozen_probability(dist, 6, h, 2000, 5, rng, opts);
    const double needed = std::max(0.2, floor6 - 3.0 * fz.std_error);
    check.expect(fz.frozen_rate >= needed,
                 "k=6 h=" + std::to_string(h) + " frozen rate " +
                     num(fz.frozen_rate) + " below " + num(needed));
  }
  {
    const FrozenEstimate fz =
        frozen_probability(dist, 12, 8, 2000, 5, rng, opts);
    check.expect(fz.frozen_rate < 0.01,
                 "k=12 h=8 frozen rate " + num(fz.frozen_rate) +
                     " not below 0.01");
  }
  {
    std::vector<NonreconEstimate> est;
    for (int h = 1; h <= 8; ++h) {
      est.push_back(nonrecon_estimate(dist, 12, h, 2000, rng, opts));
    }
    for (std::size_t i = 0; i + 1 < est.size(); ++i) {
      const double gap = est[i].direct - est[i + 1].direct;
      const double sigma = std::sqrt(est[i].direct_se * est[i].direct_se +
                                     est[i + 1].direct_se * est[i + 1].direct_se);
      check.expect(gap > 3.0 * sigma,
                   "k=12 statistic " + num(est[i + 1].direct) + " at h=" +
                       std::to_string(i + 2) + " not below " +
                       num(est[i].direct) + " at h=" + std::to_string(i + 1) +
                       " beyond 3 sigma");
    }
  }
  return check.finish();
}

// Criterion 7: deterministic lower-bound recursion at k=6 with the
// guaranteed freezable count 30 - 30^0.1: monotone, terminal value above
// the fixed-point floor, and the one-step map exceeds the floor.
bool criterion_7() {
  Checker check(7);
  const int k = 6;
  const double f_size = 30.0 - std::pow(30.0, 0.1);
  const std::vector<double> p = p_h_lower_sequence(k, f_size, 8);
  bool monotone = true;
  for (std::size_t i = 1; i < p.size(); ++i) {
    monotone = monotone && p[i] <= p[i - 1] + 1e-15;
  }
  check.expect(monotone, "sequence is not monotone non-increasing");
  const double floor6 = 1.0 - 1.0 / std::log2(static_cast<double>(k));
  check.expect(p[8] > floor6, "P_8 = " + num(p[8]) + " not above " +
                                  num(floor6));
  const double drive =
      f_size / static_cast<double>(k - 1) *
      (1.0 - 1.0 / std::log2(static_cast<double>(k)));
  const double mapped = std::pow(-std::expm1(-floor6 * drive), k - 1) -
                        1.0 / (static_cast<double>(k) * k);
  check.expect(mapped > floor6,
               "one-step map of the floor gives " + num(mapped) +
                   ", not above " + num(floor6));
  return check.finish();
}

// Criterion 8: the experiments behind criterion 6, run through the CLI with
// 1 and 4 workers at the same seed, must produce byte-identical CSVs.
bool criterion_8(const std::string& recon_bin, const std::string& work_dir) {
  Checker check(8);
  if (recon_bin.empty()) {
    check.expect(false, "--recon-bin is required for this criterion");
    return check.finish();
  }
  const fs::path wd(work_dir);
  std::error_code ec;
  fs::create_directories(wd, ec);

  auto run = [&](const std::string& subcommand, const std::string& extra,
                 int workers, const std::string& out) {
    const std::string cmd = "'" + recon_bin + "' " + subcommand +
                            " --dist deterministic:d=30 " + extra +
                            " --seed 42 --workers " + std::to_string(workers) +
                            " --out '" + (wd / out).string() + "' >/dev/null";
    const int rc = std::system(cmd.c_str());
    check.expect(rc == 0, "command exited nonzero: " + cmd);
  };
  auto slurp = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };

  run("frozen-sweep", "--k-list 6,12 --h-list 1..8 --n-trees 2000 --n-boundaries 5",
      1, "frozen_w1");
  run("frozen-sweep", "--k-list 6,12 --h-list 1..8 --n-trees 2000 --n-boundaries 5",
      4, "frozen_w4");
  const std::string fz1 = slurp(wd / "frozen_w1" / "frozen-sweep.csv");
  const std::string fz4 = slurp(wd / "frozen_w4" / "frozen-sweep.csv");
  check.expect(!fz1.empty(), "frozen sweep with 1 worker wrote no data");
  check.expect(fz1 == fz4,
               "frozen sweep differs between 1 and 4 workers");

  run("magnetization-sweep", "--k 12 --h-list 1..8 --n-samples 2000", 1,
      "mag_w1");
  run("magnetization-sweep", "--k 12 --h-list 1..8 --n-samples 2000", 4,
      "mag_w4");
  const std::string mg1 = slurp(wd / "mag_w1" / "magnetization-sweep.csv");
  const std::string mg4 = slurp(wd / "mag_w4" / "magnetization-sweep.csv");
  check.expect(!mg1.empty(), "magnetization sweep with 1 worker wrote no data");
  check.expect(mg1 == mg4,
               "magnetization sweep differs between 1 and 4 workers");
  return check.finish();
}

}  // namespace

int main(int argc, char** argv) {
  std::string criterion = "all";
  std::string recon_bin;
  std::string work_dir = "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const bool has_next = i + 1 < argc;
    if (arg == "--criterion" && has_next) {
      criterion = argv[++i];
    } else if (arg == "--recon-bin" && has_next) {
      recon_bin = argv[++i];
    } else if (arg == "--work-dir" && has_next) {
      work_dir = argv[++i];
    } else {
      std::fprintf(stderr,
                   "usage: acceptance [--criterion N|all] [--recon-bin PATH] "
                   "[--work-dir PATH]\n");
      return 2;
    }
  }

  bool all_ok = true;
  bool matched = false;
  for (int n = 1; n <= 8; ++n) {
    if (criterion != "all" && criterion != std::to_string(n)) continue;
    matched = true;
    bool ok = false;
    switch (n) {
      case 1: ok = criterion_1(); break;
      case 2: ok = criterion_2(); break;
      case 3: ok = criterion_3(); break;
      case 4: ok = criterion_4(); break;
      case 5: ok = criterion_5(); break;
      case 6: ok = criterion_6(); break;
      case 7: ok = criterion_7(); break;
      case 8: ok = criterion_8(recon_bin, work_dir); break;
    }
    all_ok = all_ok && ok;
  }
  if (!matched) {
    std::fprintf(stderr, "unknown criterion '%s'\n", criterion.c_str());
    return 2;
  }
  return all_ok ? 0 : 1;
}
