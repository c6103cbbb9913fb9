#include "recon/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>
#include <vector>

#include "recon/classify.hpp"
#include "recon/colouring.hpp"
#include "recon/errors.hpp"
#include "recon/gw_exact.hpp"

namespace recon {

namespace {

// Stream purpose tags (top byte of the stream index); unique per use site so
// the pool builder and the sample loop of one call never share a stream.
constexpr std::uint64_t kTagMagnet = 0xD1;
constexpr std::uint64_t kTagMagnetPool = 0xD2;
constexpr std::uint64_t kTagNonrecon = 0xD3;
constexpr std::uint64_t kTagNonreconPool = 0xD4;
constexpr std::uint64_t kTagFrozen = 0xD5;
constexpr std::uint64_t kTagDecay = 0xD6;
constexpr std::uint64_t kTagMembership = 0xD7;

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Two-pass sample mean and standard error of the mean, both summed in index
// order so the result does not depend on how the samples were produced.
template <typename Get>
MeanSe column_mean_se(long long n, Get&& get) {
  MeanSe out;
  Kahan s;
  for (long long i = 0; i < n; ++i) s.add(get(i));
  out.mean = s.sum / static_cast<double>(n);
  if (n < 2) return out;
  Kahan d;
  for (long long i = 0; i < n; ++i) {
    const double dev = get(i) - out.mean;
    d.add(dev * dev);
  }
  out.se = std::sqrt(d.sum / (static_cast<double>(n) * static_cast<double>(n - 1)));
  return out;
}

// Runs fn(i) for every i in [0, n) across `workers` threads.  fn must only
// write to slots owned by index i; chunks are handed out dynamically, which
// is safe because results live in per-index slots, not in shared
// accumulators.  Exceptions are re-thrown on the calling thread.
template <typename Fn>
void parallel_for(long long n, int workers, Fn&& fn) {
  if (workers < 1) throw ParameterViolation("worker count must be positive");
  const int use =
      static_cast<int>(std::min<long long>(workers, std::max<long long>(n, 1)));
  if (use <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  const long long chunk =
      std::max<long long>(1, n / (static_cast<long long>(use) * 16));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(use));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(use));
  for (int w = 0; w < use; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const long long begin = next.fetch_add(chunk);
          if (begin >= n) break;
          const long long end = std::min(n, begin + chunk);
          for (long long i = begin; i < end; ++i) fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Sample indices are packed into the 32-bit entry field of the stream
// coordinate; larger runs would silently reuse streams.
void check_stream_capacity(long long n) {
  if (n > 0xFFFFFFFFll) {
    throw ParameterViolation("sample count exceeds the 2^32 stream capacity");
  }
}

double expected_nodes(const OffspringDistribution& dist, int h) {
  const double m = dist.mean();
  if (h <= 0) return 1.0;
  if (std::fabs(m - 1.0) < 1e-12) return static_cast<double>(h) + 1.0;
  return (std::pow(m, h + 1) - 1.0) / (m - 1.0);
}

bool use_exact_law(const EstimatorOptions& opts, double explicit_work) {
  switch (opts.mode) {
    case SamplingMode::kExplicit:
      return false;
    case SamplingMode::kExactLaw:
      return true;
    case SamplingMode::kAuto:
    default:
      return explicit_work > opts.node_budget;
  }
}

void check_palette(int k) {
  if (k < 2 || k > 255) {
    throw ParameterViolation("colour count must be in [2,255]");
  }
}

// Deepest explicit top j whose whole sweep (draws x nodes(top_j) x k) still
// fits the node budget.  The remaining h - j levels come from the pool, so
// the budget directly bounds how much population-dynamics depth we rely on.
int hybrid_top_depth(const OffspringDistribution& dist, int h, double draws,
                     int k, double budget) {
  int j = 0;
  while (j < h && draws * expected_nodes(dist, j + 1) *
                          static_cast<double>(k) <=
                      budget) {
    ++j;
  }
  return j;
}

// Root marginal of one hybrid instance: an explicitly sampled and coloured
// top tree whose depth-j nodes carry pool messages for their broadcast
// colour, combined upward by the same log-space message recursion the
// full-tree computation uses.
Marginal hybrid_root_marginal(const Tree& tree, const Colouring& col,
                              const MarginalPool& pool, Rng& rng) {
  const int k = pool.colours();
  const auto kk = static_cast<std::size_t>(k);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> msg(tree.node_count() * kk);
  std::vector<double> logacc(kk);
  for (int t = tree.height; t >= 0; --t) {
    const std::uint32_t begin = tree.level_begin[static_cast<std::size_t>(t)];
    const std::uint32_t end =
        tree.level_begin[static_cast<std::size_t>(t) + 1];
    for (std::uint32_t v = begin; v < end; ++v) {
      double* out = msg.data() + static_cast<std::size_t>(v) * kk;
      if (t == tree.height) {
        const auto entry = static_cast<std::size_t>(rng.below(pool.size()));
        pool.draw_relabelled(pool.height(), entry,
                             static_cast<int>(col.colour[v]), rng, out);
        continue;
      }
      if (tree.child_count[v] == 0) {
        // Extinct below v: no boundary constraint can reach this subtree.
        for (int c = 0; c < k; ++c) out[c] = 1.0 / static_cast<double>(k);
        continue;
      }
      std::fill(logacc.begin(), logacc.end(), 0.0);
      const std::uint32_t first = tree.child_begin[v];
      const std::uint32_t last = first + tree.child_count[v];
      for (std::uint32_t ch = first; ch < last; ++ch) {
        const double* m = msg.data() + static_cast<std::size_t>(ch) * kk;
        for (int c = 0; c < k; ++c) {
          logacc[static_cast<std::size_t>(c)] += std::log1p(-m[c]);
        }
      }
      double peak = neg_inf;
      for (int c = 0; c < k; ++c) {
        peak = std::max(peak, logacc[static_cast<std::size_t>(c)]);
      }
      // A node's own broadcast colour is never fully blocked: only a point
      // mass at colour c kills c, and no child of a c-coloured node carries
      // colour c.
      if (!(peak > neg_inf)) {
        throw std::logic_error("hybrid marginal: every colour blocked");
      }
      double norm = 0.0;
      for (int c = 0; c < k; ++c) {
        out[c] = std::exp(logacc[static_cast<std::size_t>(c)] - peak);
        norm += out[c];
      }
      for (int c = 0; c < k; ++c) out[c] /= norm;
    }
  }
  Marginal out;
  out.probs.assign(msg.begin(), msg.begin() + k);
  return out;
}

std::uint64_t effective_cap(const EstimatorOptions& opts) {
  return opts.node_cap != 0 ? opts.node_cap : default_node_cap();
}

}  // namespace

MagnetizationStats magnetization_stats(const OffspringDistribution& dist,
                                       int k, int h, int c, long long n,
                                       Rng& rng,
                                       const EstimatorOptions& opts) {
  check_palette(k);
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  if (c < 0 || c >= k) throw ParameterViolation("colour out of range");
  if (n < 1) throw ParameterViolation("sample count must be positive");
  check_stream_capacity(n);

  const std::uint64_t master = rng();
  const std::uint64_t cap = effective_cap(opts);
  const double inv_k = 1.0 / static_cast<double>(k);
  // Per sample: |Y|, Y^2 under uniform-root broadcast, Y under colour-c
  // broadcast.
  std::vector<double> rows(3 * static_cast<std::size_t>(n));

  const double work = 2.0 * static_cast<double>(n) * expected_nodes(dist, h) *
                      static_cast<double>(k);
  if (use_exact_law(opts, work)) {
    const int top = hybrid_top_depth(dist, h, 2.0 * static_cast<double>(n), k,
                                     opts.node_budget);
    Rng pool_rng = derive_stream(
        master, stream_index(kTagMagnetPool, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(h), 0));
    const MarginalPool pool(dist, k, h - top, opts.pool_size, pool_rng);
    parallel_for(n, opts.workers, [&](long long i) {
      Rng r = derive_stream(
          master, stream_index(kTagMagnet, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(h),
                               static_cast<std::uint64_t>(i)));
      const Tree tree = sample_tree(dist, top, r, cap);
      const int u = static_cast<int>(r.below(static_cast<std::uint64_t>(k)));
      const Marginal unc =
          hybrid_root_marginal(tree, broadcast(tree, k, u, r), pool, r);
      const double y = unc.probs[static_cast<std::size_t>(c)] - inv_k;
      const Marginal cond =
          hybrid_root_marginal(tree, broadcast(tree, k, c, r), pool, r);
      rows[3 * static_cast<std::size_t>(i)] = std::fabs(y);
      rows[3 * static_cast<std::size_t>(i) + 1] = y * y;
      rows[3 * static_cast<std::size_t>(i) + 2] =
          cond.probs[static_cast<std::size_t>(c)] - inv_k;
    });
  } else {
    parallel_for(n, opts.workers, [&](long long i) {
      Rng r = derive_stream(
          master, stream_index(kTagMagnet, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(h),
                               static_cast<std::uint64_t>(i)));
      const Tree tree = sample_tree(dist, h, r, cap);
      const int u = static_cast<int>(r.below(static_cast<std::uint64_t>(k)));
      const Marginal unc =
          root_marginal(tree, boundary_of(tree, broadcast(tree, k, u, r)));
      const double y = unc.probs[static_cast<std::size_t>(c)] - inv_k;
      const Marginal cond =
          root_marginal(tree, boundary_of(tree, broadcast(tree, k, c, r)));
      rows[3 * static_cast<std::size_t>(i)] = std::fabs(y);
      rows[3 * static_cast<std::size_t>(i) + 1] = y * y;
      rows[3 * static_cast<std::size_t>(i) + 2] =
          cond.probs[static_cast<std::size_t>(c)] - inv_k;
    });
  }

  MagnetizationStats out;
  out.k = k;
  out.c = c;
  out.n_samples = n;
  auto column = [&](int j) {
    return column_mean_se(
        n, [&](long long i) { return rows[3 * static_cast<std::size_t>(i) +
                                          static_cast<std::size_t>(j)]; });
  };
  const MeanSe abs_y = column(0);
  const MeanSe y_sq = column(1);
  const MeanSe cond = column(2);
  out.mean_abs_y = abs_y.mean;
  out.mean_abs_y_se = abs_y.se;
  out.mean_y_sq = y_sq.mean;
  out.mean_y_sq_se = y_sq.se;
  out.cond_mean_y = cond.mean;
  out.cond_mean_y_se = cond.se;
  return out;
}

NonreconEstimate nonrecon_estimate(const OffspringDistribution& dist, int k,
                                   int h, long long n, Rng& rng,
                                   const EstimatorOptions& opts) {
  check_palette(k);
  if (h < 0) throw ParameterViolation("height must be nonnegative");
  if (n < 1) throw ParameterViolation("sample count must be positive");
  check_stream_capacity(n);

  const std::uint64_t master = rng();
  const std::uint64_t cap = effective_cap(opts);
  const double inv_k = 1.0 / static_cast<double>(k);
  // Per sample: the direct statistic, then Y_c^2 for every colour.
  const std::size_t width = static_cast<std::size_t>(k) + 1;
  std::vector<double> rows(width * static_cast<std::size_t>(n));

  const bool exact = use_exact_law(
      opts, static_cast<double>(n) * expected_nodes(dist, h) * k);
  const MarginalPool* pool = nullptr;
  std::unique_ptr<MarginalPool> owned;
  int top = 0;
  if (exact) {
    top = hybrid_top_depth(dist, h, static_cast<double>(n), k,
                           opts.node_budget);
    Rng pool_rng = derive_stream(
        master, stream_index(kTagNonreconPool, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(h), 0));
    owned.reset(new MarginalPool(dist, k, h - top, opts.pool_size, pool_rng));
    pool = owned.get();
  }

  parallel_for(n, opts.workers, [&](long long i) {
    Rng r = derive_stream(
        master, stream_index(kTagNonrecon, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(h),
                             static_cast<std::uint64_t>(i)));
    const int u = static_cast<int>(r.below(static_cast<std::uint64_t>(k)));
    double* row = rows.data() + width * static_cast<std::size_t>(i);
    Marginal m;
    if (pool != nullptr) {
      const Tree tree = sample_tree(dist, top, r, cap);
      m = hybrid_root_marginal(tree, broadcast(tree, k, u, r), *pool, r);
    } else {
      const Tree tree = sample_tree(dist, h, r, cap);
      m = root_marginal(tree, boundary_of(tree, broadcast(tree, k, u, r)));
    }
    double sum_abs = 0.0;
    for (int col = 0; col < k; ++col) {
      const double y = m.probs[static_cast<std::size_t>(col)] - inv_k;
      sum_abs += std::fabs(y);
      row[1 + col] = y * y;
    }
    row[0] = 0.5 * static_cast<double>(k) * sum_abs;
  });

  NonreconEstimate out;
  out.k = k;
  out.n_samples = n;
  const MeanSe direct = column_mean_se(
      n, [&](long long i) { return rows[width * static_cast<std::size_t>(i)]; });
  out.direct = direct.mean;
  out.direct_se = direct.se;
  // Cauchy-Schwarz form: each colour contributes sqrt of its second moment;
  // the per-colour delta-method errors are summed (a conservative bound, the
  // colours being positively correlated within a sample).
  Kahan bound, bound_se;
  for (int col = 0; col < k; ++col) {
    const MeanSe m2 = column_mean_se(n, [&](long long i) {
      return rows[width * static_cast<std::size_t>(i) + 1 +
                  static_cast<std::size_t>(col)];
    });
    if (m2.mean > 0.0) {
      bound.add(std::sqrt(m2.mean));
      bound_se.add(m2.se / (2.0 * std::sqrt(m2.mean)));
    }
  }
  out.second_moment_bound = 0.5 * static_cast<double>(k) * bound.sum;
  out.second_moment_se = 0.5 * static_cast<double>(k) * bound_se.sum;
  return out;
}

FrozenEstimate frozen_probability(const OffspringDistribution& dist, int k,
                                  int h, long long n_trees,
                                  long long n_boundaries, Rng& rng,
                                  const EstimatorOptions& opts) {
  check_palette(k);
  if (h < 1) throw ParameterViolation("height must be at least one");
  if (n_trees < 1) throw ParameterViolation("tree count must be positive");
  if (n_boundaries < 1) {
    throw ParameterViolation("boundary count must be positive");
  }
  check_stream_capacity(n_trees);

  const std::uint64_t master = rng();
  const std::uint64_t cap = effective_cap(opts);
  // Per tree: extinct flag, number of frozen boundaries.
  std::vector<double> rows(2 * static_cast<std::size_t>(n_trees));

  const double work = static_cast<double>(n_trees) * expected_nodes(dist, h) *
                      (1.0 + 2.0 * static_cast<double>(n_boundaries));
  if (use_exact_law(opts, work)) {
    // Draw from the exact chains: survival decides extinction, and surviving
    // trees freeze each boundary independently with the conditional rate.
    // Tree-level clustering is collapsed by construction, so the
    // cluster-robust error below degrades gracefully to the binomial one.
    const double s = survival_probabilities(dist, h)[static_cast<std::size_t>(h)];
    const double p = frozen_probabilities(dist, k, h)[static_cast<std::size_t>(h)];
    const double p_cond = s > 0.0 ? std::min(1.0, p / s) : 0.0;
    parallel_for(n_trees, opts.workers, [&](long long i) {
      Rng r = derive_stream(
          master, stream_index(kTagFrozen, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(h),
                               static_cast<std::uint64_t>(i)));
      double* row = rows.data() + 2 * static_cast<std::size_t>(i);
      if (r.unit() >= s) {
        row[0] = 1.0;
        row[1] = 0.0;
        return;
      }
      long long frozen = 0;
      for (long long b = 0; b < n_boundaries; ++b) {
        frozen += r.unit() < p_cond ? 1 : 0;
      }
      row[0] = 0.0;
      row[1] = static_cast<double>(frozen);
    });
  } else {
    parallel_for(n_trees, opts.workers, [&](long long i) {
      Rng r = derive_stream(
          master, stream_index(kTagFrozen, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(h),
                               static_cast<std::uint64_t>(i)));
      const Tree tree = sample_tree(dist, h, r, cap);
      double* row = rows.data() + 2 * static_cast<std::size_t>(i);
      if (tree.boundary_size() == 0) {
        row[0] = 1.0;
        row[1] = 0.0;
        return;
      }
      long long frozen = 0;
      for (long long b = 0; b < n_boundaries; ++b) {
        const Boundary bd = boundary_of(tree, broadcast(tree, k, 0, r));
        frozen += allowed_sets(tree, bd).root_freezing() ? 1 : 0;
      }
      row[0] = 0.0;
      row[1] = static_cast<double>(frozen);
    });
  }

  FrozenEstimate out;
  out.n_trees = n_trees;
  out.n_boundaries_per_tree = n_boundaries;
  Kahan extinct, frozen_total;
  std::vector<double> surviving_rates;
  surviving_rates.reserve(static_cast<std::size_t>(n_trees));
  for (long long i = 0; i < n_trees; ++i) {
    const double* row = rows.data() + 2 * static_cast<std::size_t>(i);
    extinct.add(row[0]);
    frozen_total.add(row[1]);
    if (row[0] == 0.0) {
      surviving_rates.push_back(row[1] / static_cast<double>(n_boundaries));
    }
  }
  const auto n_surviving = static_cast<long long>(surviving_rates.size());
  out.extinct_rate = extinct.sum / static_cast<double>(n_trees);
  out.frozen_rate_uncond =
      frozen_total.sum /
      (static_cast<double>(n_trees) * static_cast<double>(n_boundaries));
  if (n_surviving > 0) {
    const MeanSe per_tree = column_mean_se(
        n_surviving,
        [&](long long i) { return surviving_rates[static_cast<std::size_t>(i)]; });
    out.frozen_rate = per_tree.mean;
    out.std_error = per_tree.se;
  }
  return out;
}

std::vector<double> p_h_lower_sequence(int k, double f_size, int h_max,
                                       bool natural_log) {
  if (k < 3) throw ParameterViolation("colour count must be at least three");
  if (!(f_size >= 1.0)) {
    throw ParameterViolation("freezable child count must be at least one");
  }
  if (h_max < 0) throw ParameterViolation("height must be nonnegative");
  const double log_k =
      natural_log ? std::log(static_cast<double>(k)) : std::log2(static_cast<double>(k));
  const double drive = f_size / static_cast<double>(k - 1) * (1.0 - 1.0 / log_k);
  const double slack = 1.0 / (static_cast<double>(k) * static_cast<double>(k));
  std::vector<double> p(static_cast<std::size_t>(h_max) + 1);
  p[0] = 1.0;
  for (int t = 1; t <= h_max; ++t) {
    const double hit = std::pow(-std::expm1(-p[static_cast<std::size_t>(t) - 1] * drive),
                                static_cast<double>(k - 1));
    p[static_cast<std::size_t>(t)] = std::max(0.0, hit - slack);
  }
  return p;
}

DisagreementDecay disagreement_decay(const Tree& tree, int k, long long n,
                                     Rng& rng, const EstimatorOptions& opts) {
  check_palette(k);
  if (n < 1) throw ParameterViolation("sample count must be positive");
  if (tree.boundary_size() == 0) {
    throw ParameterViolation("tree has no depth-h vertex");
  }
  check_stream_capacity(n);
  const int h = tree.height;

  // Leftmost root-leaf path among those reaching full depth.  A reverse
  // level sweep marks which nodes have a depth-h descendant; the arena is
  // breadth-first, so children always carry larger ids than their parent.
  std::vector<std::uint8_t> reaches(tree.node_count(), 0);
  for (std::uint32_t v = tree.boundary_first();
       v < tree.boundary_first() + tree.boundary_size(); ++v) {
    reaches[v] = 1;
  }
  for (std::uint32_t v = tree.boundary_first(); v-- > 0;) {
    for (std::uint32_t c = 0; c < tree.child_count[v]; ++c) {
      if (reaches[tree.child_begin[v] + c]) {
        reaches[v] = 1;
        break;
      }
    }
  }
  std::vector<std::uint32_t> path;
  path.reserve(static_cast<std::size_t>(h) + 1);
  std::uint32_t v = tree.root();
  path.push_back(v);
  for (int depth = 0; depth < h; ++depth) {
    for (std::uint32_t c = 0; c < tree.child_count[v]; ++c) {
      const std::uint32_t child = tree.child_begin[v] + c;
      if (reaches[child]) {
        v = child;
        break;
      }
    }
    path.push_back(v);
  }
  const std::uint32_t leaf_slot = path.back() - tree.boundary_first();

  const std::uint64_t master = rng();
  const std::size_t width = static_cast<std::size_t>(h) + 1;
  std::vector<double> rows(width * static_cast<std::size_t>(n));
  parallel_for(n, opts.workers, [&](long long i) {
    Rng r = derive_stream(
        master, stream_index(kTagDecay, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(h),
                             static_cast<std::uint64_t>(i)));
    const int u = static_cast<int>(r.below(static_cast<std::uint64_t>(k)));
    const Boundary b1 = boundary_of(tree, broadcast(tree, k, u, r));
    Boundary b2 = b1;
    b2.colour[leaf_slot] = static_cast<std::uint8_t>(r.colour_other_than(
        static_cast<std::uint32_t>(k), b1.colour[leaf_slot]));
    double* row = rows.data() + width * static_cast<std::size_t>(i);
    for (int j = 0; j <= h; ++j) {
      const Marginal m1 = subtree_marginal(tree, b1, path[static_cast<std::size_t>(j)]);
      const Marginal m2 = subtree_marginal(tree, b2, path[static_cast<std::size_t>(j)]);
      double tv = 0.0;
      for (int col = 0; col < k; ++col) {
        tv += std::fabs(m1.probs[static_cast<std::size_t>(col)] -
                        m2.probs[static_cast<std::size_t>(col)]);
      }
      row[j] = 0.5 * tv;
    }
  });

  DisagreementDecay out;
  out.n_samples = n;
  out.rate.resize(width);
  out.rate_se.resize(width);
  for (int j = 0; j <= h; ++j) {
    const MeanSe level = column_mean_se(n, [&](long long i) {
      return rows[width * static_cast<std::size_t>(i) + static_cast<std::size_t>(j)];
    });
    out.rate[static_cast<std::size_t>(j)] = level.mean;
    out.rate_se[static_cast<std::size_t>(j)] = level.se;
  }
  return out;
}

RateEstimate a_membership_rate(const OffspringDistribution& dist, int h,
                               double zeta, double delta_plus, double delta,
                               long long n, Rng& rng,
                               const EstimatorOptions& opts) {
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
  if (n < 1) throw ParameterViolation("sample count must be positive");
  check_stream_capacity(n);

  const std::uint64_t master = rng();
  const std::uint64_t cap = effective_cap(opts);
  std::vector<double> rows(static_cast<std::size_t>(n));
  if (use_exact_law(opts, static_cast<double>(n) * expected_nodes(dist, h))) {
    const MembershipSplit split =
        a_membership_split(dist, h, zeta, delta_plus, delta);
    parallel_for(n, opts.workers, [&](long long i) {
      Rng r = derive_stream(
          master, stream_index(kTagMembership, 0,
                               static_cast<std::uint64_t>(h),
                               static_cast<std::uint64_t>(i)));
      rows[static_cast<std::size_t>(i)] = r.unit() < split.in_set ? 1.0 : 0.0;
    });
  } else {
    parallel_for(n, opts.workers, [&](long long i) {
      Rng r = derive_stream(
          master, stream_index(kTagMembership, 0,
                               static_cast<std::uint64_t>(h),
                               static_cast<std::uint64_t>(i)));
      const Tree tree = sample_tree(dist, h, r, cap);
      NodeFlags flags;
      classify_mixing(tree, delta_plus, delta, flags);
      rows[static_cast<std::size_t>(i)] = in_A(tree, flags, zeta) ? 1.0 : 0.0;
    });
  }

  RateEstimate out;
  out.n_samples = n;
  Kahan hits;
  for (double v : rows) hits.add(v);
  out.rate = hits.sum / static_cast<double>(n);
  out.std_error = std::sqrt(
      std::max(0.0, out.rate * (1.0 - out.rate) / static_cast<double>(n)));
  return out;
}

}  // namespace recon
