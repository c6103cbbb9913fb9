#include "recon/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <utility>
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
#include "recon/version.hpp"

namespace recon {
namespace {

namespace fs = std::filesystem;

// Purpose tags for per-cell master seeds.  Disjoint from the 0xD* tags the
// estimators use internally, so cell seeds and sample streams never collide.
constexpr std::uint64_t kCellFrozen = 0xC1;
constexpr std::uint64_t kCellMagnet = 0xC2;
constexpr std::uint64_t kCellNonrecon = 0xC3;
constexpr std::uint64_t kCellMembership = 0xC4;
constexpr std::uint64_t kCellDecayTree = 0xC5;
constexpr std::uint64_t kCellDecayRun = 0xC6;
constexpr std::uint64_t kCellOracle = 0xC7;
constexpr std::uint64_t kCellOracleShape = 0xC8;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Quotes a CSV field only when it needs it (commas appear in explicit-pmf
// distribution labels).
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out;
  out.reserve(s.size() + 2);
  out += '"';
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvFile {
 public:
  explicit CsvFile(const fs::path& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) {
      throw ValidationError("cannot open output file " + path.string());
    }
  }

  // Headers are plain identifiers and are written verbatim.
  void header(std::string_view line) { out_ << line << '\n'; }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << '\n';
  }

  void close() {
    out_.flush();
    if (!out_) throw ValidationError("write failure on " + path_.string());
    std::printf("wrote %s\n", path_.string().c_str());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kThresholds:
      return "thresholds";
    case ExperimentKind::kFrozenSweep:
      return "frozen-sweep";
    case ExperimentKind::kMagnetizationSweep:
      return "magnetization-sweep";
    case ExperimentKind::kAMembership:
      return "a-membership";
    case ExperimentKind::kCouplingDecay:
      return "coupling-decay";
    case ExperimentKind::kOracleCheck:
      return "oracle-check";
  }
  return "unknown";
}

SamplingMode parse_mode(const std::string& mode) {
  if (mode == "auto") return SamplingMode::kAuto;
  if (mode == "explicit") return SamplingMode::kExplicit;
  if (mode == "exact-law") return SamplingMode::kExactLaw;
  throw ParameterViolation("mode: expected auto, explicit or exact-law, got '" +
                           mode + "'");
}

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

EstimatorOptions estimator_options(const ExperimentConfig& cfg) {
  EstimatorOptions opts;
  opts.workers = resolve_workers(cfg.workers);
  opts.mode = parse_mode(cfg.mode);
  opts.node_cap = cfg.node_cap;
  return opts;
}

std::string join_list(const std::vector<long long>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

// Degree thresholds and the k-thresholds they induce, shared by summary.txt
// and the thresholds experiment.
struct DerivedThresholds {
  bool available = false;
  ThresholdPlusReport plus;
  ThresholdMinusReport minus;
};

DerivedThresholds derive_thresholds(const OffspringDistribution& dist,
                                    const ExperimentConfig& cfg) {
  DerivedThresholds d;
  try {
    d.plus = compute_delta_plus(dist, cfg.delta, cfg.beta);
    d.minus = compute_delta_minus(dist, cfg.delta);
    d.available = true;
  } catch (const std::exception&) {
    // Distributions without witnesses (e.g. subcritical ones) simply report
    // the derived block as unavailable.
  }
  return d;
}

double upper_k_threshold(const DerivedThresholds& d, double alpha) {
  const auto dp = static_cast<double>(d.plus.delta_plus);
  return (1.0 + alpha) * dp / std::log(dp);
}

double lower_k_threshold(const DerivedThresholds& d, double alpha) {
  const auto dm = static_cast<double>(d.minus.delta_minus);
  return (1.0 - alpha) * dm / std::log(dm);
}

void write_summary(const fs::path& dir, const ExperimentConfig& cfg,
                   const DerivedThresholds& derived, double wall_seconds) {
  const fs::path path = dir / "summary.txt";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file " + path.string());
  out << "experiment = " << experiment_name(cfg.experiment) << '\n';
  out << "version = " << version_string() << '\n';
  out << "dist = " << cfg.dist << '\n';
  out << "k_list = " << join_list(cfg.k_list) << '\n';
  out << "h_list = " << join_list(cfg.h_list) << '\n';
  out << "alpha = " << fmt(cfg.alpha) << '\n';
  out << "delta = " << fmt(cfg.delta) << '\n';
  out << "beta = " << fmt(cfg.beta) << '\n';
  out << "zeta = " << fmt(cfg.zeta) << '\n';
  out << "gamma = " << fmt(cfg.gamma) << '\n';
  out << "delta_plus_override = " << cfg.delta_plus_override << '\n';
  out << "colour = " << cfg.colour << '\n';
  out << "n_samples = " << cfg.n_samples << '\n';
  out << "n_trees = " << cfg.n_trees << '\n';
  out << "n_boundaries = " << cfg.n_boundaries << '\n';
  out << "n_random = " << cfg.n_random << '\n';
  out << "max_nodes = " << cfg.max_nodes << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "workers = " << cfg.workers
      << " (resolved: " << resolve_workers(cfg.workers) << ")\n";
  out << "node_cap = " << cfg.node_cap << '\n';
  out << "mode = " << cfg.mode << '\n';
  out << "out = " << cfg.out_dir << '\n';
  if (derived.available) {
    out << "delta_plus = " << derived.plus.delta_plus << '\n';
    out << "delta_minus = " << derived.minus.delta_minus << '\n';
    out << "k_upper = " << fmt(upper_k_threshold(derived, cfg.alpha)) << '\n';
    out << "k_lower = " << fmt(lower_k_threshold(derived, cfg.alpha)) << '\n';
  } else {
    out << "delta_plus = unavailable\n";
    out << "delta_minus = unavailable\n";
    out << "k_upper = unavailable\n";
    out << "k_lower = unavailable\n";
  }
  out << "wall_clock_seconds = " << fmt(wall_seconds) << '\n';
  out.flush();
  if (!out) throw ValidationError("write failure on " + path.string());
}

int run_thresholds(const ExperimentConfig& cfg,
                   const OffspringDistribution& dist, const fs::path& dir,
                   DerivedThresholds& derived) {
  // Here the scan is the experiment itself, so scan failures propagate as
  // exit codes instead of degrading to an "unavailable" summary block.
  derived.plus = compute_delta_plus(dist, cfg.delta, cfg.beta);
  derived.minus = compute_delta_minus(dist, cfg.delta);
  derived.available = true;

  CsvFile csv(dir / "thresholds.csv");
  csv.header(
      "dist,delta,beta,alpha,delta_plus,q,slack_eq2,slack_eq3_left,"
      "slack_eq3_right,delta_minus,g,slack_eq4,k_upper,k_lower,seed,version");
  csv.row({dist.label(), fmt(cfg.delta), fmt(cfg.beta), fmt(cfg.alpha),
           std::to_string(derived.plus.delta_plus), fmt(derived.plus.q),
           fmt(derived.plus.slack_eq2), fmt(derived.plus.slack_eq3_left),
           fmt(derived.plus.slack_eq3_right),
           std::to_string(derived.minus.delta_minus), fmt(derived.minus.g),
           fmt(derived.minus.slack_eq4),
           fmt(upper_k_threshold(derived, cfg.alpha)),
           fmt(lower_k_threshold(derived, cfg.alpha)),
           std::to_string(cfg.seed), version_string()});
  csv.close();
  return 0;
}

int run_frozen_sweep(const ExperimentConfig& cfg,
                     const OffspringDistribution& dist, const fs::path& dir) {
  const EstimatorOptions opts = estimator_options(cfg);
  CsvFile csv(dir / "frozen-sweep.csv");
  // This header is a compatibility guarantee; downstream tooling parses it.
  csv.header(
      "dist,k,h,n_trees,n_boundaries,frozen_rate,frozen_rate_uncond,"
      "extinct_rate,std_err,seed");
  for (const long long k : cfg.k_list) {
    for (const long long h : cfg.h_list) {
      Rng cell = derive_stream(
          cfg.seed, stream_index(kCellFrozen, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint64_t>(h), 0));
      const FrozenEstimate est =
          frozen_probability(dist, static_cast<int>(k), static_cast<int>(h),
                             cfg.n_trees, cfg.n_boundaries, cell, opts);
      csv.row({dist.label(), std::to_string(k), std::to_string(h),
               std::to_string(est.n_trees),
               std::to_string(est.n_boundaries_per_tree), fmt(est.frozen_rate),
               fmt(est.frozen_rate_uncond), fmt(est.extinct_rate),
               fmt(est.std_error), std::to_string(cfg.seed)});
    }
  }
  csv.close();
  return 0;
}

int run_magnetization_sweep(const ExperimentConfig& cfg,
                            const OffspringDistribution& dist,
                            const fs::path& dir) {
  const EstimatorOptions opts = estimator_options(cfg);
  CsvFile csv(dir / "magnetization-sweep.csv");
  csv.header(
      "dist,k,h,colour,n_samples,mean_abs_y,mean_abs_y_se,mean_y_sq,"
      "mean_y_sq_se,cond_mean_y,cond_mean_y_se,nonrecon_direct,"
      "nonrecon_direct_se,nonrecon_bound,nonrecon_bound_se,seed,version");
  for (const long long k : cfg.k_list) {
    for (const long long h : cfg.h_list) {
      Rng mag_cell = derive_stream(
          cfg.seed, stream_index(kCellMagnet, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint64_t>(h), 0));
      const MagnetizationStats mag = magnetization_stats(
          dist, static_cast<int>(k), static_cast<int>(h), cfg.colour,
          cfg.n_samples, mag_cell, opts);
      Rng non_cell = derive_stream(
          cfg.seed, stream_index(kCellNonrecon, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint64_t>(h), 0));
      const NonreconEstimate non =
          nonrecon_estimate(dist, static_cast<int>(k), static_cast<int>(h),
                            cfg.n_samples, non_cell, opts);
      csv.row({dist.label(), std::to_string(k), std::to_string(h),
               std::to_string(cfg.colour), std::to_string(mag.n_samples),
               fmt(mag.mean_abs_y), fmt(mag.mean_abs_y_se), fmt(mag.mean_y_sq),
               fmt(mag.mean_y_sq_se), fmt(mag.cond_mean_y),
               fmt(mag.cond_mean_y_se), fmt(non.direct), fmt(non.direct_se),
               fmt(non.second_moment_bound), fmt(non.second_moment_se),
               std::to_string(cfg.seed), version_string()});
    }
  }
  csv.close();
  return 0;
}

int run_a_membership(const ExperimentConfig& cfg,
                     const OffspringDistribution& dist, const fs::path& dir) {
  long long delta_plus = cfg.delta_plus_override;
  if (delta_plus == 0) {
    delta_plus = compute_delta_plus(dist, cfg.delta, cfg.beta).delta_plus;
  }
  const EstimatorOptions opts = estimator_options(cfg);
  CsvFile csv(dir / "a-membership.csv");
  csv.header(
      "dist,h,zeta,delta,delta_plus,n_samples,rate,std_err,exact_in_set,"
      "exact_miss,seed,version");
  for (const long long h : cfg.h_list) {
    Rng cell = derive_stream(
        cfg.seed,
        stream_index(kCellMembership, 0, static_cast<std::uint64_t>(h), 0));
    const RateEstimate est = a_membership_rate(
        dist, static_cast<int>(h), cfg.zeta, static_cast<double>(delta_plus),
        cfg.delta, cfg.n_samples, cell, opts);
    const MembershipSplit split =
        a_membership_split(dist, static_cast<int>(h), cfg.zeta,
                           static_cast<double>(delta_plus), cfg.delta);
    csv.row({dist.label(), std::to_string(h), fmt(cfg.zeta), fmt(cfg.delta),
             std::to_string(delta_plus), std::to_string(est.n_samples),
             fmt(est.rate), fmt(est.std_error), fmt(split.in_set),
             fmt(split.miss), std::to_string(cfg.seed), version_string()});
  }
  csv.close();
  return 0;
}

int run_coupling_decay(const ExperimentConfig& cfg,
                       const OffspringDistribution& dist,
                       const fs::path& dir) {
  const EstimatorOptions opts = estimator_options(cfg);
  const std::uint64_t cap =
      cfg.node_cap != 0 ? cfg.node_cap : default_node_cap();
  CsvFile csv(dir / "coupling-decay.csv");
  csv.header("dist,k,h,level,n_samples,rate,std_err,tree_nodes,seed,version");
  for (const long long k : cfg.k_list) {
    for (const long long h : cfg.h_list) {
      // One representative tree per cell: retry until the boundary survives.
      std::optional<Tree> tree;
      for (std::uint64_t attempt = 0; attempt < 100 && !tree; ++attempt) {
        Rng tree_rng = derive_stream(
            cfg.seed,
            stream_index(kCellDecayTree, static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(h), attempt));
        Tree candidate = sample_tree(dist, static_cast<int>(h), tree_rng, cap);
        if (candidate.boundary_size() > 0) tree = std::move(candidate);
      }
      if (!tree) {
        throw ValidationError(
            "coupling-decay: no tree of height " + std::to_string(h) +
            " survived in 100 attempts under " + dist.label());
      }
      Rng run_rng = derive_stream(
          cfg.seed, stream_index(kCellDecayRun, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint64_t>(h), 0));
      const DisagreementDecay decay = disagreement_decay(
          *tree, static_cast<int>(k), cfg.n_samples, run_rng, opts);
      for (std::size_t level = 0; level < decay.rate.size(); ++level) {
        csv.row({dist.label(), std::to_string(k), std::to_string(h),
                 std::to_string(level), std::to_string(decay.n_samples),
                 fmt(decay.rate[level]), fmt(decay.rate_se[level]),
                 std::to_string(tree->node_count()), std::to_string(cfg.seed),
                 version_string()});
      }
    }
  }
  csv.close();
  return 0;
}

int run_oracle_check(const ExperimentConfig& cfg, const fs::path& dir) {
  // Fixed small shapes plus a few sampled ones; on each, broadcast boundaries
  // and compare the dynamic-programming root marginal against enumeration.
  std::vector<std::pair<std::string, Tree>> shapes;
  for (int h = 1; h <= 3; ++h) {
    Tree t = make_path(h);
    if (static_cast<long long>(t.node_count()) <= cfg.max_nodes) {
      shapes.emplace_back("path-" + std::to_string(h), std::move(t));
    }
  }
  for (std::uint32_t leaves = 2; leaves <= 4; ++leaves) {
    Tree t = make_star(leaves);
    if (static_cast<long long>(t.node_count()) <= cfg.max_nodes) {
      shapes.emplace_back("star-" + std::to_string(leaves), std::move(t));
    }
  }
  {
    Tree t = make_complete(2, 2);
    if (static_cast<long long>(t.node_count()) <= cfg.max_nodes) {
      shapes.emplace_back("complete-2-2", std::move(t));
    }
  }
  const OffspringDistribution shape_dist =
      OffspringDistribution::explicit_pmf({0.6, 0.2, 0.2});
  for (std::uint64_t i = 0; i < 3; ++i) {
    for (std::uint64_t attempt = 0; attempt < 50; ++attempt) {
      Rng tree_rng = derive_stream(
          cfg.seed, stream_index(kCellOracleShape, 0, i, attempt));
      Tree candidate = sample_tree(shape_dist, 3, tree_rng);
      const auto nodes = static_cast<long long>(candidate.node_count());
      if (nodes >= 2 && nodes <= cfg.max_nodes) {
        shapes.emplace_back("random-" + std::to_string(i),
                            std::move(candidate));
        break;
      }
    }
  }

  CsvFile csv(dir / "oracle-check.csv");
  csv.header("shape,k,n_checked,mismatches,max_abs_err,seed,version");
  long long total_mismatches = 0;
  long long total_checked = 0;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const Tree& tree = shapes[s].second;
    for (const long long k : cfg.k_list) {
      Rng run_rng = derive_stream(
          cfg.seed, stream_index(kCellOracle, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint64_t>(s), 0));
      long long mismatches = 0;
      double max_err = 0.0;
      for (long long i = 0; i < cfg.n_random; ++i) {
        const auto root_colour = static_cast<int>(
            run_rng.below(static_cast<std::uint64_t>(k)));
        const Colouring col =
            broadcast(tree, static_cast<int>(k), root_colour, run_rng);
        const Boundary boundary = boundary_of(tree, col);
        const Marginal got = root_marginal(tree, boundary);
        const Marginal want = exact_root_marginal(tree, boundary);
        double err = 0.0;
        for (long long c = 0; c < k; ++c) {
          err = std::max(err, std::abs(got.probs[static_cast<std::size_t>(c)] -
                                       want.probs[static_cast<std::size_t>(c)]));
        }
        max_err = std::max(max_err, err);
        if (err > 1e-9) ++mismatches;
      }
      total_mismatches += mismatches;
      total_checked += cfg.n_random;
      csv.row({shapes[s].first, std::to_string(k), std::to_string(cfg.n_random),
               std::to_string(mismatches), fmt(max_err),
               std::to_string(cfg.seed), version_string()});
    }
  }
  csv.close();
  std::printf("oracle-check: %lld mismatches over %lld marginal comparisons\n",
              total_mismatches, total_checked);
  return total_mismatches == 0 ? 0 : 1;
}

long long parse_int_token(std::string_view token, const std::string& full) {
  long long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto result = std::from_chars(first, last, value);
  if (token.empty() || result.ec != std::errc() || result.ptr != last) {
    throw ParameterViolation("integer list '" + full + "': bad token '" +
                             std::string(token) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(alpha > 0.0)) throw ParameterViolation("alpha: must be > 0");
  if (!(delta > 0.0 && delta <= 0.1)) {
    throw ParameterViolation("delta: must lie in (0, 0.1]");
  }
  if (!(beta >= 4.0)) throw ParameterViolation("beta: must be >= 4");
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw ParameterViolation("zeta: must lie in (0, 1)");
  }
  if (!(gamma >= 0.0 && gamma <= delta)) {
    throw ParameterViolation("gamma: must lie in [0, delta]");
  }
  if (k_list.empty()) throw ParameterViolation("k_list: must not be empty");
  for (const long long k : k_list) {
    if (k < 2 || k > 255) {
      throw ParameterViolation("k_list: entries must lie in [2, 255]");
    }
  }
  if (h_list.empty()) throw ParameterViolation("h_list: must not be empty");
  for (const long long h : h_list) {
    if (h < 0 || h > 255) {
      throw ParameterViolation("h_list: entries must lie in [0, 255]");
    }
  }
  if (delta_plus_override < 0) {
    throw ParameterViolation(
        "delta_plus: must be >= 0 (0 derives it from the distribution)");
  }
  if (colour < 0 || colour > 254) {
    throw ParameterViolation("colour: must lie in [0, 254]");
  }
  if (n_samples < 1) throw ParameterViolation("n_samples: must be >= 1");
  if (n_trees < 1) throw ParameterViolation("n_trees: must be >= 1");
  if (n_boundaries < 1) throw ParameterViolation("n_boundaries: must be >= 1");
  if (n_random < 1) throw ParameterViolation("n_random: must be >= 1");
  if (max_nodes < 2) throw ParameterViolation("max_nodes: must be >= 2");
  if (workers < 0) {
    throw ParameterViolation("workers: must be >= 0 (0 = one per core)");
  }
  if (out_dir.empty()) throw ParameterViolation("out: must not be empty");
  (void)parse_mode(mode);
  try {
    (void)OffspringDistribution::parse(dist);
  } catch (const ParameterViolation& e) {
    throw ParameterViolation("dist: " + std::string(e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError("dist: " + std::string(e.what()));
  }
}

int run_experiment(const ExperimentConfig& config) {
  try {
    config.validate();
    const OffspringDistribution dist =
        OffspringDistribution::parse(config.dist);
    const fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      throw ValidationError("out: cannot create '" + config.out_dir +
                            "': " + ec.message());
    }

    const auto start = std::chrono::steady_clock::now();
    DerivedThresholds derived;
    int code = 0;
    switch (config.experiment) {
      case ExperimentKind::kThresholds:
        code = run_thresholds(config, dist, dir, derived);
        break;
      case ExperimentKind::kFrozenSweep:
        derived = derive_thresholds(dist, config);
        code = run_frozen_sweep(config, dist, dir);
        break;
      case ExperimentKind::kMagnetizationSweep:
        derived = derive_thresholds(dist, config);
        code = run_magnetization_sweep(config, dist, dir);
        break;
      case ExperimentKind::kAMembership:
        derived = derive_thresholds(dist, config);
        code = run_a_membership(config, dist, dir);
        break;
      case ExperimentKind::kCouplingDecay:
        derived = derive_thresholds(dist, config);
        code = run_coupling_decay(config, dist, dir);
        break;
      case ExperimentKind::kOracleCheck:
        derived = derive_thresholds(dist, config);
        code = run_oracle_check(config, dir);
        break;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_summary(dir, config, derived, wall);
    return code;
  } catch (const ResourceLimit& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const LimitExceeded& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NotFound& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParameterViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

const char* version_string() { return kVersion; }

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> out;
  std::string_view rest(text);
  while (true) {
    const std::size_t comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item.empty()) {
      throw ParameterViolation("integer list '" + text + "': empty item");
    }
    const std::size_t dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(parse_int_token(item, text));
    } else {
      const long long lo = parse_int_token(trim(item.substr(0, dots)), text);
      const long long hi =
          parse_int_token(trim(item.substr(dots + 2)), text);
      if (hi < lo) {
        throw ParameterViolation("integer list '" + text +
                                 "': descending range '" + std::string(item) +
                                 "'");
      }
      if (hi - lo >= 100000) {
        throw ParameterViolation("integer list '" + text + "': range '" +
                                 std::string(item) +
                                 "' expands to more than 100000 items");
      }
      for (long long v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

}  // namespace recon
