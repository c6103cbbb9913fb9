#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace recon {

// The six runnable experiments.  Each writes one CSV named after the
// subcommand plus a shared summary.txt into the output directory.
enum class ExperimentKind {
  kThresholds,          // degree thresholds and slack witnesses for one dist
  kFrozenSweep,         // frozen-root rate over a (k, h) grid
  kMagnetizationSweep,  // magnetization moments + non-reconstruction statistic
  kAMembership,         // mixing-path membership rate vs the exact law
  kCouplingDecay,       // disagreement decay along a root-to-leaf path
  kOracleCheck,         // sampled marginals vs exact enumeration on small trees
};

// Bag of knobs shared by every experiment.  Unused fields are ignored by
// experiments that do not need them; validate() only checks what is set.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kThresholds;

  std::string dist = "deterministic:d=30";
  std::vector<long long> k_list = {6};
  std::vector<long long> h_list = {4};

  double alpha = 0.2;   // threshold window half-width (> 0)
  double delta = 0.1;   // tail exponent, in (0, 1/10]
  double beta = 4.0;    // path-weight exponent, >= 4
  double zeta = 0.25;   // mixing-fraction cutoff, in (0, 1)
  double gamma = 0.05;  // secondary tail exponent, 0 <= gamma <= delta

  // a-membership only: 0 means "derive from the dist via the threshold scan".
  long long delta_plus_override = 0;

  int colour = 0;  // conditioning colour for magnetization moments

  long long n_samples = 1000;   // Monte Carlo samples per grid cell
  long long n_trees = 1000;     // trees for the frozen sweep
  long long n_boundaries = 1;   // boundaries per tree for the frozen sweep
  long long n_random = 200;     // random boundaries per shape (oracle-check)
  long long max_nodes = 8;      // largest tree enumerated by oracle-check

  std::uint64_t seed = 1;
  int workers = 1;              // 0 = one per hardware thread
  std::uint64_t node_cap = 0;   // per-tree arena cap; 0 = library default
  std::string out_dir = "recon_out";
  std::string mode = "auto";    // auto | explicit | exact-law

  // Throws ParameterViolation naming the offending field, or ValidationError
  // if the distribution string does not parse.
  void validate() const;
};

// Runs the configured experiment and writes its artifacts.  Returns 0 on
// success, 1 if oracle-check found mismatches, 2 on a validation failure and
// 3 when a resource cap was hit.  Unexpected exceptions propagate.
int run_experiment(const ExperimentConfig& config);

// Build-time version stamp (git describe when available) embedded in CSV
// provenance columns and summary.txt.
const char* version_string();

// Parses "1..8", "3,5,7" or mixtures like "1..4,8" into an expanded list.
// Throws ParameterViolation on junk, empty items or descending ranges.
std::vector<long long> parse_int_list(const std::string& text);

}  // namespace recon
