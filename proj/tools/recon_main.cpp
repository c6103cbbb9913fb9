#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "recon/errors.hpp"
#include "recon/experiment.hpp"

namespace {

// List-valued and "auto"-valued flags stay strings through CLI11 so ranges
// like 1..8 and the literal "auto" survive; they are converted after parse.
struct RawFlags {
  std::string k = "6";
  std::string h = "4";
  std::string workers = "1";
  std::string config_path;
};

std::string trim_copy(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Applies a flat key=value file to the parsed subcommand.  Keys are long
// option names without dashes; values go through the same conversions as
// command-line flags, and any flag given explicitly keeps its value.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw recon::ParameterViolation("config: cannot open '" + path + "'");
  }
  std::map<std::string, std::string> entries;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim_copy(line);
    if (text.empty() || text[0] == '#') continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw recon::ParameterViolation("config: line " +
                                      std::to_string(line_no) +
                                      " is not key=value: '" + text + "'");
    }
    const std::string key = trim_copy(text.substr(0, eq));
    std::string value = trim_copy(text.substr(eq + 1));
    if (value.size() >= 2 &&
        ((value.front() == '"' && value.back() == '"') ||
         (value.front() == '\'' && value.back() == '\''))) {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw recon::ParameterViolation("config: line " +
                                      std::to_string(line_no) + " has no key");
    }
    if (key == "config") {
      throw recon::ParameterViolation("config: nested config files are not supported");
    }
    if (!entries.emplace(key, value).second) {
      throw recon::ParameterViolation("config: duplicate key '" + key + "'");
    }
  }
  for (const auto& [key, value] : entries) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw recon::ParameterViolation("config: unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;  // explicit flag wins
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw recon::ParameterViolation("config: key '" + key + "': " +
                                      e.what());
    }
  }
}

void add_common_flags(CLI::App* sub, recon::ExperimentConfig& cfg,
                      RawFlags& raw) {
  // Long-form help only, so the short option namespace stays free for --h.
  sub->set_help_flag("--help", "Print this help message and exit");
  sub->add_option("--dist", cfg.dist,
                  "Offspring distribution, e.g. deterministic:d=30, "
                  "binomial:n=10000,p=0.003, poisson:lambda=30, "
                  "powerlaw:exponent=1.2,cutoff=10000, explicit:0.5,0,0.5");
  sub->add_option("--k,--k-list", raw.k,
                  "Colour counts: single value, list (5,6,8) or range (3..8)");
  sub->add_option("--h,--h-list", raw.h,
                  "Boundary depths: single value, list or range");
  sub->add_option("--alpha", cfg.alpha, "Threshold window half-width (> 0)");
  sub->add_option("--delta", cfg.delta, "Tail exponent in (0, 0.1]");
  sub->add_option("--beta", cfg.beta, "Path-weight exponent (>= 4)");
  sub->add_option("--zeta", cfg.zeta, "Mixing-fraction cutoff in (0, 1)");
  sub->add_option("--gamma", cfg.gamma,
                  "Secondary tail exponent in [0, delta]");
  sub->add_option("--colour", cfg.colour,
                  "Conditioning colour for magnetization moments");
  sub->add_option("--n-samples", cfg.n_samples,
                  "Monte Carlo samples per grid cell");
  sub->add_option("--n-trees", cfg.n_trees, "Trees for the frozen sweep");
  sub->add_option("--n-boundaries", cfg.n_boundaries,
                  "Broadcast boundaries per tree");
  sub->add_option("--seed", cfg.seed, "Master seed (64-bit)");
  sub->add_option("--workers", raw.workers,
                  "Worker threads, or 'auto' for one per core");
  sub->add_option("--node-cap", cfg.node_cap,
                  "Per-tree node cap (0 = library default)");
  sub->add_option("--out", cfg.out_dir, "Output directory");
  sub->add_option("--mode", cfg.mode,
                  "Sampling mode: auto | explicit | exact-law");
  sub->add_option("--config", raw.config_path,
                  "Read key=value defaults from a file; flags override it");
}

void finalize_raw_flags(recon::ExperimentConfig& cfg, const RawFlags& raw) {
  cfg.k_list = recon::parse_int_list(raw.k);
  cfg.h_list = recon::parse_int_list(raw.h);
  if (raw.workers == "auto") {
    cfg.workers = 0;
    return;
  }
  const std::vector<long long> parsed = recon::parse_int_list(raw.workers);
  if (parsed.size() != 1 || parsed[0] < 0 || parsed[0] > 4096) {
    throw recon::ParameterViolation(
        "workers: expected 'auto' or one integer in [0, 4096], got '" +
        raw.workers + "'");
  }
  cfg.workers = static_cast<int>(parsed[0]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-colouring broadcast experiments on Galton-Watson trees"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(recon::version_string()));

  recon::ExperimentConfig cfg;
  RawFlags raw;

  struct SubSpec {
    const char* name;
    const char* help;
    recon::ExperimentKind kind;
  };
  const std::vector<SubSpec> specs = {
      {"thresholds", "Degree thresholds and witness slacks for a distribution",
       recon::ExperimentKind::kThresholds},
      {"frozen-sweep", "Frozen-root rate over a (k, h) grid",
       recon::ExperimentKind::kFrozenSweep},
      {"magnetization-sweep",
       "Root magnetization moments and the non-reconstruction statistic",
       recon::ExperimentKind::kMagnetizationSweep},
      {"a-membership",
       "Mixing-path membership rate against the exact recursion",
       recon::ExperimentKind::kAMembership},
      {"coupling-decay", "Disagreement decay along a root-to-leaf path",
       recon::ExperimentKind::kCouplingDecay},
      {"oracle-check",
       "Dynamic-programming marginals against brute-force enumeration",
       recon::ExperimentKind::kOracleCheck},
  };
  for (const SubSpec& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    add_common_flags(sub, cfg, raw);
    if (spec.kind == recon::ExperimentKind::kAMembership) {
      sub->add_option("--delta-plus", cfg.delta_plus_override,
                      "Fixed degree threshold (0 = derive it by scanning)");
    }
    if (spec.kind == recon::ExperimentKind::kOracleCheck) {
      sub->add_option("--max-nodes", cfg.max_nodes,
                      "Largest tree to enumerate");
      sub->add_option("--n-random", cfg.n_random,
                      "Broadcast boundaries per shape/k cell");
    }
    sub->callback(
        [&cfg, kind = spec.kind]() { cfg.experiment = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message; the exit code is normalized below
    return 2;
  }

  try {
    if (!raw.config_path.empty()) {
      apply_config_file(app.get_subcommands().front(), raw.config_path);
    }
    finalize_raw_flags(cfg, raw);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    return recon::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
