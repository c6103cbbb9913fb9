#include "recon/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace recon {

namespace {

constexpr long long kMaxSupport = 2'000'000;

struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void check_support(long long s, const char* what) {
  if (s > kMaxSupport) {
    throw ResourceLimit(std::string(what) +
                        ": support exceeds the 2e6 entry cap");
  }
}

// Splits "key=value,key=value" into pairs; throws naming the spec on error.
std::vector<std::pair<std::string, std::string>> parse_kv(
    const std::string& body, const std::string& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("distribution spec '" + spec +
                            "': expected key=value, got '" + item + "'");
    }
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

double to_real(const std::string& v, const std::string& spec) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ValidationError("distribution spec '" + spec +
                          "': not a number: '" + v + "'");
  }
}

long long to_int(const std::string& v, const std::string& spec) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ValidationError("distribution spec '" + spec +
                          "': not an integer: '" + v + "'");
  }
}

}  // namespace

void OffspringDistribution::finalize(std::string label) {
  label_ = std::move(label);
  while (pmf_.size() > 1 && pmf_.back() == 0.0) pmf_.pop_back();
  support_max_ = static_cast<long long>(pmf_.size()) - 1;

  const std::size_t n = pmf_.size();
  suffix_.assign(n + 1, 0.0);
  prefix_.assign(n + 1, 0.0);
  sb_suffix_.assign(n + 1, 0.0);
  Kahan up, down, sb;
  for (std::size_t i = n; i-- > 0;) {
    up.add(pmf_[i]);
    suffix_[i] = up.sum;
    sb.add(static_cast<double>(i) * pmf_[i]);
    sb_suffix_[i] = sb.sum;
  }
  for (std::size_t i = 0; i < n; ++i) {
    down.add(pmf_[i]);
    prefix_[i + 1] = down.sum;
  }
  Kahan m;
  for (std::size_t i = 0; i < n; ++i) m.add(static_cast<double>(i) * pmf_[i]);
  mean_ = m.sum;
  if (std::abs(suffix_[0] - 1.0) > 1e-9) {
    throw ParameterViolation("offspring pmf does not sum to 1 (got " +
                             format_double(suffix_[0]) + ")");
  }
  if (kind_ != DistKind::Deterministic) {
    alias_ = std::make_shared<const AliasTable>(pmf_);
  }
}

OffspringDistribution OffspringDistribution::deterministic(long long d) {
  if (d < 0) throw ParameterViolation("deterministic: d must be >= 0");
  check_support(d, "deterministic");
  OffspringDistribution dist;
  dist.kind_ = DistKind::Deterministic;
  dist.det_d_ = d;
  dist.pmf_.assign(static_cast<std::size_t>(d) + 1, 0.0);
  dist.pmf_[static_cast<std::size_t>(d)] = 1.0;
  dist.finalize("deterministic:d=" + std::to_string(d));
  return dist;
}

OffspringDistribution OffspringDistribution::binomial(long long n, double p) {
  if (n < 0) throw ParameterViolation("binomial: n must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterViolation("binomial: p must lie in [0,1]");
  }
  check_support(n, "binomial");
  OffspringDistribution dist;
  dist.kind_ = DistKind::Binomial;
  dist.bin_n_ = n;
  dist.bin_p_ = p;
  dist.pmf_.assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (p == 0.0 || n == 0) {
    dist.pmf_[0] = 1.0;
  } else if (p == 1.0) {
    dist.pmf_[static_cast<std::size_t>(n)] = 1.0;
  } else {
    std::vector<double> lg(static_cast<std::size_t>(n) + 2);
    for (std::size_t i = 0; i < lg.size(); ++i) {
      lg[i] = std::lgamma(static_cast<double>(i) + 1.0);
    }
    const double lp = std::log(p), lq = std::log1p(-p);
    for (long long i = 0; i <= n; ++i) {
      const double logpmf = lg[static_cast<std::size_t>(n)] -
                            lg[static_cast<std::size_t>(i)] -
                            lg[static_cast<std::size_t>(n - i)] +
                            static_cast<double>(i) * lp +
                            static_cast<double>(n - i) * lq;
      dist.pmf_[static_cast<std::size_t>(i)] = std::exp(logpmf);
    }
    // Absorb the lgamma rounding residue (~1e-12 for n = 1000): recursions
    // over generations amplify any pmf mass defect by mean^h.
    Kahan total;
    for (double v : dist.pmf_) total.add(v);
    for (double& v : dist.pmf_) v /= total.sum;
  }
  std::string label = "binomial:n=" + std::to_string(n) +
                      ",p=" + format_double(p);
  dist.finalize(std::move(label));
  return dist;
}

OffspringDistribution OffspringDistribution::poisson(double lambda,
                                                     long long cutoff) {
  if (!(lambda > 0.0)) throw ParameterViolation("poisson: lambda must be > 0");
  OffspringDistribution dist;
  dist.kind_ = DistKind::Poisson;
  dist.poi_lambda_ = lambda;
  const double ll = std::log(lambda);
  auto log_pmf = [&](long long i) {
    return -lambda + static_cast<double>(i) * ll -
           std::lgamma(static_cast<double>(i) + 1.0);
  };
  if (cutoff < 0) {
    // Smallest N with untruncated upper tail below 1e-14: accumulate until
    // the cumulative mass passes 1 - 1e-14 beyond the mode.
    // Past the mode the terms decay faster than geometrically, so a term
    // below 1e-18 also certifies the remaining tail is far below 1e-14 even
    // when accumulated rounding keeps `cum` from ever crossing the threshold.
    long double cum = 0.0L;
    long long i = 0;
    for (;; ++i) {
      check_support(i, "poisson");
      const double term = std::exp(log_pmf(i));
      cum += term;
      if (static_cast<double>(i) > lambda &&
          (cum >= 1.0L - 1e-14L || term < 1e-18)) {
        break;
      }
    }
    cutoff = i;
  }
  if (cutoff < 1) throw ParameterViolation("poisson: cutoff must be >= 1");
  check_support(cutoff, "poisson");
  dist.pmf_.assign(static_cast<std::size_t>(cutoff) + 1, 0.0);
  for (long long i = 0; i <= cutoff; ++i) {
    dist.pmf_[static_cast<std::size_t>(i)] = std::exp(log_pmf(i));
  }
  Kahan total;
  for (double v : dist.pmf_) total.add(v);
  for (double& v : dist.pmf_) v /= total.sum;
  std::string label = "poisson:lambda=" + format_double(lambda) +
                      ",cutoff=" + std::to_string(cutoff);
  dist.finalize(std::move(label));
  return dist;
}

OffspringDistribution OffspringDistribution::power_law(double exponent,
                                                       long long cutoff) {
  if (cutoff < 1) throw ParameterViolation("powerlaw: cutoff must be >= 1");
  if (!(exponent > 0.0)) {
    throw ParameterViolation("powerlaw: exponent must be > 0");
  }
  check_support(cutoff, "powerlaw");
  OffspringDistribution dist;
  dist.kind_ = DistKind::PowerLaw;
  dist.pmf_.assign(static_cast<std::size_t>(cutoff) + 1, 0.0);
  Kahan total;
  for (long long i = 1; i <= cutoff; ++i) {
    const double w = std::pow(static_cast<double>(i), -exponent);
    dist.pmf_[static_cast<std::size_t>(i)] = w;
    total.add(w);
  }
  for (double& v : dist.pmf_) v /= total.sum;
  std::string label = "powerlaw:exponent=" + format_double(exponent) +
                      ",cutoff=" + std::to_string(cutoff);
  dist.finalize(std::move(label));
  return dist;
}

OffspringDistribution OffspringDistribution::explicit_pmf(
    std::vector<double> probabilities) {
  if (probabilities.empty()) {
    throw ParameterViolation("explicit: empty probability list");
  }
  check_support(static_cast<long long>(probabilities.size()) - 1, "explicit");
  Kahan total;
  for (double v : probabilities) {
    if (!(v >= 0.0)) {
      throw ParameterViolation("explicit: probabilities must be >= 0");
    }
    total.add(v);
  }
  if (std::abs(total.sum - 1.0) > 1e-6) {
    throw ParameterViolation("explicit: probabilities sum to " +
                             format_double(total.sum) + ", expected 1");
  }
  OffspringDistribution dist;
  dist.kind_ = DistKind::Explicit;
  dist.pmf_ = std::move(probabilities);
  for (double& v : dist.pmf_) v /= total.sum;  // absorb rounding residue
  std::string label = "explicit:";
  for (std::size_t i = 0; i < dist.pmf_.size(); ++i) {
    if (i) label += ',';
    label += format_double(dist.pmf_[i]);
  }
  dist.finalize(std::move(label));
  return dist;
}

OffspringDistribution OffspringDistribution::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ValidationError("distribution spec '" + spec +
                          "': expected kind:params");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string body = spec.substr(colon + 1);
  if (kind == "explicit") {
    std::vector<double> probs;
    if (!body.empty() && body[0] == '@') {
      std::ifstream in(body.substr(1));
      if (!in) {
        throw ValidationError("distribution spec '" + spec +
                              "': cannot open pmf file");
      }
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        probs.push_back(to_real(line, spec));
      }
    } else {
      std::stringstream ss(body);
      std::string item;
      while (std::getline(ss, item, ',')) probs.push_back(to_real(item, spec));
    }
    if (probs.empty()) {
      throw ValidationError("distribution spec '" + spec +
                            "': no probabilities given");
    }
    return explicit_pmf(std::move(probs));
  }
  const auto kv = parse_kv(body, spec);
  auto find = [&](const char* key) -> const std::string* {
    for (const auto& [k, v] : kv) {
      if (k == key) return &v;
    }
    return nullptr;
  };
  auto require = [&](const char* key) -> const std::string& {
    const std::string* v = find(key);
    if (!v) {
      throw ValidationError("distribution spec '" + spec +
                            "': missing key '" + key + "'");
    }
    return *v;
  };
  if (kind == "deterministic") return deterministic(to_int(require("d"), spec));
  if (kind == "binomial") {
    return binomial(to_int(require("n"), spec), to_real(require("p"), spec));
  }
  if (kind == "poisson") {
    const std::string* cutoff = find("cutoff");
    return poisson(to_real(require("lambda"), spec),
                   cutoff ? to_int(*cutoff, spec) : -1);
  }
  if (kind == "powerlaw") {
    return power_law(to_real(require("exponent"), spec),
                     to_int(require("cutoff"), spec));
  }
  throw ValidationError("distribution spec '" + spec +
                        "': unknown kind '" + kind + "'");
}

double OffspringDistribution::pmf(long long i) const {
  if (i < 0) throw ParameterViolation("pmf: index must be >= 0");
  if (i > support_max_) return 0.0;
  return pmf_[static_cast<std::size_t>(i)];
}

double OffspringDistribution::tail(long long x, TailSide side) const {
  if (x < 0) throw ParameterViolation("tail: x must be >= 0");
  if (side == TailSide::Upper) {
    if (x > support_max_) return 0.0;
    return suffix_[static_cast<std::size_t>(x)];
  }
  if (x > support_max_) return prefix_[pmf_.size()];
  return prefix_[static_cast<std::size_t>(x)];
}

double OffspringDistribution::size_biased_upper_tail(long long x) const {
  if (x < 0) throw ParameterViolation("size_biased_upper_tail: x must be >= 0");
  if (x >= support_max_) return 0.0;
  return sb_suffix_[static_cast<std::size_t>(x) + 1];
}

double OffspringDistribution::generating_function(double z) const {
  double acc = 0.0;
  for (std::size_t i = pmf_.size(); i-- > 0;) acc = acc * z + pmf_[i];
  return acc;
}

long long OffspringDistribution::sample(Rng& rng) const {
  if (kind_ == DistKind::Deterministic) return det_d_;
  return alias_->sample(rng);
}

unsigned long long OffspringDistribution::sample_sum(unsigned long long count,
                                                     Rng& rng) const {
  if (count == 0) return 0;
  const unsigned long long cap = 1ull << 62;
  if (support_max_ > 0 &&
      count > cap / static_cast<unsigned long long>(support_max_)) {
    throw ResourceLimit("sample_sum: aggregate draw would overflow");
  }
  switch (kind_) {
    case DistKind::Deterministic:
      return count * static_cast<unsigned long long>(det_d_);
    case DistKind::Binomial: {
      // Sum of count Binomial(n,p) draws is Binomial(count*n, p); split into
      // bounded chunks so the standard sampler stays in its accurate regime.
      unsigned long long trials =
          count * static_cast<unsigned long long>(bin_n_);
      const unsigned long long chunk = 1ull << 30;
      unsigned long long total = 0;
      while (trials > 0) {
        const auto t = static_cast<long long>(std::min(trials, chunk));
        std::binomial_distribution<long long> d(t, bin_p_);
        total += static_cast<unsigned long long>(d(rng));
        trials -= static_cast<unsigned long long>(t);
      }
      return total;
    }
    case DistKind::Poisson: {
      long double rate =
          static_cast<long double>(poi_lambda_) * static_cast<long double>(count);
      const long double chunk = 1e6L;
      unsigned long long total = 0;
      while (rate > 0.0L) {
        const double r = static_cast<double>(std::min(rate, chunk));
        std::poisson_distribution<long long> d(r);
        total += static_cast<unsigned long long>(d(rng));
        rate -= chunk;
      }
      return total;
    }
    case DistKind::PowerLaw:
    case DistKind::Explicit:
      break;
  }
  if (count <= 4096) {
    unsigned long long total = 0;
    for (unsigned long long i = 0; i < count; ++i) {
      total += static_cast<unsigned long long>(sample(rng));
    }
    return total;
  }
  // Multinomial split: allocate `count` draws across the support one value at
  // a time, conditioning on the mass not yet consumed.
  unsigned long long remaining = count;
  unsigned long long total = 0;
  for (long long i = 0; i <= support_max_ && remaining > 0; ++i) {
    const double mass_here = pmf_[static_cast<std::size_t>(i)];
    if (mass_here <= 0.0) continue;
    const double mass_rest = suffix_[static_cast<std::size_t>(i)];
    double p = mass_here / mass_rest;
    if (i == support_max_ || p > 1.0) p = 1.0;
    unsigned long long here = 0;
    if (p >= 1.0) {
      here = remaining;
    } else {
      unsigned long long trials = remaining;
      const unsigned long long chunk = 1ull << 30;
      while (trials > 0) {
        const auto t = static_cast<long long>(std::min(trials, chunk));
        std::binomial_distribution<long long> d(t, p);
        here += static_cast<unsigned long long>(d(rng));
        trials -= static_cast<unsigned long long>(t);
      }
    }
    total += here * static_cast<unsigned long long>(i);
    remaining -= here;
  }
  return total;
}

OffspringDistribution::ConcentrationReport check_well_concentrated(
    const OffspringDistribution& dist, double c, double gamma,
    long long x_max) {
  if (!(c > 0.0)) throw ParameterViolation("check_well_concentrated: c <= 0");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ParameterViolation("check_well_concentrated: gamma outside (0,1)");
  }
  const double d = dist.mean();
  const auto x_lo =
      static_cast<long long>(std::ceil((1.0 + gamma) * d));
  if (x_max < x_lo) {
    throw ParameterViolation(
        "check_well_concentrated: x_max below ceil((1+gamma)*mean)");
  }
  OffspringDistribution::ConcentrationReport report{
      true, std::numeric_limits<double>::infinity(), -1};
  auto consider = [&](long long x, double slack) {
    if (slack < report.worst_slack) {
      report.worst_slack = slack;
      report.worst_x = x;
    }
  };
  const long long x_hi = std::min(x_max, dist.support_max() + 1);
  for (long long x = std::max<long long>(x_lo, 1); x <= x_hi; ++x) {
    const double bound = std::pow(static_cast<double>(x), -c);
    consider(x, bound - dist.tail(x, TailSide::Upper));
  }
  if (x_max > x_hi) {
    // Tails past the support are exactly zero; the slack is smallest at the
    // far end of the range where the bound itself is smallest.
    consider(x_max, std::pow(static_cast<double>(x_max), -c));
  }
  if (d > 0.0) {
    const auto low_cut = static_cast<long long>(std::floor((1.0 - gamma) * d));
    const double low_mass =
        low_cut < 0 ? 0.0 : dist.tail(low_cut + 1, TailSide::LowerStrict);
    consider(low_cut, std::pow(d, -c) - low_mass);
  }
  report.holds = report.worst_slack >= 0.0;
  return report;
}

}  // namespace recon
