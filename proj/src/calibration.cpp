#include "copulacp/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "copulacp/rng.hpp"

namespace copulacp {

double ThresholdTable::at(const std::string& band) const {
  auto it = thresholds.find(band);
  if (it == thresholds.end()) throw std::out_of_range("no threshold for band '" + band + "'");
  return it->second;
}

ThresholdTable reference_thresholds_dgp2() {
  ThresholdTable t;
  t.alpha = 0.01;
  t.source = "published-dgp2";
  t.thresholds = {{"delta", 0.0149}, {"theta", 0.0625}, {"alpha", 0.0101},
                  {"beta", 0.0050},  {"gamma", 0.0103}};
  return t;
}

ThresholdTable reference_thresholds_dgp1() {
  ThresholdTable t;
  t.alpha = 0.01;
  t.source = "published-dgp1";
  t.thresholds = {{"delta", 0.0102}, {"theta", 0.0451}, {"alpha", 0.0090},
                  {"beta", 0.0038},  {"gamma", 0.0048}};
  return t;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ThresholdTable calibrate_thresholds(const std::map<std::string, std::vector<double>>& null_stats,
                                    double alpha, const std::string& source) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("calibrate: alpha must lie in (0, 1)");
  if (null_stats.empty()) throw std::invalid_argument("calibrate: no bands");
  ThresholdTable t;
  t.alpha = alpha;
  t.source = source;
  for (const auto& [band, stats] : null_stats) {
    if (stats.size() < 100) {
      throw std::invalid_argument("calibrate: band '" + band + "' has " +
                                  std::to_string(stats.size()) +
                                  " null statistics, need at least 100");
    }
    t.thresholds[band] = quantile_type7(stats, 1.0 - alpha);
    t.n_null_stats[band] = stats.size();
  }
  return t;
}

std::string to_string(NoiseConvention c) {
  return c == NoiseConvention::Variance ? "variance" : "stddev";
}

NoiseConvention noise_convention_from_string(const std::string& name) {
  if (name == "variance") return NoiseConvention::Variance;
  if (name == "stddev") return NoiseConvention::StdDev;
  throw std::invalid_argument("unknown noise convention '" + name + "'");
}

std::string to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::Dgp1A: return "dgp1_A";
    case DgpKind::Dgp1B: return "dgp1_B";
    case DgpKind::Dgp2: return "dgp2";
  }
  return "unknown";
}

double dgp2_cycles(int latent) {
  static constexpr double cycles[] = {4.0, 6.0, 9.0, 13.0, 15.0, 150.0};
  if (latent < 1 || latent > 6) {
    throw std::invalid_argument("DGP 2 latent index must be in 1..6, got " + std::to_string(latent));
  }
  return cycles[latent - 1];
}

void validate_dgp(const DgpSpec& spec) {
  if (spec.epochs == 0 || spec.samples_per_epoch == 0) {
    throw std::invalid_argument("dgp: epochs and samples per epoch must be >= 1");
  }
  if (spec.kind == DgpKind::Dgp2) {
    dgp2_cycles(spec.latent);
    if (!(std::abs(spec.rho) < 1.0)) throw std::invalid_argument("dgp2: |rho| must be < 1");
  }
}

namespace {

constexpr std::size_t kBurnIn = 1000;

double noise_sd(double parameter, NoiseConvention c) {
  return c == NoiseConvention::Variance ? std::sqrt(parameter) : parameter;
}

// AR(p <= 2) path with unit Gaussian innovations after burn-in.
std::vector<double> ar_path(double phi1, double phi2, std::size_t n, Stream& rng) {
  std::vector<double> x(n);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t t = 0; t < kBurnIn + n; ++t) {
    const double next = phi1 * x1 + phi2 * x2 + rng.normal();
    x2 = x1;
    x1 = next;
    if (t >= kBurnIn) x[t - kBurnIn] = next;
  }
  return x;
}

}  // namespace

std::vector<std::vector<double>> simulate_dgp1(char variant, std::size_t epochs,
                                               std::size_t samples_per_epoch, std::uint64_t seed,
                                               NoiseConvention noise) {
  if (variant != 'A' && variant != 'B') throw std::invalid_argument("dgp1: variant must be A or B");
  if (epochs == 0 || samples_per_epoch == 0) throw std::invalid_argument("dgp1: empty shape");
  const double offset = variant == 'B' ? 1.0 : 0.0;
  const double sd = noise_sd(0.1, noise);
  std::vector<std::vector<double>> out(epochs);
  for (std::size_t r = 0; r < epochs; ++r) {
    Stream rng = Stream::keyed(seed, {r});
    auto x = ar_path(0.9, 0.0, samples_per_epoch, rng);
    for (double& z : x) z = offset + 0.9 * z + sd * rng.normal();
    out[r] = std::move(x);
  }
  return out;
}

std::vector<std::vector<double>> simulate_dgp2(int latent, std::size_t epochs,
                                               std::size_t samples_per_epoch, std::uint64_t seed,
                                               double rho, NoiseConvention noise) {
  const double cycles = dgp2_cycles(latent);
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("dgp2: |rho| must be < 1");
  if (epochs == 0 || samples_per_epoch == 0) throw std::invalid_argument("dgp2: empty shape");
  const double phase = 2.0 * std::numbers::pi * cycles / static_cast<double>(samples_per_epoch);
  const double phi1 = 2.0 * rho * std::cos(phase);
  const double phi2 = -rho * rho;
  std::vector<std::vector<double>> out(epochs);
  for (std::size_t r = 0; r < epochs; ++r) {
    Stream rng = Stream::keyed(seed, {r});
    auto x = ar_path(phi1, phi2, samples_per_epoch, rng);
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (const double v : x) var += (v - mean) * (v - mean);
    const double sd_x = std::sqrt(var / static_cast<double>(x.size() - 1));
    const double sd = noise_sd(0.1 * sd_x, noise);
    for (double& z : x) z += sd * rng.normal();
    out[r] = std::move(x);
  }
  return out;
}

std::vector<std::vector<double>> simulate(const DgpSpec& spec) {
  validate_dgp(spec);
  switch (spec.kind) {
    case DgpKind::Dgp1A:
      return simulate_dgp1('A', spec.epochs, spec.samples_per_epoch, spec.seed, spec.noise);
    case DgpKind::Dgp1B:
      return simulate_dgp1('B', spec.epochs, spec.samples_per_epoch, spec.seed, spec.noise);
    case DgpKind::Dgp2:
      return simulate_dgp2(spec.latent, spec.epochs, spec.samples_per_epoch, spec.seed, spec.rho,
                           spec.noise);
  }
  return {};
}

EpochTensor scenario_tensor(std::span<const DgpSpec> segments) {
  if (segments.empty()) throw std::invalid_argument("scenario: no segments");
  const std::size_t t = segments.front().samples_per_epoch;
  const double fs = segments.front().sampling_rate_hz;
  std::size_t total = 0;
  for (const auto& s : segments) {
    validate_dgp(s);
    if (s.samples_per_epoch != t || s.sampling_rate_hz != fs) {
      throw std::invalid_argument("scenario: segments differ in epoch length or sampling rate");
    }
    total += s.epochs;
  }
  EpochTensor tensor(1, total, t, fs);
  std::size_t r = 0;
  for (const auto& s : segments) {
    for (const auto& ep : simulate(s)) {
      auto dst = tensor.epoch(0, r++);
      std::copy(ep.begin(), ep.end(), dst.begin());
    }
  }
  return tensor;
}

std::map<std::string, std::vector<double>> null_ks_statistics(const DgpSpec& spec,
                                                              std::size_t replicates,
                                                              std::span<const BandSpec> bands,
                                                              const DetectConfig& cfg) {
  if (replicates == 0) throw std::invalid_argument("calibrate: replicate count must be >= 1");
  std::map<std::string, double> unused;
  for (const auto& b : bands) unused[b.name] = 1.0;
  std::map<std::string, std::vector<double>> pooled;
  for (std::size_t k = 0; k < replicates; ++k) {
    DgpSpec s = spec;
    s.seed = derive_seed(spec.seed, {k});
    const EpochTensor tensor = scenario_tensor(std::span(&s, 1));
    DetectConfig c = cfg;
    c.bootstrap.seed = derive_seed(cfg.bootstrap.seed, {k});
    for (const auto& rep : detect_channel(tensor, 0, bands, c, unused)) {
      auto& dst = pooled[rep.band];
      dst.insert(dst.end(), rep.ks.stats.begin(), rep.ks.stats.end());
    }
  }
  return pooled;
}

std::map<std::string, std::vector<double>> null_ks_statistics_dgp2(
    const DgpSpec& base, std::size_t replicates, std::span<const BandSpec> bands,
    const DetectConfig& cfg) {
  std::map<std::string, std::vector<double>> pooled;
  for (int i = 1; i <= 6; ++i) {
    DgpSpec s = base;
    s.kind = DgpKind::Dgp2;
    s.latent = i;
    s.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(i)});
    DetectConfig c = cfg;
    c.bootstrap.seed = derive_seed(cfg.bootstrap.seed, {static_cast<std::uint64_t>(i)});
    for (auto& [band, stats] : null_ks_statistics(s, replicates, bands, c)) {
      auto& dst = pooled[band];
      dst.insert(dst.end(), stats.begin(), stats.end());
    }
  }
  return pooled;
}

EpochTensor simulate_logistic_gate(const GateSpec& spec) {
  if (spec.epochs == 0 || spec.samples_per_epoch == 0) {
    throw std::invalid_argument("gate: epochs and samples per epoch must be >= 1");
  }
  if (spec.switch_epoch < 1 || spec.switch_epoch > spec.epochs) {
    throw std::invalid_argument("gate: switch epoch must lie in 1..epochs");
  }
  EpochTensor tensor(2, spec.epochs, spec.samples_per_epoch, spec.sampling_rate_hz);
  for (std::size_t r = 0; r < spec.epochs; ++r) {
    Stream rng = Stream::keyed(spec.seed, {r});
    const auto x = ar_path(0.9, 0.0, spec.samples_per_epoch, rng);
    const double sign = r + 1 < spec.switch_epoch ? -1.0 : 1.0;
    auto xs = tensor.epoch(0, r);
    auto ys = tensor.epoch(1, r);
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double gate = 1.0 / (1.0 + std::exp(-sign * x[t]));
      xs[t] = x[t];
      ys[t] = x[t] * gate + rng.normal();
    }
  }
  return tensor;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: need two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: constant sample");
  return sxy / std::sqrt(sxx * syy);
}

PowerResult power_scenario(std::span<const DgpSpec> segments, const ThresholdTable& thresholds,
                           std::span<const BandSpec> bands, const DetectConfig& cfg) {
  if (segments.size() < 2) throw std::invalid_argument("power scenario: need at least 2 segments");
  const EpochTensor tensor = scenario_tensor(segments);
  PowerResult out;
  out.reports = detect_channel(tensor, 0, bands, cfg, thresholds.thresholds, thresholds.alpha);

  std::vector<std::size_t> junctions;
  std::size_t acc = 0;
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    acc += segments[s].epochs;
    junctions.push_back(acc);
  }
  for (const auto& rep : out.reports) {
    out.exceedances[rep.band] = rep.flagged_epochs.size();
    auto& checks = out.boundaries[rep.band];
    for (const std::size_t j : junctions) {
      // The pair C^(j, j+1) straddles the junction; it enters D(j) and D(j+1).
      BoundaryCheck bc;
      bc.last_epoch_before = j;
      bc.expected = {j, j + 1};
      bc.both_flagged = std::all_of(bc.expected.begin(), bc.expected.end(), [&](std::size_t e) {
        return std::binary_search(rep.flagged_epochs.begin(), rep.flagged_epochs.end(), e);
      });
      checks.push_back(bc);
    }
  }
  return out;
}

}  // namespace copulacp
