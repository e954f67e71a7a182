#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "copulacp/ks_change.hpp"
#include "copulacp/spectral_bands.hpp"

namespace copulacp {

// Per-band critical KS values at significance alpha.
struct ThresholdTable {
  double alpha = 0.01;
  std::string source = "custom";  // dgp1 | dgp2 | published-dgp1 | published-dgp2 | custom
  std::map<std::string, double> thresholds;
  std::map<std::string, std::size_t> n_null_stats;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;

  double at(const std::string& band) const;
};

// Published null 99th percentiles from the AR(2) simulation study, used as
// the detector's default thresholds.
ThresholdTable reference_thresholds_dgp2();
// Same study, AR(1) scenario.
ThresholdTable reference_thresholds_dgp1();

// Type-7 (linear interpolation) empirical quantile, p in [0, 1].
double quantile_type7(std::vector<double> values, double p);

// Empirical (1 - alpha) quantile per band; at least 100 statistics per band.
ThresholdTable calibrate_thresholds(const std::map<std::string, std::vector<double>>& null_stats,
                                    double alpha, const std::string& source = "custom");

// How the second argument of N(0, s) in the simulation designs is read.
enum class NoiseConvention { Variance, StdDev };

std::string to_string(NoiseConvention c);
NoiseConvention noise_convention_from_string(const std::string& name);

enum class DgpKind { Dgp1A, Dgp1B, Dgp2 };

struct DgpSpec {
  DgpKind kind = DgpKind::Dgp1A;
  int latent = 1;  // DGP 2 latent index 1..6
  std::size_t epochs = 100;
  std::size_t samples_per_epoch = 1000;
  double sampling_rate_hz = 1000.0;
  double rho = 0.97;  // DGP 2 root modulus
  NoiseConvention noise = NoiseConvention::Variance;
  std::uint64_t seed = 0;
};

std::string to_string(DgpKind kind);
void validate_dgp(const DgpSpec& spec);

// Phase of the DGP 2 latent index i in cycles per epoch: {4, 6, 9, 13, 15, 150}.
double dgp2_cycles(int latent);

// DGP 1: X ~ AR(1), phi = 0.9, unit innovations, 1000-sample burn-in, fresh per
// epoch; Z_A = 0.9 X + e and Z_B = 1 + 0.9 X + e with e ~ N(0, 0.1).
std::vector<std::vector<double>> simulate_dgp1(char variant, std::size_t epochs,
                                               std::size_t samples_per_epoch, std::uint64_t seed,
                                               NoiseConvention noise = NoiseConvention::Variance);

// DGP 2: AR(2) with complex roots rho * exp(+-i p), phi1 = 2 rho cos p,
// phi2 = -rho^2; Z = X + e with e ~ N(0, 0.1 sd(X)) per epoch.
std::vector<std::vector<double>> simulate_dgp2(int latent, std::size_t epochs,
                                               std::size_t samples_per_epoch, std::uint64_t seed,
                                               double rho = 0.97,
                                               NoiseConvention noise = NoiseConvention::Variance);

std::vector<std::vector<double>> simulate(const DgpSpec& spec);

// Concatenates segments along the epoch axis into a one-channel tensor.
EpochTensor scenario_tensor(std::span<const DgpSpec> segments);

// Null KS statistics from `replicates` independent runs of one stationary DGP.
// Replicate k uses seed derive_seed(spec.seed, {k}).
std::map<std::string, std::vector<double>> null_ks_statistics(const DgpSpec& spec,
                                                              std::size_t replicates,
                                                              std::span<const BandSpec> bands,
                                                              const DetectConfig& cfg);

// DGP 2 null pool: every latent index 1..6, `replicates` runs each.
std::map<std::string, std::vector<double>> null_ks_statistics_dgp2(
    const DgpSpec& base, std::size_t replicates, std::span<const BandSpec> bands,
    const DetectConfig& cfg);

// Two-channel logistic gate: X ~ AR(1), phi = 0.9, and
// Y = X g(-X) + e before the switch, Y = X g(X) + e from switch_epoch on,
// with g the logistic function and e ~ N(0, 1). Channel 0 is X, channel 1 Y.
struct GateSpec {
  std::size_t epochs = 200;
  std::size_t samples_per_epoch = 1000;
  std::size_t switch_epoch = 101;  // 1-based first epoch of the second regime
  double sampling_rate_hz = 1000.0;
  std::uint64_t seed = 0;
};

EpochTensor simulate_logistic_gate(const GateSpec& spec);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct BoundaryCheck {
  std::size_t last_epoch_before = 0;  // 1-based last epoch of the left segment
  std::vector<std::size_t> expected;  // the two comparisons touching the junction
  bool both_flagged = false;
};

struct PowerResult {
  std::vector<ChangepointReport> reports;  // one per band
  std::map<std::string, std::vector<BoundaryCheck>> boundaries;
  std::map<std::string, std::size_t> exceedances;
};

// Runs the detector over concatenated segments and checks, per band, whether
// the two statistics that straddle each junction exceed the threshold.
PowerResult power_scenario(std::span<const DgpSpec> segments, const ThresholdTable& thresholds,
                           std::span<const BandSpec> bands, const DetectConfig& cfg);

}  // namespace copulacp
