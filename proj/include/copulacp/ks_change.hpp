#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "copulacp/archimedean.hpp"
#include "copulacp/marginals.hpp"
#include "copulacp/spectral_bands.hpp"

namespace copulacp {

// H(x, y) = C(F_u(x), F_v(y)) on the standardized magnitude square.
struct JointModel {
  CopulaModel copula;
  MarginalFit marginal_u;
  MarginalFit marginal_v;

  double cdf(double x, double y) const;
};

// What the KS statistic compares: the full joint CDFs (default) or the bare
// copulas on the uniform square.
enum class KsTarget { Joint, Copula };

std::string to_string(KsTarget target);
KsTarget ks_target_from_string(const std::string& name);

// H on a grid_size x grid_size uniform grid over [0,1]^2, row-major in x.
std::vector<double> cdf_on_grid(const JointModel& model, std::size_t grid_size,
                                KsTarget target = KsTarget::Joint);

// sup |H_A - H_B| over the grid, boundary included.
double bivariate_ks(const JointModel& a, const JointModel& b, std::size_t grid_size = 101,
                    KsTarget target = KsTarget::Joint);

struct KsSeries {
  std::size_t channel = 0;
  std::string band;
  std::size_t grid_size = 101;
  // 1-based middle epoch r of the comparison C^(r-1,r) vs C^(r,r+1).
  std::vector<std::size_t> epochs;
  std::vector<double> stats;
};

struct ChangepointReport {
  std::size_t channel = 0;
  std::string band;
  double threshold = 0.0;
  double alpha = 0.01;
  std::vector<std::size_t> flagged_epochs;
  KsSeries ks;
  // Per-epoch marginals and per-pair copulas, kept for diagnostics.
  std::vector<MarginalFit> marginals;
  std::vector<CopulaModel> pair_copulas;
};

struct DetectConfig {
  BootstrapConfig bootstrap;  // bootstrap.seed is the root seed of the run
  std::size_t grid_size = 101;
  std::vector<CopulaFamily> panel = default_panel();
  KsTarget target = KsTarget::Joint;
  MarginalFamily marginal = MarginalFamily::Gamma;
  std::size_t jobs = 1;
};

void validate_detect_config(const DetectConfig& cfg);

// Flags every epoch whose statistic is strictly above the threshold.
std::vector<std::size_t> flag_epochs(const KsSeries& ks, double threshold);

// Steps 3-5 of the detector, given standardized values and fitted marginals
// for epochs 1..R (one row per epoch, rows paired by frequency index).
struct PairStageResult {
  KsSeries ks;
  std::vector<CopulaModel> pair_copulas;
};

PairStageResult ks_from_marginals(std::span<const std::vector<double>> standardized,
                                  std::span<const MarginalFit> marginals,
                                  const DetectConfig& cfg);

// Full detector for one channel and several bands. Bootstrap replicates are
// shared between bands; epoch r of channel c bootstraps with the stream keyed
// by (seed, c, r). `thresholds` maps band name to critical value.
std::vector<ChangepointReport> detect_channel(const EpochTensor& tensor, std::size_t channel,
                                              std::span<const BandSpec> bands,
                                              const DetectConfig& cfg,
                                              const std::map<std::string, double>& thresholds,
                                              double alpha = 0.01);

ChangepointReport detect_changepoints(const EpochTensor& tensor, std::size_t channel,
                                      const BandSpec& band, const DetectConfig& cfg,
                                      double threshold, double alpha = 0.01);

}  // namespace copulacp
