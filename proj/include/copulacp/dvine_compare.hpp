#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "copulacp/archimedean.hpp"
#include "copulacp/marginals.hpp"
#include "copulacp/spectral_bands.hpp"

namespace copulacp {

// Column-major pseudo-observations: columns[j][i] is variable j (an epoch, in
// temporal order) at observation i (a Fourier frequency of the band).
using VineData = std::vector<std::vector<double>>;

// D-vine over variables in a fixed order. trees[l][e] joins variables e and
// e + l + 1 given the ones between; levels past truncation_level are
// independent and not stored.
struct DVineModel {
  std::vector<std::size_t> order;
  std::size_t truncation_level = 2;
  std::vector<std::vector<CopulaModel>> trees;
  std::vector<MarginalFit> marginals;  // per variable; empty for rank input
  double loglik = 0.0;                 // sum of pair log-likelihoods at fit time

  std::size_t variables() const { return order.size(); }
};

// Sequential fit: tree 1 joins consecutive variables, every pair is chosen by
// AIC with maximum-likelihood parameters, and the conditional inputs of tree
// l + 1 come from h-functions of tree l.
DVineModel build_dvine(const VineData& data, std::size_t truncation_level,
                       std::span<const CopulaFamily> panel = default_panel(),
                       std::size_t jobs = 1);

// Per-observation log density of the vine, summed over the fitted trees.
std::vector<double> dvine_loglik_pointwise(const DVineModel& model, const VineData& data,
                                           std::size_t jobs = 1);

struct ClarkeResult {
  std::size_t xi = 0;
  std::size_t n = 0;
  double p_value = 1.0;
  std::vector<double> m;  // loglik_1 - loglik_2 per observation
};

// Two-sided exact binomial p-value of xi under Bin(n, 1/2), capped at 1.
double binomial_two_sided_p(std::size_t n, std::size_t xi);

// Sign test on per-observation log-likelihood differences. Zero differences
// count as non-exceedances; when every difference is zero the models are
// indistinguishable and p = 1.
ClarkeResult clarke_test(std::span<const double> loglik_1, std::span<const double> loglik_2);

// How band magnitudes become pseudo-observations for the vines.
enum class PseudoObsMode { BootstrapGamma, Ranks };

std::string to_string(PseudoObsMode mode);
PseudoObsMode pseudo_obs_mode_from_string(const std::string& name);

struct VineConfig {
  std::size_t truncation_level = 2;
  std::vector<CopulaFamily> panel = default_panel();
  BootstrapConfig bootstrap;
  MarginalFamily marginal = MarginalFamily::Gamma;
  PseudoObsMode pseudo_obs = PseudoObsMode::BootstrapGamma;
  std::size_t jobs = 1;
};

void validate_vine_config(const VineConfig& cfg);

// Half-open 0-based epoch range [first, last).
struct EpochRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first; }
};

// Pseudo-observations of one channel and band over the given epochs, with the
// magnitudes standardized by the min/max over `scaling_range`.
struct ChannelPseudoObs {
  VineData data;
  std::vector<MarginalFit> marginals;
};

ChannelPseudoObs channel_pseudo_observations(const EpochTensor& tensor, std::size_t channel,
                                             const BandSpec& band, EpochRange epochs,
                                             EpochRange scaling_range, const VineConfig& cfg);

// Pre versus post vine on one channel. Each vine is evaluated on the
// pseudo-observations of its own range and the two are differenced per
// frequency index.
// Ranges must not overlap, except that identical ranges are accepted as a
// self-comparison (every difference is zero).
ClarkeResult compare_prepost(const EpochTensor& tensor, std::size_t channel, const BandSpec& band,
                             EpochRange pre, EpochRange post, const VineConfig& cfg);

// Channel versus channel over the same epochs.
ClarkeResult compare_channels(const EpochTensor& tensor, std::size_t channel_a,
                              std::size_t channel_b, const BandSpec& band, EpochRange epochs,
                              const VineConfig& cfg);

struct ChannelPairResult {
  std::size_t channel_a = 0;
  std::size_t channel_b = 0;
  ClarkeResult result;
};

// Every unordered pair a < b of `channels`; each vine is fitted once.
std::vector<ChannelPairResult> compare_channel_matrix(const EpochTensor& tensor,
                                                      std::span<const std::size_t> channels,
                                                      const BandSpec& band, EpochRange epochs,
                                                      const VineConfig& cfg);

// Draws n observations of a stationary first-order Markov D-vine: tree 1 uses
// `pair` on every edge, deeper trees are independent.
VineData simulate_markov_dvine(const CopulaModel& pair, std::size_t variables, std::size_t n,
                               std::uint64_t seed);

}  // namespace copulacp
