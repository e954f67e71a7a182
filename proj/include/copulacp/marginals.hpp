#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "copulacp/spectral_bands.hpp"

namespace copulacp {

// Moving block bootstrap: M blocks of T/M consecutive samples each.
struct BootstrapConfig {
  std::size_t blocks = 20;
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
};

void validate_bootstrap(const BootstrapConfig& cfg, std::size_t series_length);

// Replicate b draws its block starts from Stream::keyed(cfg.seed, {b}), so any
// subset of replicates can be regenerated independently.
std::vector<std::vector<double>> moving_block_bootstrap(std::span<const double> series,
                                                        const BootstrapConfig& cfg);

enum class MarginalFamily { Gamma, Weibull };

std::string to_string(MarginalFamily family);
MarginalFamily marginal_family_from_string(const std::string& name);

// Two-parameter positive marginal. For Gamma, `rate` is the usual rate; for
// Weibull it is the reciprocal of the scale.
struct MarginalFit {
  MarginalFamily family = MarginalFamily::Gamma;
  double shape = 1.0;
  double rate = 1.0;
  std::size_t n_effective = 0;
  double loglik = 0.0;

  double cdf(double x) const;
  double log_pdf(double x) const;
  double bic() const;
};

using GammaFit = MarginalFit;

void validate_fit(const MarginalFit& fit);

// Gamma maximum likelihood. Shape from safeguarded Newton on
// log(nu) - digamma(nu) = log(mean) - mean(log x); rate = nu / mean.
GammaFit fit_gamma_mle(std::span<const double> samples);

MarginalFit fit_weibull_mle(std::span<const double> samples);

// Fits both families and keeps the one with the smaller BIC.
MarginalFit fit_marginal(std::span<const double> samples, MarginalFamily family);
MarginalFit select_marginal_by_bic(std::span<const double> samples);

// Regularized lower incomplete gamma P(shape, rate * x); 0 for x <= 0.
double gamma_cdf(const GammaFit& fit, double x);

// Bootstraps one epoch, recomputes band magnitudes for every replicate,
// standardizes them with the series-wide scaling and fits a marginal to the
// pooled values. Pooled values that fall at or below zero after scaling (a
// replicate can undershoot the series minimum) are left out of the fit.
MarginalFit bootstrap_gamma_marginal(std::span<const double> epoch, const BandSpec& band,
                                     double sampling_rate_hz, const BootstrapConfig& cfg,
                                     const Scaling& scaling,
                                     MarginalFamily family = MarginalFamily::Gamma);

// Same as above for several bands sharing the bootstrap replicates.
std::vector<MarginalFit> bootstrap_band_marginals(std::span<const double> epoch,
                                                  std::span<const BandSpec> bands,
                                                  double sampling_rate_hz,
                                                  const BootstrapConfig& cfg,
                                                  std::span<const Scaling> scalings,
                                                  MarginalFamily family = MarginalFamily::Gamma);

// Limiting density of the square root of an Exponential(mean lambda)
// periodogram ordinate: (2x/lambda) exp(-x^2/lambda) on x > 0.
double asymptotic_magnitude_pdf(double lambda, double x);
double asymptotic_magnitude_cdf(double lambda, double x);

}  // namespace copulacp
