#include "copulacp/marginals.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "copulacp/rng.hpp"

namespace copulacp {

void validate_bootstrap(const BootstrapConfig& cfg, std::size_t series_length) {
  if (cfg.blocks == 0) throw std::invalid_argument("bootstrap: number of blocks must be >= 1");
  if (cfg.replicates == 0) throw std::invalid_argument("bootstrap: replicate count must be >= 1");
  if (series_length == 0 || series_length % cfg.blocks != 0) {
    throw std::invalid_argument("bootstrap: " + std::to_string(cfg.blocks) +
                                " blocks do not divide series length " +
                                std::to_string(series_length));
  }
}

std::vector<std::vector<double>> moving_block_bootstrap(std::span<const double> series,
                                                        const BootstrapConfig& cfg) {
  validate_bootstrap(cfg, series.size());
  const std::size_t n = series.size();
  const std::size_t block = n / cfg.blocks;
  const std::size_t starts = n - block + 1;
  std::vector<std::vector<double>> reps(cfg.replicates, std::vector<double>(n));
  for (std::size_t b = 0; b < cfg.replicates; ++b) {
    Stream rng = Stream::keyed(cfg.seed, {b});
    auto out = reps[b].begin();
    for (std::size_t m = 0; m < cfg.blocks; ++m) {
      const std::size_t s = rng.below(starts);
      out = std::copy_n(series.begin() + static_cast<std::ptrdiff_t>(s), block, out);
    }
  }
  return reps;
}

std::string to_string(MarginalFamily family) {
  return family == MarginalFamily::Gamma ? "gamma" : "weibull";
}

MarginalFamily marginal_family_from_string(const std::string& name) {
  if (name == "gamma") return MarginalFamily::Gamma;
  if (name == "weibull") return MarginalFamily::Weibull;
  throw std::invalid_argument("unknown marginal family '" + name + "'");
}

void validate_fit(const MarginalFit& fit) {
  if (!(fit.shape > 0.0) || !(fit.rate > 0.0) || !std::isfinite(fit.shape) ||
      !std::isfinite(fit.rate)) {
    throw std::invalid_argument("marginal fit: shape and rate must be positive and finite");
  }
}

double MarginalFit::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (family == MarginalFamily::Gamma) return boost::math::gamma_p(shape, rate * x);
  return -std::expm1(-std::pow(rate * x, shape));
}

double MarginalFit::log_pdf(double x) const {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  if (family == MarginalFamily::Gamma) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
  }
  const double z = rate * x;
  return std::log(shape) + std::log(rate) + (shape - 1.0) * std::log(z) - std::pow(z, shape);
}

double MarginalFit::bic() const {
  return -2.0 * loglik + 2.0 * std::log(static_cast<double>(n_effective));
}

namespace {

struct SampleSummary {
  double mean = 0.0;
  double mean_log = 0.0;
  double variance = 0.0;
};

SampleSummary summarize_positive(std::span<const double> samples, const char* who) {
  if (samples.size() < 10) {
    throw std::invalid_argument(std::string(who) + ": need at least 10 samples");
  }
  SampleSummary s;
  for (const double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(who) + ": samples must be positive and finite");
    }
    s.mean += x;
    s.mean_log += std::log(x);
  }
  const double n = static_cast<double>(samples.size());
  s.mean /= n;
  s.mean_log /= n;
  for (const double x : samples) s.variance += (x - s.mean) * (x - s.mean);
  s.variance /= n - 1.0;
  if (!(s.variance > 0.0) || !(std::log(s.mean) - s.mean_log > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": degenerate (zero-variance) samples");
  }
  return s;
}

double total_loglik(const MarginalFit& fit, std::span<const double> samples) {
  double ll = 0.0;
  for (const double x : samples) ll += fit.log_pdf(x);
  return ll;
}

}  // namespace

GammaFit fit_gamma_mle(std::span<const double> samples) {
  const SampleSummary s = summarize_positive(samples, "fit_gamma_mle");
  const double target = std::log(s.mean) - s.mean_log;

  // Minka's closed-form start lands within a few percent of the root.
  double nu = (3.0 - target + std::sqrt((target - 3.0) * (target - 3.0) + 24.0 * target)) /
              (12.0 * target);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const double f = std::log(nu) - boost::math::digamma(nu) - target;
    const double df = 1.0 / nu - boost::math::trigamma(nu);
    double step = f / df;
    // f is decreasing and convex in nu; keep iterates positive.
    while (nu - step <= 0.0) step *= 0.5;
    const double next = nu - step;
    const double rel = std::abs(next - nu) / nu;
    nu = next;
    if (rel < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) throw std::runtime_error("fit_gamma_mle: shape iteration did not converge");

  GammaFit fit;
  fit.family = MarginalFamily::Gamma;
  fit.shape = nu;
  fit.rate = nu / s.mean;
  fit.n_effective = samples.size();
  fit.loglik = total_loglik(fit, samples);
  if (!std::isfinite(fit.loglik)) throw std::runtime_error("fit_gamma_mle: non-finite likelihood");
  return fit;
}

MarginalFit fit_weibull_mle(std::span<const double> samples) {
  const SampleSummary s = summarize_positive(samples, "fit_weibull_mle");
  // Work on x / max to keep x^k in range.
  const double xmax = *std::max_element(samples.begin(), samples.end());
  std::vector<double> logs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(samples[i] / xmax);
  const double mean_log = s.mean_log - std::log(xmax);

  // g(k) = 1/k + mean(log y) - sum y^k log y / sum y^k, decreasing in k.
  auto g = [&](double k, double* dg) {
    double a = 0.0, b = 0.0, c = 0.0;
    for (const double l : logs) {
      const double w = std::exp(k * l);
      a += w;
      b += w * l;
      c += w * l * l;
    }
    if (dg != nullptr) *dg = -1.0 / (k * k) - (c / a - (b / a) * (b / a));
    return 1.0 / k + mean_log - b / a;
  };

  double k = 1.2 * s.mean / std::sqrt(s.variance);
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    double dg = 0.0;
    const double val = g(k, &dg);
    double step = val / dg;
    while (k - step <= 0.0) step *= 0.5;
    const double next = k - step;
    const double rel = std::abs(next - k) / k;
    k = next;
    if (rel < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) throw std::runtime_error("fit_weibull_mle: shape iteration did not converge");

  double mean_pow = 0.0;
  for (const double l : logs) mean_pow += std::exp(k * l);
  mean_pow /= static_cast<double>(logs.size());
  const double scale = xmax * std::pow(mean_pow, 1.0 / k);

  MarginalFit fit;
  fit.family = MarginalFamily::Weibull;
  fit.shape = k;
  fit.rate = 1.0 / scale;
  fit.n_effective = samples.size();
  fit.loglik = total_loglik(fit, samples);
  return fit;
}

MarginalFit fit_marginal(std::span<const double> samples, MarginalFamily family) {
  return family == MarginalFamily::Gamma ? fit_gamma_mle(samples) : fit_weibull_mle(samples);
}

MarginalFit select_marginal_by_bic(std::span<const double> samples) {
  MarginalFit g = fit_gamma_mle(samples);
  MarginalFit w = fit_weibull_mle(samples);
  return w.bic() < g.bic() ? w : g;
}

double gamma_cdf(const GammaFit& fit, double x) {
  validate_fit(fit);
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(fit.shape, fit.rate * x);
}

std::vector<MarginalFit> bootstrap_band_marginals(std::span<const double> epoch,
                                                  std::span<const BandSpec> bands,
                                                  double sampling_rate_hz,
                                                  const BootstrapConfig& cfg,
                                                  std::span<const Scaling> scalings,
                                                  MarginalFamily family) {
  if (bands.size() != scalings.size()) {
    throw std::invalid_argument("bootstrap_band_marginals: one scaling per band required");
  }
  validate_bootstrap(cfg, epoch.size());
  std::vector<std::vector<std::size_t>> bins;
  for (const auto& band : bands) bins.push_back(band_bins(band, epoch.size(), sampling_rate_hz));

  std::vector<std::vector<double>> pools(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) pools[b].reserve(cfg.replicates * bins[b].size());

  const auto reps = moving_block_bootstrap(epoch, cfg);
  for (const auto& rep : reps) {
    const auto mags = fourier_magnitudes(rep);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      for (const std::size_t k : bins[b]) {
        const double y = scalings[b].apply(mags[k]);
        if (y > 0.0) pools[b].push_back(y);
      }
    }
  }
  std::vector<MarginalFit> fits;
  fits.reserve(bands.size());
  for (const auto& pool : pools) fits.push_back(fit_marginal(pool, family));
  return fits;
}

MarginalFit bootstrap_gamma_marginal(std::span<const double> epoch, const BandSpec& band,
                                     double sampling_rate_hz, const BootstrapConfig& cfg,
                                     const Scaling& scaling, MarginalFamily family) {
  return bootstrap_band_marginals(epoch, std::span(&band, 1), sampling_rate_hz, cfg,
                                  std::span(&scaling, 1), family)
      .front();
}

double asymptotic_magnitude_pdf(double lambda, double x) {
  if (!(lambda > 0.0)) throw std::invalid_argument("asymptotic_magnitude_pdf: lambda must be > 0");
  if (!(x > 0.0)) return 0.0;
  return 2.0 * x / lambda * std::exp(-x * x / lambda);
}

double asymptotic_magnitude_cdf(double lambda, double x) {
  if (!(lambda > 0.0)) throw std::invalid_argument("asymptotic_magnitude_cdf: lambda must be > 0");
  if (!(x > 0.0)) return 0.0;
  return -std::expm1(-x * x / lambda);
}

}  // namespace copulacp
