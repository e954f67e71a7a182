#include "copulacp/ks_change.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "copulacp/parallel.hpp"
#include "copulacp/rng.hpp"

namespace copulacp {

double JointModel::cdf(double x, double y) const {
  return copula_cdf(copula, marginal_u.cdf(x), marginal_v.cdf(y));
}

std::string to_string(KsTarget target) { return target == KsTarget::Joint ? "joint" : "copula"; }

KsTarget ks_target_from_string(const std::string& name) {
  if (name == "joint") return KsTarget::Joint;
  if (name == "copula") return KsTarget::Copula;
  throw std::invalid_argument("unknown KS target '" + name + "'");
}

std::vector<double> cdf_on_grid(const JointModel& model, std::size_t grid_size, KsTarget target) {
  if (grid_size < 11) throw std::invalid_argument("bivariate_ks: grid size must be >= 11");
  validate_copula(model.copula);
  std::vector<double> fu(grid_size), fv(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double g = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    if (target == KsTarget::Joint) {
      fu[i] = model.marginal_u.cdf(g);
      fv[i] = model.marginal_v.cdf(g);
    } else {
      fu[i] = g;
      fv[i] = g;
    }
  }
  std::vector<double> h(grid_size * grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    for (std::size_t j = 0; j < grid_size; ++j) {
      h[i * grid_size + j] = copula_cdf(model.copula, fu[i], fv[j]);
    }
  }
  return h;
}

namespace {

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

double bivariate_ks(const JointModel& a, const JointModel& b, std::size_t grid_size,
                    KsTarget target) {
  if (target == KsTarget::Joint) {
    validate_fit(a.marginal_u);
    validate_fit(a.marginal_v);
    validate_fit(b.marginal_u);
    validate_fit(b.marginal_v);
  }
  return sup_distance(cdf_on_grid(a, grid_size, target), cdf_on_grid(b, grid_size, target));
}

void validate_detect_config(const DetectConfig& cfg) {
  if (cfg.grid_size < 11) throw std::invalid_argument("detect: grid size must be >= 11");
  if (cfg.panel.empty()) throw std::invalid_argument("detect: copula panel is empty");
  if (cfg.bootstrap.blocks == 0 || cfg.bootstrap.replicates == 0) {
    throw std::invalid_argument("detect: bootstrap blocks and replicates must be >= 1");
  }
}

std::vector<std::size_t> flag_epochs(const KsSeries& ks, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ks.stats.size(); ++i) {
    if (ks.stats[i] > threshold) out.push_back(ks.epochs[i]);
  }
  return out;
}

PairStageResult ks_from_marginals(std::span<const std::vector<double>> standardized,
                                  std::span<const MarginalFit> marginals,
                                  const DetectConfig& cfg) {
  const std::size_t epochs = standardized.size();
  if (epochs < 3) throw std::invalid_argument("detect: need at least 3 epochs");
  if (marginals.size() != epochs) throw std::invalid_argument("detect: one marginal per epoch");
  const std::size_t card = standardized.front().size();
  for (const auto& row : standardized) {
    if (row.size() != card) throw std::invalid_argument("detect: epochs differ in band size");
  }

  // Pseudo-observations of every epoch under its own marginal.
  std::vector<std::vector<double>> pseudo(epochs, std::vector<double>(card));
  for (std::size_t r = 0; r < epochs; ++r) {
    for (std::size_t i = 0; i < card; ++i) pseudo[r][i] = marginals[r].cdf(standardized[r][i]);
  }

  // Pair models C^(r, r+1) and their grid CDFs.
  const std::size_t pairs = epochs - 1;
  PairStageResult out;
  out.pair_copulas.resize(pairs);
  std::vector<std::vector<double>> grids(pairs);
  parallel_for(pairs, cfg.jobs, [&](std::size_t r) {
    const CopulaModel copula =
        select_family(pseudo[r], pseudo[r + 1], cfg.panel, ThetaSource::TauInversion);
    out.pair_copulas[r] = copula;
    grids[r] = cdf_on_grid({copula, marginals[r], marginals[r + 1]}, cfg.grid_size, cfg.target);
  });

  out.ks.grid_size = cfg.grid_size;
  for (std::size_t r = 1; r < pairs; ++r) {
    out.ks.epochs.push_back(r + 1);
    out.ks.stats.push_back(sup_distance(grids[r - 1], grids[r]));
  }
  return out;
}

std::vector<ChangepointReport> detect_channel(const EpochTensor& tensor, std::size_t channel,
                                              std::span<const BandSpec> bands,
                                              const DetectConfig& cfg,
                                              const std::map<std::string, double>& thresholds,
                                              double alpha) {
  validate_detect_config(cfg);
  const std::size_t epochs = tensor.epochs();
  if (epochs < 3) throw std::invalid_argument("detect: need at least 3 epochs");
  if (bands.empty()) throw std::invalid_argument("detect: no bands requested");
  validate_bootstrap(cfg.bootstrap, tensor.samples_per_epoch());

  // Step 1: band magnitudes and series-wide scaling.
  const auto series = channel_band_series(tensor, channel, bands);
  std::vector<Scaling> scalings;
  for (const auto& s : series) scalings.push_back(global_scaling(s));

  // Step 2: per-epoch bootstrap marginals, all bands at once.
  std::vector<std::vector<MarginalFit>> fits(epochs);
  parallel_for(epochs, cfg.jobs, [&](std::size_t r) {
    BootstrapConfig bc = cfg.bootstrap;
    bc.seed = derive_seed(cfg.bootstrap.seed, {channel, r});
    fits[r] = bootstrap_band_marginals(tensor.epoch(channel, r), bands,
                                       tensor.sampling_rate_hz(), bc, scalings, cfg.marginal);
  });

  std::vector<ChangepointReport> reports;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    std::vector<std::vector<double>> standardized(epochs);
    std::vector<MarginalFit> marginals(epochs);
    for (std::size_t r = 0; r < epochs; ++r) {
      for (const double x : series[b][r].values) standardized[r].push_back(scalings[b].apply(x));
      marginals[r] = fits[r][b];
    }
    // Steps 3-5.
    PairStageResult stage = ks_from_marginals(standardized, marginals, cfg);

    ChangepointReport rep;
    rep.channel = channel;
    rep.band = bands[b].name;
    auto it = thresholds.find(bands[b].name);
    if (it == thresholds.end()) {
      throw std::invalid_argument("detect: no threshold for band '" + bands[b].name + "'");
    }
    rep.threshold = it->second;
    rep.alpha = alpha;
    rep.ks = std::move(stage.ks);
    rep.ks.channel = channel;
    rep.ks.band = bands[b].name;
    rep.flagged_epochs = flag_epochs(rep.ks, rep.threshold);
    rep.marginals = std::move(marginals);
    rep.pair_copulas = std::move(stage.pair_copulas);
    reports.push_back(std::move(rep));
  }
  return reports;
}

ChangepointReport detect_changepoints(const EpochTensor& tensor, std::size_t channel,
                                      const BandSpec& band, const DetectConfig& cfg,
                                      double threshold, double alpha) {
  return detect_channel(tensor, channel, std::span(&band, 1), cfg, {{band.name, threshold}}, alpha)
      .front();
}

}  // namespace copulacp
