#include "copulacp/dvine_compare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>

#include "copulacp/parallel.hpp"
#include "copulacp/rng.hpp"

namespace copulacp {

namespace {

double clamp_unit(double x) { return std::clamp(x, kPseudoObsClamp, 1.0 - kPseudoObsClamp); }

std::size_t check_data(const VineData& data) {
  if (data.size() < 2) throw std::invalid_argument("dvine: need at least 2 variables");
  const std::size_t n = data.front().size();
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (data[j].size() != n) throw std::invalid_argument("dvine: columns differ in length");
    for (const double x : data[j]) {
      if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("dvine: pseudo-observations must lie in [0, 1]");
      }
    }
  }
  return n;
}

// Inputs of the next tree from the pair models of the current one.
void next_level(const std::vector<CopulaModel>& models, const VineData& fwd, const VineData& bwd,
                VineData& next_fwd, VineData& next_bwd) {
  const std::size_t edges = models.size();
  const std::size_t n = fwd.front().size();
  next_fwd.assign(edges - 1, std::vector<double>(n));
  next_bwd.assign(edges - 1, std::vector<double>(n));
  for (std::size_t e = 0; e + 1 < edges; ++e) {
    for (std::size_t i = 0; i < n; ++i) {
      next_fwd[e][i] = clamp_unit(h_function(models[e], clamp_unit(fwd[e][i]), clamp_unit(bwd[e][i])));
      next_bwd[e][i] = clamp_unit(
          h_function(models[e + 1], clamp_unit(bwd[e + 1][i]), clamp_unit(fwd[e + 1][i])));
    }
  }
}

std::size_t fitted_levels(std::size_t variables, std::size_t truncation) {
  return std::min(truncation, variables - 1);
}

}  // namespace

DVineModel build_dvine(const VineData& data, std::size_t truncation_level,
                       std::span<const CopulaFamily> panel, std::size_t jobs) {
  const std::size_t n = check_data(data);
  if (n < 4) throw std::invalid_argument("dvine: need at least 4 observations");
  if (truncation_level < 1) throw std::invalid_argument("dvine: truncation level must be >= 1");
  for (const auto& col : data) {
    if (std::all_of(col.begin(), col.end(), [&](double x) { return x == col.front(); })) {
      throw std::invalid_argument("dvine: degenerate pseudo-observations (constant column)");
    }
  }

  DVineModel model;
  model.truncation_level = truncation_level;
  model.order.resize(data.size());
  std::iota(model.order.begin(), model.order.end(), std::size_t{0});

  // Tree 1 sees the variables themselves on both sides of every edge.
  VineData fwd(data.begin(), data.end() - 1);
  VineData bwd(data.begin() + 1, data.end());
  const std::size_t levels = fitted_levels(data.size(), truncation_level);
  for (std::size_t level = 0; level < levels; ++level) {
    const std::size_t edges = fwd.size();
    std::vector<CopulaModel> models(edges);
    std::vector<double> ll(edges);
    parallel_for(edges, jobs, [&](std::size_t e) {
      const Selection sel = select_family_detailed(fwd[e], bwd[e], panel, ThetaSource::Mle);
      models[e] = sel.model;
      ll[e] = sel.loglik;
    });
    for (const double x : ll) model.loglik += x;
    if (level + 1 < levels) {
      VineData nf, nb;
      next_level(models, fwd, bwd, nf, nb);
      fwd = std::move(nf);
      bwd = std::move(nb);
    }
    model.trees.push_back(std::move(models));
  }
  return model;
}

std::vector<double> dvine_loglik_pointwise(const DVineModel& model, const VineData& data,
                                           std::size_t jobs) {
  const std::size_t n = check_data(data);
  if (data.size() != model.variables()) {
    throw std::invalid_argument("dvine_loglik: data has " + std::to_string(data.size()) +
                                " variables, model has " + std::to_string(model.variables()));
  }
  std::vector<double> out(n, 0.0);
  VineData fwd(data.begin(), data.end() - 1);
  VineData bwd(data.begin() + 1, data.end());
  for (std::size_t level = 0; level < model.trees.size(); ++level) {
    const auto& models = model.trees[level];
    if (models.size() != fwd.size()) throw std::invalid_argument("dvine_loglik: malformed model");
    VineData terms(models.size(), std::vector<double>(n, 0.0));
    parallel_for(models.size(), jobs, [&](std::size_t e) {
      if (models[e].family == CopulaFamily::Independent) return;
      for (std::size_t i = 0; i < n; ++i) {
        terms[e][i] = copula_log_pdf(models[e], clamp_unit(fwd[e][i]), clamp_unit(bwd[e][i]));
      }
    });
    for (const auto& t : terms) {
      for (std::size_t i = 0; i < n; ++i) out[i] += t[i];
    }
    if (level + 1 < model.trees.size()) {
      VineData nf, nb;
      next_level(models, fwd, bwd, nf, nb);
      fwd = std::move(nf);
      bwd = std::move(nb);
    }
  }
  return out;
}

double binomial_two_sided_p(std::size_t n, std::size_t xi) {
  if (n == 0) throw std::invalid_argument("binomial test: n must be >= 1");
  if (xi > n) throw std::invalid_argument("binomial test: xi exceeds n");
  const boost::math::binomial_distribution<double> bin(static_cast<double>(n), 0.5);
  const double k = static_cast<double>(xi);
  const double lower = boost::math::cdf(bin, k);
  const double upper = xi == 0 ? 1.0 : boost::math::cdf(boost::math::complement(bin, k - 1.0));
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

ClarkeResult clarke_test(std::span<const double> loglik_1, std::span<const double> loglik_2) {
  if (loglik_1.size() != loglik_2.size()) {
    throw std::invalid_argument("clarke_test: length mismatch");
  }
  if (loglik_1.empty()) throw std::invalid_argument("clarke_test: empty input");
  ClarkeResult r;
  r.n = loglik_1.size();
  r.m.resize(r.n);
  bool all_zero = true;
  for (std::size_t i = 0; i < r.n; ++i) {
    r.m[i] = loglik_1[i] - loglik_2[i];
    if (!std::isfinite(r.m[i])) throw std::invalid_argument("clarke_test: non-finite log-likelihood");
    if (r.m[i] > 0.0) ++r.xi;
    if (r.m[i] != 0.0) all_zero = false;
  }
  r.p_value = all_zero ? 1.0 : binomial_two_sided_p(r.n, r.xi);
  return r;
}

std::string to_string(PseudoObsMode mode) {
  return mode == PseudoObsMode::BootstrapGamma ? "bootstrap_gamma" : "ranks";
}

PseudoObsMode pseudo_obs_mode_from_string(const std::string& name) {
  if (name == "bootstrap_gamma") return PseudoObsMode::BootstrapGamma;
  if (name == "ranks") return PseudoObsMode::Ranks;
  throw std::invalid_argument("unknown pseudo-observation mode '" + name + "'");
}

void validate_vine_config(const VineConfig& cfg) {
  if (cfg.truncation_level < 1) throw std::invalid_argument("vine: truncation level must be >= 1");
  if (cfg.panel.empty()) throw std::invalid_argument("vine: copula panel is empty");
  if (cfg.bootstrap.blocks == 0 || cfg.bootstrap.replicates == 0) {
    throw std::invalid_argument("vine: bootstrap blocks and replicates must be >= 1");
  }
}

namespace {

void check_range(const EpochTensor& tensor, EpochRange r, const char* what) {
  if (r.first >= r.last) throw std::invalid_argument(std::string(what) + " epoch range is empty");
  if (r.last > tensor.epochs()) {
    throw std::invalid_argument(std::string(what) + " epoch range exceeds the " +
                                std::to_string(tensor.epochs()) + " available epochs");
  }
}

// Mid-ranks scaled by 1 / (n + 1).
std::vector<double> rank_transform(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[idx[k]] = rank / static_cast<double>(n + 1);
    i = j + 1;
  }
  return out;
}

}  // namespace

ChannelPseudoObs channel_pseudo_observations(const EpochTensor& tensor, std::size_t channel,
                                             const BandSpec& band, EpochRange epochs,
                                             EpochRange scaling_range, const VineConfig& cfg) {
  validate_vine_config(cfg);
  check_range(tensor, epochs, "vine");
  check_range(tensor, scaling_range, "scaling");
  if (channel >= tensor.channels()) {
    throw std::invalid_argument("vine: channel " + std::to_string(channel) + " out of range");
  }

  const auto series = channel_band_series(tensor, channel, std::span(&band, 1)).front();
  const Scaling scaling = global_scaling(
      std::span(series).subspan(scaling_range.first, scaling_range.size()));

  ChannelPseudoObs out;
  out.data.resize(epochs.size());
  if (cfg.pseudo_obs == PseudoObsMode::Ranks) {
    for (std::size_t j = 0; j < epochs.size(); ++j) {
      out.data[j] = rank_transform(series[epochs.first + j].values);
    }
    return out;
  }

  validate_bootstrap(cfg.bootstrap, tensor.samples_per_epoch());
  out.marginals.resize(epochs.size());
  const std::vector<Scaling> scalings{scaling};
  parallel_for(epochs.size(), cfg.jobs, [&](std::size_t j) {
    const std::size_t r = epochs.first + j;
    BootstrapConfig bc = cfg.bootstrap;
    bc.seed = derive_seed(cfg.bootstrap.seed, {channel, r});
    out.marginals[j] = bootstrap_band_marginals(tensor.epoch(channel, r), std::span(&band, 1),
                                                tensor.sampling_rate_hz(), bc, scalings,
                                                cfg.marginal)
                           .front();
    auto& col = out.data[j];
    for (const double x : series[r].values) col.push_back(out.marginals[j].cdf(scaling.apply(x)));
  });
  return out;
}

namespace {

std::vector<double> fit_and_score(const ChannelPseudoObs& obs, const VineConfig& cfg) {
  DVineModel vine = build_dvine(obs.data, cfg.truncation_level, cfg.panel, cfg.jobs);
  vine.marginals = obs.marginals;
  return dvine_loglik_pointwise(vine, obs.data, cfg.jobs);
}

EpochRange hull(EpochRange a, EpochRange b) {
  return {std::min(a.first, b.first), std::max(a.last, b.last)};
}

}  // namespace

ClarkeResult compare_prepost(const EpochTensor& tensor, std::size_t channel, const BandSpec& band,
                             EpochRange pre, EpochRange post, const VineConfig& cfg) {
  check_range(tensor, pre, "pre");
  check_range(tensor, post, "post");
  // Identical ranges are allowed as a self-comparison; partial overlap is not.
  const bool same = pre.first == post.first && pre.last == post.last;
  if (!same && pre.first < post.last && post.first < pre.last) {
    throw std::invalid_argument("compare_prepost: pre and post epoch ranges overlap");
  }
  if (pre.size() != post.size()) {
    throw std::invalid_argument("compare_prepost: pre and post ranges must have equal length");
  }
  const EpochRange scaling = hull(pre, post);
  const auto a = channel_pseudo_observations(tensor, channel, band, pre, scaling, cfg);
  const auto b = channel_pseudo_observations(tensor, channel, band, post, scaling, cfg);
  return clarke_test(fit_and_score(a, cfg), fit_and_score(b, cfg));
}

ClarkeResult compare_channels(const EpochTensor& tensor, std::size_t channel_a,
                              std::size_t channel_b, const BandSpec& band, EpochRange epochs,
                              const VineConfig& cfg) {
  if (channel_a == channel_b) throw std::invalid_argument("compare_channels: channels must differ");
  const auto a = channel_pseudo_observations(tensor, channel_a, band, epochs, epochs, cfg);
  const auto b = channel_pseudo_observations(tensor, channel_b, band, epochs, epochs, cfg);
  return clarke_test(fit_and_score(a, cfg), fit_and_score(b, cfg));
}

std::vector<ChannelPairResult> compare_channel_matrix(const EpochTensor& tensor,
                                                      std::span<const std::size_t> channels,
                                                      const BandSpec& band, EpochRange epochs,
                                                      const VineConfig& cfg) {
  if (channels.size() < 2) throw std::invalid_argument("channel matrix: need at least 2 channels");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      if (channels[i] == channels[j]) {
        throw std::invalid_argument("channel matrix: channel " + std::to_string(channels[i]) +
                                    " listed twice");
      }
    }
  }
  std::vector<std::vector<double>> scores(channels.size());
  for (std::size_t i = 0; i < channels.size(); ++i) {
    scores[i] = fit_and_score(
        channel_pseudo_observations(tensor, channels[i], band, epochs, epochs, cfg), cfg);
  }
  std::vector<ChannelPairResult> out;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      out.push_back({channels[i], channels[j], clarke_test(scores[i], scores[j])});
    }
  }
  return out;
}

VineData simulate_markov_dvine(const CopulaModel& pair, std::size_t variables, std::size_t n,
                               std::uint64_t seed) {
  validate_copula(pair);
  if (variables < 2) throw std::invalid_argument("simulate_markov_dvine: need >= 2 variables");
  VineData data(variables, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng = Stream::keyed(seed, {i});
    data[0][i] = rng.uniform();
    for (std::size_t j = 1; j < variables; ++j) {
      // F(u_j | u_{j-1}) = h(u_j | u_{j-1}); invert at a fresh uniform.
      data[j][i] = h_inverse(pair, rng.uniform(), data[j - 1][i]);
    }
  }
  return data;
}

}  // namespace copulacp
