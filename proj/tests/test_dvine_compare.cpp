#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "copulacp/calibration.hpp"
#include "copulacp/dvine_compare.hpp"
#include "copulacp/rng.hpp"
#include "doctest.h"

using namespace copulacp;

namespace {

VineData independent_columns(std::size_t vars, std::size_t n, std::uint64_t seed) {
  Stream s(seed);
  VineData d(vars, std::vector<double>(n));
  for (auto& col : d) {
    for (auto& x : col) x = s.uniform();
  }
  return d;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

VineConfig quick_vine() {
  VineConfig cfg;
  cfg.bootstrap = {20, 20, 5};
  return cfg;
}

}  // namespace

TEST_CASE("binomial two-sided p-values") {
  CHECK(binomial_two_sided_p(270, 118) == doctest::Approx(0.044410).epsilon(1e-4));
  CHECK(binomial_two_sided_p(270, 135) == 1.0);
  CHECK(binomial_two_sided_p(4, 4) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(binomial_two_sided_p(4, 0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(binomial_two_sided_p(270, 142) == doctest::Approx(0.428908).epsilon(1e-4));
  CHECK(binomial_two_sided_p(270, 134) == doctest::Approx(0.951487).epsilon(1e-4));
  // Symmetric in xi <-> n - xi.
  for (std::size_t xi = 0; xi <= 50; ++xi) {
    CHECK(binomial_two_sided_p(50, xi) == doctest::Approx(binomial_two_sided_p(50, 50 - xi)));
  }
}

TEST_CASE("binomial p-value against the continuity-corrected normal approximation") {
  boost::math::normal_distribution<double> z;
  for (std::size_t n : {100, 270, 1000}) {
    const double mu = double(n) / 2.0, sd = std::sqrt(double(n)) / 2.0;
    for (std::size_t xi = 0; xi <= n; xi += n / 50) {
      const double dev = std::max(std::abs(double(xi) - mu) - 0.5, 0.0);
      const double approx = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(z, dev / sd)));
      CHECK(std::abs(binomial_two_sided_p(n, xi) - approx) < 0.005);
    }
  }
}

TEST_CASE("clarke_test counts and antisymmetry") {
  Stream s(1);
  std::vector<double> a(300), b(300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = s.normal();
    b[i] = i % 7 == 0 ? a[i] : s.normal() + 0.1;
  }
  auto r = clarke_test(a, b);
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pos += a[i] - b[i] > 0.0;
    neg += a[i] - b[i] < 0.0;
  }
  CHECK(r.xi == pos);
  CHECK(r.n == 300);
  CHECK(r.m.size() == 300);
  CHECK(r.p_value == binomial_two_sided_p(300, pos));
  auto swapped = clarke_test(b, a);
  CHECK(swapped.xi == neg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(swapped.m[i] == -r.m[i]);
  // With ties the two directions count different events; without ties the
  // p-value is invariant.
  std::vector<double> c(300);
  for (auto& x : c) x = s.normal();
  CHECK(clarke_test(a, c).p_value == doctest::Approx(clarke_test(c, a).p_value));

  auto self = clarke_test(a, a);
  CHECK(self.xi == 0);
  CHECK(self.p_value == 1.0);
  CHECK_THROWS_AS(clarke_test(a, std::vector<double>(3)), std::invalid_argument);
  CHECK_THROWS_AS(clarke_test(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("two-variable vine is a single pair copula") {
  auto obs = sample(make_copula(CopulaFamily::Clayton, 2.0), 270, 2);
  VineData d{obs.u, obs.v};
  auto vine = build_dvine(d, 2, default_panel());
  REQUIRE(vine.trees.size() == 1);
  REQUIRE(vine.trees[0].size() == 1);
  const auto& pair = vine.trees[0][0];
  CHECK(vine.loglik == doctest::Approx(copula_loglik(pair, obs.u, obs.v)).epsilon(1e-12));
  CHECK(sum(dvine_loglik_pointwise(vine, d)) == doctest::Approx(vine.loglik).epsilon(1e-12));
}

TEST_CASE("independent columns fit independent pairs") {
  auto d = independent_columns(6, 270, 3);
  auto vine = build_dvine(d, 2, default_panel());
  std::size_t ind = 0, total = 0;
  for (const auto& tree : vine.trees) {
    for (const auto& pc : tree) {
      ind += pc.family == CopulaFamily::Independent;
      ++total;
    }
  }
  CHECK(total == 5 + 4);
  CHECK(2 * ind > total);
  CHECK(std::abs(vine.loglik) < 10.0);
}

TEST_CASE("simulate and refit a Markov D-vine") {
  auto d = simulate_markov_dvine(make_copula(CopulaFamily::Clayton, 2.0), 3, 2000, 4);
  REQUIRE(d.size() == 3);
  auto vine = build_dvine(d, 2, default_panel());
  REQUIRE(vine.trees.size() == 2);
  for (const auto& pc : vine.trees[0]) {
    CHECK(pc.family == CopulaFamily::Clayton);
    CHECK(std::abs(pc.theta - 2.0) < 0.3);
  }
  const auto& deep = vine.trees[1][0];
  const double tau = deep.family == CopulaFamily::Independent ? 0.0 : theta_to_tau(deep.family, deep.theta);
  CHECK(std::abs(tau) < 0.05);
}

TEST_CASE("pointwise loglik sums to the fit total") {
  for (std::size_t trunc : {1, 2, 3}) {
    auto d = simulate_markov_dvine(make_copula(CopulaFamily::Gumbel, 1.7), 8, 270, 10 + trunc);
    auto vine = build_dvine(d, trunc, default_panel());
    CHECK(vine.trees.size() == trunc);
    auto pw = dvine_loglik_pointwise(vine, d);
    CHECK(pw.size() == 270);
    CHECK(std::abs(sum(pw) - vine.loglik) < 1e-8);
    CHECK(dvine_loglik_pointwise(vine, d, 4) == pw);
  }
}

TEST_CASE("truncation level one sums the first-tree pairs") {
  auto d = simulate_markov_dvine(make_copula(CopulaFamily::Frank, 4.0), 3, 300, 20);
  auto vine = build_dvine(d, 1, default_panel());
  REQUIRE(vine.trees.size() == 1);
  const double expected = copula_loglik(vine.trees[0][0], d[0], d[1]) +
                          copula_loglik(vine.trees[0][1], d[1], d[2]);
  CHECK(sum(dvine_loglik_pointwise(vine, d)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("all-independent vine has zero log density") {
  DVineModel m;
  m.order = {0, 1, 2, 3};
  m.truncation_level = 2;
  m.trees = {std::vector<CopulaModel>(3), std::vector<CopulaModel>(2)};
  auto d = independent_columns(4, 50, 6);
  for (double x : dvine_loglik_pointwise(m, d)) CHECK(x == 0.0);
}

TEST_CASE("vine validation") {
  CHECK_THROWS_AS(build_dvine(independent_columns(1, 50, 1), 2), std::invalid_argument);
  CHECK_THROWS_AS(build_dvine(independent_columns(3, 3, 1), 2), std::invalid_argument);
  auto d = independent_columns(3, 50, 1);
  d[1].assign(50, 0.5);
  CHECK_THROWS_AS(build_dvine(d, 2), std::invalid_argument);
  VineConfig cfg;
  cfg.truncation_level = 0;
  CHECK_THROWS_AS(validate_vine_config(cfg), std::invalid_argument);
  CHECK(pseudo_obs_mode_from_string("ranks") == PseudoObsMode::Ranks);
  CHECK(to_string(PseudoObsMode::BootstrapGamma) == "bootstrap_gamma");
  CHECK_THROWS_AS(pseudo_obs_mode_from_string("empirical"), std::invalid_argument);
}

TEST_CASE("pre/post and channel comparisons") {
  GateSpec spec;
  spec.epochs = 8;
  spec.switch_epoch = 5;
  spec.seed = 7;
  auto tensor = simulate_logistic_gate(spec);
  BandSpec beta{"beta", 12.0, 30.0, {}};
  auto cfg = quick_vine();

  auto pseudo = channel_pseudo_observations(tensor, 0, beta, {0, 4}, {0, 8}, cfg);
  CHECK(pseudo.data.size() == 4);
  CHECK(pseudo.data[0].size() == 18);
  CHECK(pseudo.marginals.size() == 4);
  for (const auto& col : pseudo.data) {
    for (double x : col) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
  }

  auto r = compare_prepost(tensor, 1, beta, {0, 4}, {4, 8}, cfg);
  CHECK(r.n == 18);
  CHECK(r.m.size() == 18);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
  auto again = compare_prepost(tensor, 1, beta, {0, 4}, {4, 8}, cfg);
  CHECK(again.m == r.m);

  auto self = compare_prepost(tensor, 1, beta, {0, 4}, {0, 4}, cfg);
  CHECK(self.xi == 0);
  CHECK(self.p_value == 1.0);
  for (double m : self.m) CHECK(m == 0.0);

  CHECK_THROWS_AS(compare_prepost(tensor, 1, beta, {0, 4}, {3, 7}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(compare_prepost(tensor, 1, beta, {0, 3}, {4, 8}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(compare_channels(tensor, 1, 1, beta, {0, 8}, cfg), std::invalid_argument);

  auto rc = compare_channels(tensor, 0, 1, beta, {0, 8}, cfg);
  CHECK(rc.n == 18);

  auto ranks_cfg = cfg;
  ranks_cfg.pseudo_obs = PseudoObsMode::Ranks;
  auto ranks = channel_pseudo_observations(tensor, 0, beta, {0, 4}, {0, 8}, ranks_cfg);
  CHECK(ranks.marginals.empty());
}

TEST_CASE("channel matrix covers every pair once") {
  EpochTensor tensor(8, 4, 1000, 1000.0);
  for (std::size_t c = 0; c < 8; ++c) {
    auto eps = simulate_dgp2(int(c % 6) + 1, 4, 1000, 30 + c);
    for (std::size_t r = 0; r < 4; ++r) {
      std::copy(eps[r].begin(), eps[r].end(), tensor.epoch(c, r).begin());
    }
  }
  std::vector<std::size_t> channels{0, 1, 2, 3, 4, 5, 6, 7};
  BandSpec beta{"beta", 12.0, 30.0, {}};
  auto cfg = quick_vine();
  auto results = compare_channel_matrix(tensor, channels, beta, {0, 4}, cfg);
  CHECK(results.size() == 28);
  CHECK(results.front().channel_a == 0);
  CHECK(results.front().channel_b == 1);
  CHECK(results.back().channel_a == 6);
  CHECK(results.back().channel_b == 7);
  auto direct = compare_channels(tensor, 2, 5, beta, {0, 4}, cfg);
  for (const auto& r : results) {
    if (r.channel_a == 2 && r.channel_b == 5) CHECK(r.result.m == direct.m);
  }
}
