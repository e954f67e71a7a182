#include <algorithm>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "copulacp/marginals.hpp"
#include "copulacp/rng.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace copulacp;

namespace {

std::vector<double> gamma_draws(double shape, double rate, std::size_t n, std::uint64_t seed) {
  boost::math::gamma_distribution<double> g(shape, 1.0 / rate);
  Stream s(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = boost::math::quantile(g, s.uniform());
  return x;
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  Stream s(seed);
  double x = 0.0;
  for (int i = 0; i < 1000; ++i) x = phi * x + s.normal();
  std::vector<double> out(n);
  for (auto& v : out) v = x = phi * x + s.normal();
  return out;
}

double lag1(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
  }
  return num / den;
}

double gamma_loglik(const std::vector<double>& x, double shape, double rate) {
  double ll = 0.0;
  for (double v : x) {
    ll += shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(v) - rate * v;
  }
  return ll;
}

}  // namespace

TEST_CASE("moving_block_bootstrap with one block returns the series") {
  auto x = ar1(1000, 0.9, 1);
  BootstrapConfig cfg{1, 5, 42};
  for (const auto& rep : moving_block_bootstrap(x, cfg)) CHECK(rep == x);
}

TEST_CASE("moving_block_bootstrap copies contiguous blocks of original values") {
  auto x = ar1(1000, 0.9, 2);
  BootstrapConfig cfg{20, 10, 3};
  auto reps = moving_block_bootstrap(x, cfg);
  REQUIRE(reps.size() == 10);
  for (const auto& rep : reps) {
    REQUIRE(rep.size() == 1000);
    for (std::size_t m = 0; m < 20; ++m) {
      auto it = std::find(x.begin(), x.end(), rep[m * 50]);
      REQUIRE(it != x.end());
      const auto start = std::size_t(it - x.begin());
      REQUIRE(start + 50 <= x.size());
      for (std::size_t j = 0; j < 50; ++j) CHECK(rep[m * 50 + j] == x[start + j]);
    }
  }
}

TEST_CASE("moving_block_bootstrap seeding") {
  auto x = ar1(1000, 0.9, 4);
  BootstrapConfig a{20, 8, 9};
  BootstrapConfig b{20, 8, 10};
  CHECK(moving_block_bootstrap(x, a) == moving_block_bootstrap(x, a));
  CHECK(moving_block_bootstrap(x, a) != moving_block_bootstrap(x, b));
  // Replicate b depends only on (seed, b).
  BootstrapConfig more{20, 12, 9};
  auto first = moving_block_bootstrap(x, a);
  auto longer = moving_block_bootstrap(x, more);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == longer[i]);
}

TEST_CASE("moving_block_bootstrap validation") {
  std::vector<double> x(1000, 1.0);
  CHECK_THROWS_AS(moving_block_bootstrap(x, {0, 10, 0}), std::invalid_argument);
  CHECK_THROWS_AS(moving_block_bootstrap(x, {20, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(moving_block_bootstrap(x, {30, 10, 0}), std::invalid_argument);
}

TEST_CASE("moving_block_bootstrap keeps lag-1 autocorrelation; iid resampling does not") {
  auto x = ar1(1000, 0.9, 5);
  const double original = lag1(x);
  auto reps = moving_block_bootstrap(x, {20, 200, 6});
  double mean_block = 0.0;
  for (const auto& r : reps) mean_block += lag1(r) / double(reps.size());
  CHECK(std::abs(mean_block - original) < 0.1);

  // Naive bootstrap: M = T blocks of length one.
  auto iid = moving_block_bootstrap(x, {1000, 50, 6});
  double mean_iid = 0.0;
  for (const auto& r : iid) mean_iid += lag1(r) / double(iid.size());
  CHECK(std::abs(mean_iid) < 0.1);
}

TEST_CASE("fit_gamma_mle recovers parameters") {
  auto x = gamma_draws(2.0, 3.0, 10000, 11);
  auto fit = fit_gamma_mle(x);
  CHECK(fit.shape >= 1.9);
  CHECK(fit.shape <= 2.1);
  CHECK(fit.rate >= 2.85);
  CHECK(fit.rate <= 3.15);
  CHECK(fit.n_effective == 10000);
  CHECK(fit.loglik == doctest::Approx(gamma_loglik(x, fit.shape, fit.rate)).epsilon(1e-10));

  auto e = gamma_draws(1.0, 0.5, 10000, 12);
  CHECK(std::abs(fit_gamma_mle(e).shape - 1.0) < 0.05);
}

TEST_CASE("fit_gamma_mle beats method of moments") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = gamma_draws(0.5 + 0.3 * double(seed), 1.7, 200, 100 + seed);
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
    double v = 0.0;
    for (double d : x) v += (d - m) * (d - m);
    v /= double(x.size() - 1);
    auto fit = fit_gamma_mle(x);
    CHECK(fit.loglik >= gamma_loglik(x, m * m / v, m / v) - 1e-9);
  }
}

TEST_CASE("fit_gamma_mle validation") {
  CHECK_THROWS_AS(fit_gamma_mle(std::vector<double>(50, 2.0)), std::invalid_argument);
  CHECK_THROWS_AS(fit_gamma_mle(std::vector<double>(5, 2.0)), std::invalid_argument);
  std::vector<double> neg = gamma_draws(2.0, 1.0, 20, 1);
  neg[3] = -1.0;
  CHECK_THROWS_AS(fit_gamma_mle(neg), std::invalid_argument);
}

TEST_CASE("gamma_cdf closed forms and monotonicity") {
  GammaFit exp1;
  exp1.shape = 1.0;
  exp1.rate = 1.0;
  CHECK(gamma_cdf(exp1, -1.0) == 0.0);
  CHECK(gamma_cdf(exp1, 0.0) == 0.0);
  CHECK(gamma_cdf(exp1, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gamma_cdf(exp1, 1e6) == doctest::Approx(1.0));
  CHECK(gamma_cdf(exp1, INFINITY) == 1.0);

  GammaFit erlang;
  erlang.shape = 2.0;
  erlang.rate = 1.0;
  CHECK(gamma_cdf(erlang, 2.0) == doctest::Approx(1.0 - 3.0 * std::exp(-2.0)).epsilon(1e-14));

  GammaFit g;
  g.shape = 0.7;
  g.rate = 4.0;
  double prev = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double p = gamma_cdf(g, double(i) * 5e-4);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("weibull fit and BIC selection") {
  // Weibull(k = 1.5, scale 2) by inversion.
  Stream s(21);
  std::vector<double> w(5000);
  for (auto& v : w) v = 2.0 * std::pow(-std::log(s.uniform()), 1.0 / 1.5);
  auto fit = fit_weibull_mle(w);
  CHECK(fit.shape == doctest::Approx(1.5).epsilon(0.05));
  CHECK(fit.rate == doctest::Approx(0.5).epsilon(0.05));
  CHECK(select_marginal_by_bic(w).family == MarginalFamily::Weibull);
  auto g = gamma_draws(3.0, 1.0, 5000, 22);
  CHECK(select_marginal_by_bic(g).family == MarginalFamily::Gamma);
  CHECK(marginal_family_from_string("weibull") == MarginalFamily::Weibull);
  CHECK_THROWS_AS(marginal_family_from_string("lognormal"), std::invalid_argument);
}

TEST_CASE("bootstrap_gamma_marginal pools B x card values") {
  auto x = ar1(1000, 0.9, 30);
  BandSpec delta{"delta", 0.0, 4.0, {}};
  Scaling sc{0.0, 100.0};
  auto fit = bootstrap_gamma_marginal(x, delta, 1000.0, {20, 200, 7}, sc);
  CHECK(fit.n_effective == 800);

  BandSpec beta{"beta", 12.0, 30.0, {}};
  auto one = bootstrap_gamma_marginal(x, beta, 1000.0, {1, 1, 7}, sc);
  CHECK(one.n_effective == 18);
}

TEST_CASE("bootstrap marginals of two stationary epochs agree") {
  auto a = ar1(1000, 0.9, 40);
  auto b = ar1(1000, 0.9, 41);
  BandSpec gamma{"gamma", 30.0, 300.0, {60.0}};
  Scaling sc{0.0, 3.0};
  auto fa = bootstrap_gamma_marginal(a, gamma, 1000.0, {20, 200, 1}, sc);
  auto fb = bootstrap_gamma_marginal(b, gamma, 1000.0, {20, 200, 2}, sc);
  CHECK(std::abs(fa.shape - fb.shape) / fb.shape < 0.2);
  CHECK(std::abs(fa.rate - fb.rate) / fb.rate < 0.2);
}

TEST_CASE("bootstrap_band_marginals equals per-band calls") {
  auto x = ar1(1000, 0.9, 50);
  std::vector<BandSpec> bands{{"theta", 4.0, 8.0, {}}, {"beta", 12.0, 30.0, {}}};
  std::vector<Scaling> sc{{0.0, 50.0}, {0.0, 10.0}};
  BootstrapConfig cfg{20, 50, 8};
  auto both = bootstrap_band_marginals(x, bands, 1000.0, cfg, sc);
  for (std::size_t b = 0; b < 2; ++b) {
    auto single = bootstrap_gamma_marginal(x, bands[b], 1000.0, cfg, sc[b]);
    CHECK(both[b].shape == single.shape);
    CHECK(both[b].rate == single.rate);
  }
}

TEST_CASE("asymptotic magnitude density") {
  for (double lambda : {0.5, 1.0, 5.0}) {
    CHECK(asymptotic_magnitude_pdf(lambda, 0.0) == 0.0);
    CHECK(asymptotic_magnitude_pdf(lambda, -1.0) == 0.0);
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return asymptotic_magnitude_pdf(lambda, x); }, 0.0,
        std::numeric_limits<double>::infinity(), 15, 1e-12);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-8));
    const double mode = std::sqrt(lambda / 2.0);
    CHECK(asymptotic_magnitude_pdf(lambda, mode) > asymptotic_magnitude_pdf(lambda, mode * 0.99));
    CHECK(asymptotic_magnitude_pdf(lambda, mode) > asymptotic_magnitude_pdf(lambda, mode * 1.01));
    // CDF is the integral of the density.
    const double part = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return asymptotic_magnitude_pdf(lambda, x); }, 0.0, mode, 15, 1e-12);
    CHECK(asymptotic_magnitude_cdf(lambda, mode) == doctest::Approx(part).epsilon(1e-10));
  }
  CHECK_THROWS_AS(asymptotic_magnitude_pdf(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("square roots of exponential draws follow the asymptotic law") {
  for (double lambda : {0.5, 1.0, 5.0}) {
    Stream s(std::uint64_t(lambda * 1000));
    std::vector<double> x(100000);
    for (auto& v : x) v = std::sqrt(-lambda * std::log(s.uniform()));
    const double d = testsupport::ks_distance(
        x, [&](double v) { return asymptotic_magnitude_cdf(lambda, v); });
    CHECK(testsupport::kolmogorov_p_value(d, x.size()) > 0.01);
  }
}
