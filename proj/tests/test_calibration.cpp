#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "copulacp/calibration.hpp"
#include "doctest.h"

using namespace copulacp;

namespace {

double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

double lag1(const std::vector<double>& x) {
  const double m = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
  }
  return num / den;
}

// Periodogram averaged over epochs, bins 0..T/2.
std::vector<double> mean_periodogram(const std::vector<std::vector<double>>& epochs) {
  std::vector<double> acc;
  for (const auto& e : epochs) {
    const auto m = fourier_magnitudes(e);
    if (acc.empty()) acc.assign(m.size(), 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) acc[k] += m[k] * m[k] / double(epochs.size());
  }
  return acc;
}

std::size_t peak_bin(const std::vector<double>& p) {
  return std::size_t(std::max_element(p.begin() + 1, p.end()) - p.begin());
}

// AR(2) spectrum 1 / |1 - phi1 z - phi2 z^2|^2 at bin k, poles at
// rho * exp(+-2 pi i cycles / T).
double ar2_spectrum(double cycles, double rho, std::size_t t, std::size_t k) {
  const double w0 = 2.0 * std::numbers::pi * cycles / double(t);
  const double phi1 = 2.0 * rho * std::cos(w0), phi2 = -rho * rho;
  const double w = 2.0 * std::numbers::pi * double(k) / double(t);
  const double re = 1.0 - phi1 * std::cos(w) - phi2 * std::cos(2.0 * w);
  const double im = phi1 * std::sin(w) + phi2 * std::sin(2.0 * w);
  return 1.0 / (re * re + im * im);
}

std::size_t ar2_peak_bin(double cycles, double rho, std::size_t t) {
  std::size_t best = 1;
  for (std::size_t k = 2; k <= t / 2; ++k) {
    if (ar2_spectrum(cycles, rho, t, k) > ar2_spectrum(cycles, rho, t, best)) best = k;
  }
  return best;
}

DetectConfig quick_config() {
  DetectConfig cfg;
  cfg.bootstrap = {20, 20, 3};
  cfg.grid_size = 51;
  return cfg;
}

}  // namespace

TEST_CASE("quantile_type7 and calibrate_thresholds") {
  std::vector<double> v(990, 0.0);
  v.insert(v.end(), 10, 1.0);
  auto t = calibrate_thresholds({{"beta", v}}, 0.01, "dgp1");
  CHECK(t.at("beta") > 0.0);
  CHECK(t.at("beta") <= 1.0);
  CHECK(t.n_null_stats.at("beta") == 1000);
  CHECK(t.source == "dgp1");

  auto flat = calibrate_thresholds({{"theta", std::vector<double>(200, 0.37)}}, 0.01);
  CHECK(flat.at("theta") == 0.37);

  CHECK(quantile_type7({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile_type7({5, 1, 3}, 1.0) == 5.0);
  CHECK_THROWS_AS(calibrate_thresholds({{"a", std::vector<double>(99, 0.1)}}, 0.01),
                  std::invalid_argument);
  CHECK_THROWS_AS(calibrate_thresholds({{"a", v}}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(t.at("gamma"), std::out_of_range);
}

TEST_CASE("thresholds are monotone in alpha") {
  std::vector<double> v(500);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(double(i)) * std::sin(double(i));
  double prev = -1.0;
  for (double a : {0.5, 0.2, 0.1, 0.05, 0.01, 0.001}) {
    const double t = calibrate_thresholds({{"x", v}}, a).at("x");
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("reference tables") {
  auto t2 = reference_thresholds_dgp2();
  CHECK(t2.source == "published-dgp2");
  CHECK(t2.alpha == 0.01);
  CHECK(t2.at("delta") == 0.0149);
  CHECK(t2.at("theta") == 0.0625);
  CHECK(t2.at("alpha") == 0.0101);
  CHECK(t2.at("beta") == 0.0050);
  CHECK(t2.at("gamma") == 0.0103);
  auto t1 = reference_thresholds_dgp1();
  // The published DGP 2 values are the more conservative ones.
  for (const auto& [band, value] : t1.thresholds) CHECK(t2.at(band) >= value);
}

TEST_CASE("DGP 1 construction") {
  auto a = simulate_dgp1('A', 100, 1000, 1);
  auto b = simulate_dgp1('B', 100, 1000, 2);
  REQUIRE(a.size() == 100);
  REQUIRE(a[0].size() == 1000);
  double ma = 0.0, mb = 0.0, rho = 0.0;
  for (std::size_t r = 0; r < 100; ++r) {
    ma += mean(a[r]) / 100.0;
    mb += mean(b[r]) / 100.0;
    rho += lag1(a[r]) / 100.0;
  }
  CHECK(std::abs(mb - ma - 1.0) < 0.05);
  const double var_x = 1.0 / (1.0 - 0.81);
  const double expected = 0.9 * 0.81 * var_x / (0.81 * var_x + 0.1);
  CHECK(std::abs(rho - expected) < 0.05);
  CHECK(simulate_dgp1('A', 3, 1000, 5) == simulate_dgp1('A', 3, 1000, 5));
  CHECK(simulate_dgp1('A', 3, 1000, 5) != simulate_dgp1('A', 3, 1000, 6));
  CHECK_THROWS_AS(simulate_dgp1('C', 3, 1000, 5), std::invalid_argument);
}

TEST_CASE("DGP 2 spectral peaks") {
  CHECK(dgp2_cycles(1) == 4.0);
  CHECK(dgp2_cycles(6) == 150.0);
  CHECK_THROWS_AS(dgp2_cycles(7), std::invalid_argument);
  CHECK_THROWS_AS(dgp2_cycles(0), std::invalid_argument);

  // Sharp resonance: the peak sits at the pole frequency.
  auto p1 = mean_periodogram(simulate_dgp2(1, 100, 1000, 11, 0.99));
  CHECK(std::abs(double(peak_bin(p1)) - 4.0) <= 1.0);
  auto p3 = mean_periodogram(simulate_dgp2(3, 100, 1000, 12, 0.99));
  CHECK(std::abs(double(peak_bin(p3)) - 9.0) <= 1.0);
  auto p6 = mean_periodogram(simulate_dgp2(6, 100, 1000, 13));
  CHECK(std::abs(double(peak_bin(p6)) - 150.0) <= 1.0);

  // At the default rho the low-frequency resonances are broad enough that the
  // spectral maximum moves below the pole frequency (to DC for i = 1). The top
  // is flat, so the check is that the observed peak lies where the theoretical
  // spectrum is within 10% of its maximum.
  CHECK(ar2_peak_bin(4.0, 0.97, 1000) == 1);
  for (int i : {1, 2, 3, 6}) {
    const auto p = mean_periodogram(simulate_dgp2(i, 200, 1000, 40 + std::uint64_t(i)));
    const double c = dgp2_cycles(i);
    const double top = ar2_spectrum(c, 0.97, 1000, ar2_peak_bin(c, 0.97, 1000));
    CHECK(ar2_spectrum(c, 0.97, 1000, peak_bin(p)) >= 0.9 * top);
  }

  auto flat = mean_periodogram(simulate_dgp2(1, 100, 1000, 14, 1e-3));
  const double avg = std::accumulate(flat.begin() + 1, flat.end(), 0.0) / double(flat.size() - 1);
  CHECK(*std::max_element(flat.begin() + 1, flat.end()) / avg < 1.6);
  CHECK(*std::max_element(p1.begin() + 1, p1.end()) /
            (std::accumulate(p1.begin() + 1, p1.end(), 0.0) / double(p1.size() - 1)) >
        20.0);

  DgpSpec bad;
  bad.kind = DgpKind::Dgp2;
  bad.latent = 2;
  bad.rho = 1.0;
  CHECK_THROWS_AS(validate_dgp(bad), std::invalid_argument);
  bad.rho = 0.5;
  bad.epochs = 0;
  CHECK_THROWS_AS(validate_dgp(bad), std::invalid_argument);
}

TEST_CASE("noise convention") {
  CHECK(noise_convention_from_string("stddev") == NoiseConvention::StdDev);
  CHECK(to_string(NoiseConvention::Variance) == "variance");
  CHECK_THROWS_AS(noise_convention_from_string("sigma"), std::invalid_argument);
  // Residual variance of Z - 0.9 X is not observable directly; compare the
  // total variance, which shrinks by 0.09 when switching to sd 0.1.
  double va = 0.0, vs = 0.0;
  auto a = simulate_dgp1('A', 200, 1000, 21, NoiseConvention::Variance);
  auto s = simulate_dgp1('A', 200, 1000, 21, NoiseConvention::StdDev);
  for (std::size_t r = 0; r < 200; ++r) {
    const double ma = mean(a[r]), ms = mean(s[r]);
    for (std::size_t t = 0; t < 1000; ++t) {
      va += (a[r][t] - ma) * (a[r][t] - ma);
      vs += (s[r][t] - ms) * (s[r][t] - ms);
    }
  }
  CHECK(va > vs);
}

TEST_CASE("scenario tensor concatenates segments") {
  std::vector<DgpSpec> segs{{DgpKind::Dgp1A, 1, 3, 1000, 1000.0, 0.97, NoiseConvention::Variance, 1},
                            {DgpKind::Dgp1B, 1, 2, 1000, 1000.0, 0.97, NoiseConvention::Variance, 2}};
  auto t = scenario_tensor(segs);
  CHECK(t.channels() == 1);
  CHECK(t.epochs() == 5);
  auto b = simulate(segs[1]);
  CHECK(std::equal(b[0].begin(), b[0].end(), t.epoch(0, 3).begin()));
  segs[1].samples_per_epoch = 500;
  CHECK_THROWS_AS(scenario_tensor(segs), std::invalid_argument);
}

TEST_CASE("logistic gate keeps Pearson correlation") {
  GateSpec spec;
  spec.epochs = 40;
  spec.switch_epoch = 21;
  spec.seed = 4;
  auto t = simulate_logistic_gate(spec);
  REQUIRE(t.channels() == 2);
  REQUIRE(t.epochs() == 40);
  std::vector<double> xb, yb, xa, ya;
  for (std::size_t r = 0; r < 40; ++r) {
    auto x = t.epoch(0, r), y = t.epoch(1, r);
    auto& xs = r < 20 ? xb : xa;
    auto& ys = r < 20 ? yb : ya;
    xs.insert(xs.end(), x.begin(), x.end());
    ys.insert(ys.end(), y.begin(), y.end());
  }
  const double before = pearson_correlation(xb, yb), after = pearson_correlation(xa, ya);
  CHECK(before > 0.5);
  CHECK(std::abs(before - after) < 0.05);
  // Lower-tail versus upper-tail dependence: Y follows X closely only for
  // negative X before the switch and positive X after it.
  double low_before = 0.0, low_after = 0.0;
  for (std::size_t i = 0; i < xb.size(); ++i) {
    if (xb[i] < -2.0) low_before += std::abs(yb[i] - xb[i]);
    if (xa[i] < -2.0) low_after += std::abs(ya[i] - xa[i]);
  }
  CHECK(low_before < low_after);

  CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) ==
        doctest::Approx(1.0));
  spec.switch_epoch = 0;
  CHECK_THROWS_AS(simulate_logistic_gate(spec), std::invalid_argument);
}

TEST_CASE("null statistics and power scenario bookkeeping") {
  auto bands = default_bands();
  DgpSpec spec{DgpKind::Dgp1A, 1, 5, 1000, 1000.0, 0.97, NoiseConvention::Variance, 8};
  auto stats = null_ks_statistics(spec, 2, bands, quick_config());
  REQUIRE(stats.size() == 5);
  for (const auto& [band, v] : stats) CHECK(v.size() == 6);
  CHECK(null_ks_statistics(spec, 2, bands, quick_config()) == stats);

  std::vector<DgpSpec> segs{{DgpKind::Dgp1A, 1, 4, 1000, 1000.0, 0.97, NoiseConvention::Variance, 1},
                            {DgpKind::Dgp1B, 1, 4, 1000, 1000.0, 0.97, NoiseConvention::Variance, 2}};
  std::vector<BandSpec> one{bands[3]};
  auto power = power_scenario(segs, reference_thresholds_dgp2(), one, quick_config());
  REQUIRE(power.reports.size() == 1);
  const auto& checks = power.boundaries.at("beta");
  REQUIRE(checks.size() == 1);
  CHECK(checks[0].last_epoch_before == 4);
  CHECK(checks[0].expected == std::vector<std::size_t>{4, 5});
  CHECK(power.exceedances.at("beta") == power.reports[0].flagged_epochs.size());
  CHECK_THROWS_AS(power_scenario(std::span(segs.data(), 1), reference_thresholds_dgp2(), one,
                                 quick_config()),
                  std::invalid_argument);
}
