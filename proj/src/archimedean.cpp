#include "copulacp/archimedean.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "copulacp/rng.hpp"

namespace copulacp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double adaptive_integral(const auto& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-12);
}

// ---- Clayton, theta > 0 ----------------------------------------------------

// log(u^-theta + v^-theta - 1), evaluated without overflow.
double clayton_log_sum(double theta, double u, double v) {
  const double a = -theta * std::log(u);
  const double b = -theta * std::log(v);
  const double m = std::max(a, b);
  if (m < 30.0) return std::log1p(std::expm1(a) + std::expm1(b));
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

double clayton_cdf(double theta, double u, double v) {
  return std::exp(-clayton_log_sum(theta, u, v) / theta);
}

double clayton_log_pdf(double theta, double u, double v) {
  return std::log1p(theta) - (theta + 1.0) * (std::log(u) + std::log(v)) -
         (1.0 / theta + 2.0) * clayton_log_sum(theta, u, v);
}

double clayton_h(double theta, double u, double v) {
  return std::exp(-(theta + 1.0) * std::log(v) -
                  (1.0 / theta + 1.0) * clayton_log_sum(theta, u, v));
}

// ---- Gumbel, theta >= 1 ----------------------------------------------------

struct GumbelTerms {
  double x, y, lx, ly, log_a, w;
};

GumbelTerms gumbel_terms(double theta, double u, double v) {
  GumbelTerms g;
  g.x = -std::log(u);
  g.y = -std::log(v);
  g.lx = std::log(g.x);
  g.ly = std::log(g.y);
  g.log_a = log_add_exp(theta * g.lx, theta * g.ly);
  g.w = std::exp(g.log_a / theta);
  return g;
}

double gumbel_cdf(double theta, double u, double v) {
  return std::exp(-gumbel_terms(theta, u, v).w);
}

double gumbel_log_pdf(double theta, double u, double v) {
  const GumbelTerms g = gumbel_terms(theta, u, v);
  return -g.w + g.x + g.y + (theta - 1.0) * (g.lx + g.ly) + (1.0 / theta - 2.0) * g.log_a +
         std::log(g.w + theta - 1.0);
}

double gumbel_h(double theta, double u, double v) {
  const GumbelTerms g = gumbel_terms(theta, u, v);
  return std::exp(-g.w + g.y + (theta - 1.0) * g.ly + (1.0 / theta - 1.0) * g.log_a);
}

// ---- Frank, theta > 0 (negative theta by reflection v -> 1 - v) -------------
//
// With s = min(u, v) and t = |u - v| the Frank expressions share the positive
// factor  B = (1 - e^{-theta (1 - s)}) + e^{-theta t} (1 - e^{-theta s}),
// which avoids the cancellation of the textbook form at large theta.

double frank_bracket(double theta, double s, double t) {
  return -std::expm1(-theta * (1.0 - s)) + std::exp(-theta * t) * -std::expm1(-theta * s);
}

double frank_pos_cdf(double theta, double u, double v) {
  const double s = std::min(u, v);
  const double t = std::abs(u - v);
  return s - (std::log(frank_bracket(theta, s, t)) - std::log(-std::expm1(-theta))) / theta;
}

double frank_pos_log_pdf(double theta, double u, double v) {
  const double s = std::min(u, v);
  const double t = std::abs(u - v);
  return std::log(theta) + std::log(-std::expm1(-theta)) - theta * t -
         2.0 * std::log(frank_bracket(theta, s, t));
}

double frank_pos_h(double theta, double u, double v) {
  const double s = std::min(u, v);
  const double t = std::abs(u - v);
  return -std::expm1(-theta * u) * std::exp(-theta * (v - s)) / frank_bracket(theta, s, t);
}

double frank_cdf(double theta, double u, double v) {
  if (theta > 0.0) return frank_pos_cdf(theta, u, v);
  return u - frank_pos_cdf(-theta, u, 1.0 - v);
}

double frank_log_pdf(double theta, double u, double v) {
  if (theta > 0.0) return frank_pos_log_pdf(theta, u, v);
  return frank_pos_log_pdf(-theta, u, 1.0 - v);
}

double frank_h(double theta, double u, double v) {
  if (theta > 0.0) return frank_pos_h(theta, u, v);
  return frank_pos_h(-theta, u, 1.0 - v);
}

// ---- Joe, theta >= 1 ---------------------------------------------------------

struct JoeTerms {
  double lu, lv, a, log_s;
};

JoeTerms joe_terms(double theta, double u, double v) {
  JoeTerms j;
  j.lu = std::log1p(-u);
  j.lv = std::log1p(-v);
  const double la = theta * j.lu;
  const double lb = theta * j.lv;
  j.a = std::exp(la);
  // S = a + b - ab = a + b (1 - a)
  j.log_s = log_add_exp(la, lb + std::log1p(-j.a));
  return j;
}

double joe_cdf(double theta, double u, double v) {
  return -std::expm1(joe_terms(theta, u, v).log_s / theta);
}

double joe_log_pdf(double theta, double u, double v) {
  const JoeTerms j = joe_terms(theta, u, v);
  return (1.0 / theta - 2.0) * j.log_s + (theta - 1.0) * (j.lu + j.lv) +
         std::log(theta - 1.0 + std::exp(j.log_s));
}

double joe_h(double theta, double u, double v) {
  const JoeTerms j = joe_terms(theta, u, v);
  return std::exp((1.0 / theta - 1.0) * j.log_s + (theta - 1.0) * j.lv + std::log1p(-j.a));
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

void check_unit(double u, double v, const char* who) {
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(who) + ": arguments must lie in [0, 1]");
  }
}

}  // namespace

std::string to_string(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Independent: return "independent";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::Joe: return "joe";
    case CopulaFamily::SurvivalJoe: return "survival_joe";
  }
  return "unknown";
}

CopulaFamily copula_family_from_string(const std::string& name) {
  for (const auto f : default_panel()) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown copula family '" + name + "'");
}

const std::vector<CopulaFamily>& default_panel() {
  static const std::vector<CopulaFamily> panel{
      CopulaFamily::Independent, CopulaFamily::Clayton, CopulaFamily::Gumbel,
      CopulaFamily::Frank,       CopulaFamily::Joe,     CopulaFamily::SurvivalJoe};
  return panel;
}

std::string to_string(ThetaSource source) {
  switch (source) {
    case ThetaSource::TauInversion: return "tau_inversion";
    case ThetaSource::Mle: return "mle";
    case ThetaSource::Fixed: return "fixed";
  }
  return "unknown";
}

ThetaSource theta_source_from_string(const std::string& name) {
  if (name == "tau_inversion") return ThetaSource::TauInversion;
  if (name == "mle") return ThetaSource::Mle;
  if (name == "fixed") return ThetaSource::Fixed;
  throw std::invalid_argument("unknown theta source '" + name + "'");
}

void validate_copula(const CopulaModel& model) {
  const double t = model.theta;
  bool ok = std::isfinite(t);
  switch (model.family) {
    case CopulaFamily::Independent: ok = true; break;
    case CopulaFamily::Clayton: ok = ok && t > 0.0; break;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe:
    case CopulaFamily::SurvivalJoe: ok = ok && t >= 1.0; break;
    case CopulaFamily::Frank: ok = ok && t != 0.0; break;
  }
  if (!ok) {
    throw std::invalid_argument("copula " + to_string(model.family) + ": theta " +
                                std::to_string(t) + " outside family domain");
  }
}

CopulaModel make_copula(CopulaFamily family, double theta, ThetaSource source) {
  if (family == CopulaFamily::Independent) return {family, 0.0, source};
  if (family == CopulaFamily::Frank && std::abs(theta) < 1e-10) {
    return {CopulaFamily::Independent, 0.0, source};
  }
  CopulaModel m{family, theta, source};
  validate_copula(m);
  return m;
}

double copula_cdf(const CopulaModel& model, double u, double v) {
  validate_copula(model);
  check_unit(u, v, "copula_cdf");
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  const double t = model.theta;
  double c = 0.0;
  switch (model.family) {
    case CopulaFamily::Independent: c = u * v; break;
    case CopulaFamily::Clayton: c = clayton_cdf(t, u, v); break;
    case CopulaFamily::Gumbel: c = gumbel_cdf(t, u, v); break;
    case CopulaFamily::Frank: c = frank_cdf(t, u, v); break;
    case CopulaFamily::Joe: c = joe_cdf(t, u, v); break;
    case CopulaFamily::SurvivalJoe: c = u + v - 1.0 + joe_cdf(t, 1.0 - u, 1.0 - v); break;
  }
  // Frechet bounds hold exactly; rounding must not push the value outside.
  return std::clamp(c, std::max(u + v - 1.0, 0.0), std::min(u, v));
}

double copula_log_pdf(const CopulaModel& model, double u, double v) {
  validate_copula(model);
  if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) {
    throw std::invalid_argument("copula_pdf: arguments must lie in the open unit square");
  }
  const double t = model.theta;
  switch (model.family) {
    case CopulaFamily::Independent: return 0.0;
    case CopulaFamily::Clayton: return clayton_log_pdf(t, u, v);
    case CopulaFamily::Gumbel: return gumbel_log_pdf(t, u, v);
    case CopulaFamily::Frank: return frank_log_pdf(t, u, v);
    case CopulaFamily::Joe: return joe_log_pdf(t, u, v);
    case CopulaFamily::SurvivalJoe: return joe_log_pdf(t, 1.0 - u, 1.0 - v);
  }
  return 0.0;
}

double copula_pdf(const CopulaModel& model, double u, double v) {
  return std::exp(copula_log_pdf(model, u, v));
}

double h_function(const CopulaModel& model, double u, double v) {
  validate_copula(model);
  check_unit(u, v, "h_function");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  if (v == 0.0 || v == 1.0) {
    throw std::invalid_argument("h_function: conditioning value must lie in (0, 1)");
  }
  const double t = model.theta;
  double h = 0.0;
  switch (model.family) {
    case CopulaFamily::Independent: h = u; break;
    case CopulaFamily::Clayton: h = clayton_h(t, u, v); break;
    case CopulaFamily::Gumbel: h = gumbel_h(t, u, v); break;
    case CopulaFamily::Frank: h = frank_h(t, u, v); break;
    case CopulaFamily::Joe: h = joe_h(t, u, v); break;
    case CopulaFamily::SurvivalJoe: h = 1.0 - joe_h(t, 1.0 - u, 1.0 - v); break;
  }
  return clamp01(h);
}

double h_inverse(const CopulaModel& model, double w, double v) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("h_inverse: w must lie in [0, 1]");
  if (model.family == CopulaFamily::Independent) return w;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (h_function(model, mid, v) < w) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

PseudoObservations sample(const CopulaModel& model, std::size_t n, std::uint64_t seed) {
  validate_copula(model);
  Stream rng(seed);
  PseudoObservations out;
  out.u.resize(n);
  out.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = rng.uniform();
    const double w = rng.uniform();
    double u = h_inverse(model, w, v);
    u = std::min(std::max(u, 1e-300), 1.0 - 0x1.0p-53);
    out.u[i] = u;
    out.v[i] = v;
  }
  return out;
}

namespace {

// Counts pairs i < j with seq[i] > seq[j] while sorting seq.
std::uint64_t count_inversions(std::vector<double>& seq, std::vector<double>& buf,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(seq, buf, lo, mid) + count_inversions(seq, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (seq[j] < seq[i]) {
      inv += mid - i;
      buf[k++] = seq[j++];
    } else {
      buf[k++] = seq[i++];
    }
  }
  while (i < mid) buf[k++] = seq[i++];
  while (j < hi) buf[k++] = seq[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            seq.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

std::uint64_t tied_pairs(std::span<const double> sorted) {
  std::uint64_t ties = 0, run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

}  // namespace

double kendall_tau_empirical(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("kendall_tau: need at least two observations");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::uint64_t x_ties = 0, joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const std::uint64_t t = j - i;
    x_ties += t * (t - 1) / 2;
    for (std::size_t a = i; a < j;) {
      std::size_t b = a + 1;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      const std::uint64_t s = b - a;
      joint_ties += s * (s - 1) / 2;
      a = b;
    }
    i = j;
  }

  std::vector<double> seq(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = y[order[i]];
  const std::uint64_t discordant = count_inversions(seq, buf, 0, n);
  const std::uint64_t y_ties = tied_pairs(seq);

  const double total = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double untied = total - static_cast<double>(x_ties) - static_cast<double>(y_ties) +
                        static_cast<double>(joint_ties);
  return (untied - 2.0 * static_cast<double>(discordant)) / total;
}

double debye1(double x) {
  if (x == 0.0) return 1.0;
  if (x < 0.0) return debye1(-x) - x / 2.0;
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  return adaptive_integral(f, 0.0, x) / x;
}

namespace {

// Frank tau written as (4 / theta^2) int_0^theta k(t) dt with
// k(t) = t/(e^t - 1) - 1 + t/2 = sum_n B_2n t^2n / (2n)!, which removes the
// cancellation in 1 - (4/theta)(1 - D1(theta)) near independence. The series
// is integrated term by term up to theta = 0.5; beyond that the Debye form is
// accurate enough.
constexpr double kFrankSeriesEdge = 0.5;

double frank_k_integral_series(double theta) {
  double sum = 0.0;
  double fact = 1.0;
  for (int n = 1; n <= 12; ++n) {
    fact *= (2.0 * n - 1.0) * (2.0 * n);
    const double c = boost::math::unchecked_bernoulli_b2n<double>(n) / fact;
    sum += c * std::pow(theta, 2 * n + 1) / (2.0 * n + 1.0);
  }
  return sum;
}

double frank_tau(double theta) {
  if (theta < 0.0) return -frank_tau(-theta);
  if (theta == 0.0) return 0.0;
  if (theta <= kFrankSeriesEdge) return 4.0 / (theta * theta) * frank_k_integral_series(theta);
  return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
}

// Joe tau in closed form, 1 + 2/(2 - theta) (psi(2) - psi(2/theta + 1)).
// Near theta = 2 the quotient is replaced by its Taylor expansion in
// d = 2/theta - 1.
double joe_tau(double theta) {
  using boost::math::digamma;
  using boost::math::polygamma;
  if (theta == 1.0) return 0.0;
  if (std::abs(theta - 2.0) < 1e-3) {
    const double d = 2.0 / theta - 1.0;
    const double series = polygamma(1, 2.0) + d / 2.0 * polygamma(2, 2.0) +
                          d * d / 6.0 * polygamma(3, 2.0);
    return 1.0 - 2.0 / theta * series;
  }
  return 1.0 + 2.0 / (2.0 - theta) * (digamma(2.0) - digamma(2.0 / theta + 1.0));
}

template <typename TauFn>
double invert_monotone(TauFn tau_of, double tau, double lo, double hi) {
  while (tau_of(hi) < tau) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8) throw std::runtime_error("tau_to_theta: failed to bracket root");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double t = tau_of(mid);
    if (std::abs(t - tau) < 1e-12 || hi - lo < 1e-15 * hi) return mid;
    if (t < tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double theta_to_tau(CopulaFamily family, double theta) {
  validate_copula({family, theta, ThetaSource::Fixed});
  switch (family) {
    case CopulaFamily::Independent: return 0.0;
    case CopulaFamily::Clayton: return theta / (theta + 2.0);
    case CopulaFamily::Gumbel: return 1.0 - 1.0 / theta;
    case CopulaFamily::Frank: return frank_tau(theta);
    case CopulaFamily::Joe:
    case CopulaFamily::SurvivalJoe: return joe_tau(theta);
  }
  return 0.0;
}

bool tau_attainable(CopulaFamily family, double tau) {
  switch (family) {
    case CopulaFamily::Independent: return tau > -1.0 && tau < 1.0;
    case CopulaFamily::Clayton: return tau > 0.0 && tau < 1.0;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe:
    case CopulaFamily::SurvivalJoe: return tau >= 0.0 && tau < 1.0;
    case CopulaFamily::Frank: return tau > -1.0 && tau < 1.0;
  }
  return false;
}

double tau_to_theta(CopulaFamily family, double tau) {
  if (!tau_attainable(family, tau)) {
    throw std::invalid_argument("tau_to_theta: tau " + std::to_string(tau) +
                                " not attainable by " + to_string(family));
  }
  switch (family) {
    case CopulaFamily::Independent: return 0.0;
    case CopulaFamily::Clayton: return 2.0 * tau / (1.0 - tau);
    case CopulaFamily::Gumbel: return 1.0 / (1.0 - tau);
    case CopulaFamily::Frank: {
      if (tau == 0.0) return 0.0;
      const double mag = invert_monotone(frank_tau, std::abs(tau), 0.0, 10.0);
      return tau > 0.0 ? mag : -mag;
    }
    case CopulaFamily::Joe:
    case CopulaFamily::SurvivalJoe:
      if (tau == 0.0) return 1.0;
      return invert_monotone(joe_tau, tau, 1.0, 4.0);
  }
  return 0.0;
}

double copula_loglik(const CopulaModel& model, std::span<const double> u,
                     std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("copula_loglik: length mismatch");
  validate_copula(model);
  if (model.family == CopulaFamily::Independent) return 0.0;
  double ll = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::clamp(u[i], kPseudoObsClamp, 1.0 - kPseudoObsClamp);
    const double b = std::clamp(v[i], kPseudoObsClamp, 1.0 - kPseudoObsClamp);
    ll += copula_log_pdf(model, a, b);
  }
  return ll;
}

std::optional<double> mle_theta(CopulaFamily family, std::span<const double> u,
                                std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("mle_theta: length mismatch");
  if (u.size() < 4) throw std::invalid_argument("mle_theta: need at least 4 pairs");
  if (family == CopulaFamily::Independent) return std::nullopt;

  // theta = offset + sign * exp(s), s in [lo, hi].
  double offset = 0.0, sign = 1.0, lo = std::log(1e-4), hi = std::log(500.0);
  switch (family) {
    case CopulaFamily::Clayton: break;
    case CopulaFamily::Frank:
      if (kendall_tau_empirical(u, v) < 0.0) sign = -1.0;
      break;
    default:
      offset = 1.0;
      hi = std::log(200.0);
      break;
  }
  auto theta_of = [&](double s) { return offset + sign * std::exp(s); };
  auto objective = [&](double s) {
    const double ll = copula_loglik({family, theta_of(s), ThetaSource::Mle}, u, v);
    return std::isfinite(ll) ? ll : -kInf;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  int iter = 0;
  while (b - a > 1e-8) {
    if (++iter > 500) throw std::runtime_error("mle_theta: golden-section did not converge");
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double best_s = 0.5 * (a + b);
  double best = objective(best_s);
  if (!std::isfinite(best)) throw std::runtime_error("mle_theta: likelihood not finite");
  double theta = theta_of(best_s);

  // The likelihood can be multimodal in rare samples; never return a point
  // worse than the tau-inversion estimate.
  const double tau = std::clamp(kendall_tau_empirical(u, v), -kMaxAbsTau, kMaxAbsTau);
  if (tau_attainable(family, tau)) {
    const double start = tau_to_theta(family, tau);
    const CopulaModel m = make_copula(family, start, ThetaSource::Mle);
    if (m.family == family && copula_loglik(m, u, v) > best) theta = start;
  }
  return theta;
}

Selection select_family_detailed(std::span<const double> u, std::span<const double> v,
                                 std::span<const CopulaFamily> panel, ThetaSource estimator) {
  if (u.size() != v.size()) throw std::invalid_argument("select_family: length mismatch");
  if (u.size() < 4) throw std::invalid_argument("select_family: need at least 4 pairs");
  if (estimator == ThetaSource::Fixed) {
    throw std::invalid_argument("select_family: estimator must be tau_inversion or mle");
  }
  Selection sel;
  sel.tau = kendall_tau_empirical(u, v);
  const double tau = std::clamp(sel.tau, -kMaxAbsTau, kMaxAbsTau);

  bool have = false;
  for (const CopulaFamily family : panel) {
    FamilyScore score;
    if (family == CopulaFamily::Independent) {
      score.model = {CopulaFamily::Independent, 0.0, estimator};
      score.loglik = 0.0;
      score.aic = 0.0;
    } else {
      if (!tau_attainable(family, tau)) continue;
      const double theta = estimator == ThetaSource::TauInversion
                               ? tau_to_theta(family, tau)
                               : *mle_theta(family, u, v);
      score.model = make_copula(family, theta, estimator);
      if (score.model.family != family) continue;  // collapsed to independence
      score.loglik = copula_loglik(score.model, u, v);
      if (!std::isfinite(score.loglik)) continue;
      score.aic = -2.0 * score.loglik + 2.0;
    }
    if (!have || score.aic < sel.aic) {
      sel.model = score.model;
      sel.loglik = score.loglik;
      sel.aic = score.aic;
      have = true;
    }
    sel.candidates.push_back(score);
  }
  if (!have) throw std::runtime_error("select_family: no feasible family in panel");
  return sel;
}

CopulaModel select_family(std::span<const double> u, std::span<const double> v,
                          std::span<const CopulaFamily> panel, ThetaSource estimator) {
  return select_family_detailed(u, v, panel, estimator).model;
}

KlicEstimate klic_estimate(const CopulaModel& true_model, const CopulaModel& fitted_model,
                           std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 1000) throw std::invalid_argument("klic_estimate: need n_mc >= 1000");
  validate_copula(fitted_model);
  const PseudoObservations draws = sample(true_model, n_mc, seed);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double a = std::clamp(draws.u[i], kPseudoObsClamp, 1.0 - kPseudoObsClamp);
    const double b = std::clamp(draws.v[i], kPseudoObsClamp, 1.0 - kPseudoObsClamp);
    const double d = copula_log_pdf(true_model, a, b) - copula_log_pdf(fitted_model, a, b);
    sum += d;
    sum_sq += d * d;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace copulacp
