#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace copulacp {

// One-parameter Archimedean panel. SurvivalJoe is Joe rotated by 180 degrees:
// C(u, v) = u + v - 1 + C_Joe(1 - u, 1 - v).
enum class CopulaFamily { Independent, Clayton, Gumbel, Frank, Joe, SurvivalJoe };

std::string to_string(CopulaFamily family);
CopulaFamily copula_family_from_string(const std::string& name);

// Panel in AIC tie-break order.
const std::vector<CopulaFamily>& default_panel();

enum class ThetaSource { TauInversion, Mle, Fixed };

std::string to_string(ThetaSource source);
ThetaSource theta_source_from_string(const std::string& name);

struct CopulaModel {
  CopulaFamily family = CopulaFamily::Independent;
  double theta = 0.0;
  ThetaSource source = ThetaSource::Fixed;
};

// Builds a model, mapping Frank with theta -> 0 to Independent. Throws if theta
// lies outside the family domain.
CopulaModel make_copula(CopulaFamily family, double theta,
                        ThetaSource source = ThetaSource::Fixed);

void validate_copula(const CopulaModel& model);

double copula_cdf(const CopulaModel& model, double u, double v);

// Density on the open square; throws at the boundary.
double copula_pdf(const CopulaModel& model, double u, double v);
double copula_log_pdf(const CopulaModel& model, double u, double v);

// h(u | v) = dC(u, v)/dv, the conditional distribution of U given V = v.
// All panel families are exchangeable, so h(v | u) is h_function(model, v, u).
double h_function(const CopulaModel& model, double u, double v);

// Solves h(u | v) = w for u by bisection (absolute tolerance 1e-12 in u).
double h_inverse(const CopulaModel& model, double w, double v);

struct PseudoObservations {
  std::vector<double> u;
  std::vector<double> v;

  std::size_t size() const { return u.size(); }
};

// Conditional inversion: v ~ U(0,1), w ~ U(0,1), u = h^{-1}(w | v).
PseudoObservations sample(const CopulaModel& model, std::size_t n, std::uint64_t seed);

// (concordant - discordant) / C(n, 2); tied pairs count as neither.
// O(n log n) merge-sort counting.
double kendall_tau_empirical(std::span<const double> x, std::span<const double> y);

double theta_to_tau(CopulaFamily family, double theta);

// Throws when tau is outside the family's attainable range. Frank at tau = 0
// returns 0 (the independence limit).
double tau_to_theta(CopulaFamily family, double tau);

bool tau_attainable(CopulaFamily family, double tau);

// Debye function of order one, D1(x) = (1/x) int_0^x t / (e^t - 1) dt.
double debye1(double x);

// Sum of log densities with pseudo-observations clamped to [1e-10, 1 - 1e-10].
double copula_loglik(const CopulaModel& model, std::span<const double> u,
                     std::span<const double> v);

inline constexpr double kPseudoObsClamp = 1e-10;

// Selection-time tau is clipped to this magnitude before inversion so that
// perfectly concordant samples still map to a finite parameter.
inline constexpr double kMaxAbsTau = 0.99;

// Golden-section maximiser of copula_loglik over the family domain in a log
// parametrisation. Returns nothing for Independent.
std::optional<double> mle_theta(CopulaFamily family, std::span<const double> u,
                                std::span<const double> v);

struct FamilyScore {
  CopulaModel model;
  double loglik = 0.0;
  double aic = 0.0;
};

struct Selection {
  CopulaModel model;
  double tau = 0.0;
  double loglik = 0.0;
  double aic = 0.0;
  std::vector<FamilyScore> candidates;
};

// AIC choice among the panel families whose attainable tau range contains the
// sample tau. The parameter comes from tau inversion or maximum likelihood.
Selection select_family_detailed(std::span<const double> u, std::span<const double> v,
                                 std::span<const CopulaFamily> panel,
                                 ThetaSource estimator = ThetaSource::TauInversion);

CopulaModel select_family(std::span<const double> u, std::span<const double> v,
                          std::span<const CopulaFamily> panel,
                          ThetaSource estimator = ThetaSource::TauInversion);

struct KlicEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo mean of log(c_true / c_fitted) under draws from the true model.
KlicEstimate klic_estimate(const CopulaModel& true_model, const CopulaModel& fitted_model,
                           std::size_t n_mc, std::uint64_t seed);

}  // namespace copulacp
