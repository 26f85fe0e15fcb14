#pragma once

#include <array>

#include "advtrade/model.hpp"
#include "advtrade/pareto.hpp"

namespace advtrade {

/// The five scalar variables of the auxiliary convex-concave problem. D is
/// minimized over (alpha, tau_g) and maximized over (beta, gamma, tau_h).
struct SaddleVars {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double tau_h = 0.0;
  double tau_g = 0.0;
};

/// Gradient of D, one entry per SaddleVars field.
struct SaddleGradient {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double tau_h = 0.0;
  double tau_g = 0.0;
};

struct SaddleSolution {
  double alpha = 0.0;  ///< limit of ||theta_hat - theta0|| / sqrt(p)
  double beta = 0.0;
  double gamma = 0.0;
  double tau_h = 0.0;
  double tau_g = 0.0;
  double tau_star = 0.0;  ///< root of the characteristic equation at the optimum
  double d_value = 0.0;
  double stationarity = 0.0;  ///< max projected-gradient norm over both blocks
  double box_alpha = 0.0;     ///< K_alpha actually used
  double box_beta = 0.0;      ///< K_beta actually used
  /// Large training budgets drive the estimator to exactly zero; the saddle
  /// then sits on the tau_g = 0 face and is returned in closed form.
  bool zero_estimator = false;
  int outer_iterations = 0;

  SaddleVars vars() const { return {alpha, beta, gamma, tau_h, tau_g}; }
};

struct SaddleOptions {
  double stationarity_tol = 1e-7;
  int max_outer_iterations = 200;
  /// Double K_alpha / K_beta and retry on boundary contact instead of throwing.
  bool auto_enlarge = true;
  int max_enlargements = 8;
  /// Multiplies the default K_alpha and K_beta.
  double box_scale = 1.0;
};

/// Left side of the characteristic equation,
/// a - (beta/tau_g) tau - tau erf(tau/sqrt2) - sqrt(2/pi) exp(-tau^2/2).
double tau_characteristic(double tau, double a, double beta, double tau_g);

/// Unique nonnegative root of tau_characteristic. Requires a >= sqrt(2/pi)
/// (DomainError otherwise), beta > 0 and tau_g > 0.
double tau_star(double a, double beta, double tau_g);

/// The indicator ratio gamma (tau_g + beta) / (delta eps beta sqrt(alpha^2 + sigma^2)).
double indicator_ratio(const SaddleVars& v, const AsymptoticConfig& cfg);

/// Objective D of the scalar problem; needs eps_train > 0.
double evaluate_D(const SaddleVars& v, const AsymptoticConfig& cfg);

/// The erf correction of D alone (zero when the indicator is off).
double erf_term(const SaddleVars& v, const AsymptoticConfig& cfg);

/// Exact gradient of D. D is continuously differentiable across the
/// indicator boundary; the erf term is differentiated via the envelope
/// theorem on its defining minimization over tau.
SaddleGradient gradient_D(const SaddleVars& v, const AsymptoticConfig& cfg);

/// Limit of (1/n) G(w; mu, tau) for w ~ N(0, omega^2 I_n).
double g_limit(double mu, double tau, double gamma, double omega, const AsymptoticConfig& cfg);

/// Training budget above which adversarial training returns exactly zero in
/// the proportional limit: sqrt(V^2 + (V^2+sigma^2)/delta) / (sqrt(2/pi) sqrt(V^2+sigma^2)).
double zero_estimator_threshold(const AsymptoticConfig& cfg);

/// Saddle point of max_{beta,gamma,tau_h} min_{alpha,tau_g} D.
SaddleSolution solve_saddle(const AsymptoticConfig& cfg, const SaddleOptions& options = {});

/// Limiting SR and AR of the adversarially trained estimator.
RiskPair asymptotic_risks(const SaddleSolution& sol, const AsymptoticConfig& cfg);

/// Limit of ||theta_hat|| / sqrt(p).
double asymptotic_estimator_norm(const SaddleSolution& sol, const AsymptoticConfig& cfg);

struct SmallEpsExpansion {
  double intercept = 0.0;
  double slope = 0.0;
};

/// First-order expansion of the limiting SR around eps_train = 0 (delta > 1).
SmallEpsExpansion sr_small_eps(const AsymptoticConfig& cfg);

}  // namespace advtrade
