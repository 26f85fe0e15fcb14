#pragma once

#include <span>
#include <vector>

#include "advtrade/model.hpp"

namespace advtrade {

/// Minimizer of lambda * SR + AR over all estimators, in the infinite-data
/// limit. The optimal estimator is theta0 / (1 + gamma0).
struct ParetoSolution {
  double lambda = 0.0;
  double gamma0 = 0.0;
  double a_lambda = 0.0;
  double sr = 0.0;
  double ar = 0.0;
  double residual = 0.0;  ///< |gamma0 - g(gamma0)| for the shrinkage map g
};

struct RiskPair {
  double sr = 0.0;
  double ar = 0.0;
};

/// The auxiliary quantity A(gamma) = sqrt((1+gamma)^2 sigma^2 + gamma^2 V^2) / V.
double pareto_aux(double gamma0, const AsymptoticConfig& cfg);

/// The shrinkage map g(gamma) whose fixed point defines gamma0 for weight lambda.
double pareto_shrinkage_map(double gamma0, double lambda, const AsymptoticConfig& cfg);

/// Solves the two coupled fixed-point equations for gamma0 at weight lambda.
/// Requires v_norm > 0. Throws ConvergenceFailure if the defect cannot be
/// driven below 1e-12.
ParetoSolution pareto_fixed_point(double lambda, const AsymptoticConfig& cfg);

/// Limiting SR and AR of theta0 / (1 + gamma0).
RiskPair pareto_risks(double gamma0, const AsymptoticConfig& cfg);

/// One pareto_theory RiskPoint per lambda, in input order.
std::vector<RiskPoint> pareto_curve(std::span<const double> lambdas, const AsymptoticConfig& cfg);

/// Training budget eps whose delta -> infinity adversarial-training estimator
/// matches the Pareto point at lambda (the positive root of a quadratic).
double lambda_to_epsilon(double lambda, const AsymptoticConfig& cfg);

/// gamma0 reached by adversarial training with budget eps as delta -> infinity:
/// fixed point of gamma = (eps^2 + c eps A) / (1 - (eps/A)^2), c = sqrt(2/pi).
double large_sample_shrinkage(double eps, const AsymptoticConfig& cfg);

/// Evenly spaced points on a log scale, both endpoints included.
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace advtrade
