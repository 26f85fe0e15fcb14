#include "advtrade/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "advtrade/errors.hpp"

namespace advtrade {
namespace {

constexpr double kResidualTol = 1e-12;
constexpr int kDampedIterations = 10000;
constexpr double kDamping = 0.5;

void check_pareto_config(const AsymptoticConfig& cfg) {
  cfg.validate();
  if (!(cfg.v_norm > 0.0)) throw InvalidArgument("pareto frontier requires v_norm > 0");
}

// Bisection on h(gamma) = gamma - map(gamma) over [0, hi], hi doubled until h
// changes sign. Throws if a coarse scan shows more than one sign change.
template <typename Map>
double bisect_defect(Map map, double hint) {
  auto defect = [&](double g) { return g - map(g); };
  double hi = std::max(1.0, 2.0 * hint);
  for (int k = 0; defect(hi) <= 0.0; ++k) {
    if (k > 200) throw ConvergenceFailure("no sign change of the fixed-point defect", defect(hi));
    hi *= 2.0;
  }
  int sign_changes = 0;
  constexpr int kScan = 256;
  double prev = defect(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double cur = defect(hi * i / kScan);
    if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) ++sign_changes;
    if (cur != 0.0) prev = cur;
  }
  if (sign_changes > 1) {
    throw ConvergenceFailure("fixed-point defect has multiple roots", static_cast<double>(sign_changes));
  }
  double lo = 0.0;
  if (defect(lo) >= 0.0) return lo;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (defect(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Damped iteration with a bisection fallback; returns the fixed point.
template <typename Map>
double solve_fixed_point(Map map, double start) {
  double g = start;
  double residual = std::abs(g - map(g));
  for (int it = 0; it < kDampedIterations && residual > kResidualTol; ++it) {
    const double next = (1.0 - kDamping) * g + kDamping * map(g);
    const double next_residual = std::abs(next - map(next));
    if (!std::isfinite(next) || next < 0.0) break;
    g = next;
    // Stagnation: linear convergence with ratio too close to one.
    if (it > 50 && next_residual > 0.999 * residual) {
      residual = next_residual;
      break;
    }
    residual = next_residual;
  }
  if (residual <= kResidualTol) return g;
  const double root = bisect_defect(map, g);
  const double root_residual = std::abs(root - map(root));
  if (root_residual > kResidualTol) {
    throw ConvergenceFailure("fixed point did not reach 1e-12", root_residual);
  }
  return root;
}

}  // namespace

double pareto_aux(double gamma0, const AsymptoticConfig& cfg) {
  const double s2 = cfg.sigma * cfg.sigma;
  const double v2 = cfg.v_norm * cfg.v_norm;
  return std::sqrt((1.0 + gamma0) * (1.0 + gamma0) * s2 + gamma0 * gamma0 * v2) / cfg.v_norm;
}

double pareto_shrinkage_map(double gamma0, double lambda, const AsymptoticConfig& cfg) {
  const double et = cfg.eps_test;
  if (et == 0.0) return 0.0;
  const double a = pareto_aux(gamma0, cfg);
  return (et * et + kSqrt2OverPi * et * a) / (1.0 + lambda + kSqrt2OverPi * et / a);
}

ParetoSolution pareto_fixed_point(double lambda, const AsymptoticConfig& cfg) {
  check_pareto_config(cfg);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  auto map = [&](double g) { return pareto_shrinkage_map(g, lambda, cfg); };
  const double gamma0 = solve_fixed_point(map, cfg.eps_test * cfg.eps_test);
  ParetoSolution sol;
  sol.lambda = lambda;
  sol.gamma0 = gamma0;
  sol.a_lambda = pareto_aux(gamma0, cfg);
  sol.residual = std::abs(gamma0 - map(gamma0));
  const RiskPair risks = pareto_risks(gamma0, cfg);
  sol.sr = risks.sr;
  sol.ar = risks.ar;
  return sol;
}

RiskPair pareto_risks(double gamma0, const AsymptoticConfig& cfg) {
  if (!(gamma0 >= 0.0)) throw InvalidArgument("gamma0 must be >= 0");
  const double s2 = cfg.sigma * cfg.sigma;
  const double v = cfg.v_norm;
  const double shrink = gamma0 / (1.0 + gamma0);
  const double kept = 1.0 / (1.0 + gamma0);
  const double sr = s2 + (shrink * v) * (shrink * v);
  const double et = cfg.eps_test;
  const double ar =
      sr + et * et * v * v * kept * kept + 2.0 * kSqrt2OverPi * et * v * kept * std::sqrt(sr);
  return {sr, ar};
}

std::vector<RiskPoint> pareto_curve(std::span<const double> lambdas, const AsymptoticConfig& cfg) {
  if (lambdas.empty()) throw InvalidArgument("lambda grid is empty");
  std::vector<RiskPoint> points;
  points.reserve(lambdas.size());
  for (const double lambda : lambdas) {
    ParetoSolution sol;
    try {
      sol = pareto_fixed_point(lambda, cfg);
    } catch (const ConvergenceFailure& e) {
      throw ConvergenceFailure(std::string(e.what()) + " (lambda = " + std::to_string(lambda) + ")",
                               e.last_residual());
    }
    points.push_back({sol.sr, sol.ar, RiskSource::pareto_theory, lambda, KnobKind::lambda});
  }
  return points;
}

double lambda_to_epsilon(double lambda, const AsymptoticConfig& cfg) {
  const ParetoSolution sol = pareto_fixed_point(lambda, cfg);
  const double et = cfg.eps_test;
  if (et == 0.0) return 0.0;
  const double a = sol.a_lambda;
  const double c = kSqrt2OverPi;
  const double quad = 1.0 + lambda + 2.0 * c * et / a + (et / a) * (et / a);
  const double lin = c * (a * (1.0 + lambda) + c * et);
  const double cst = -(et * et + c * et * a);
  const double disc = lin * lin - 4.0 * quad * cst;
  if (disc < 0.0) throw InternalConsistency("negative discriminant in lambda_to_epsilon");
  // Larger root via the cancellation-free form 2c / (-b - sqrt(disc)).
  const double root = (2.0 * cst) / (-lin - std::sqrt(disc));
  return std::max(root, 0.0);
}

double large_sample_shrinkage(double eps, const AsymptoticConfig& cfg) {
  check_pareto_config(cfg);
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
  if (eps == 0.0) return 0.0;
  auto map = [&](double g) {
    const double a = pareto_aux(g, cfg);
    const double ratio = eps / a;
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    return (eps * eps + kSqrt2OverPi * eps * a) / (1.0 - ratio * ratio);
  };
  // The map blows up for small A, so iterate on the defect directly.
  auto defect = [&](double g) { return g - map(g); };
  double lo = 0.0;
  double hi = 1.0;
  for (int k = 0; !(defect(hi) > 0.0); ++k) {
    if (k > 200) throw ConvergenceFailure("large_sample_shrinkage: no bracket", defect(hi));
    lo = hi;
    hi *= 2.0;
  }
  // defect(lo) <= 0 holds at lo = 0 (map(0) >= 0) and at each abandoned hi.
  for (int i = 0; i < 300 && hi - lo > 1e-17 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (defect(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("bad log grid");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(llo + (lhi - llo) * i / (count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace advtrade
