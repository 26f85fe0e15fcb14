#include "advtrade/model.hpp"

#include <cmath>
#include <string>

#include "advtrade/errors.hpp"

namespace advtrade {
namespace {

void check_nonneg(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be finite and >= 0");
  }
}

void check_same_size(const Eigen::Ref<const Eigen::VectorXd>& a,
                     const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.size() == 0) throw InvalidArgument("vectors must be nonempty");
}

}  // namespace

void AsymptoticConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be > 0");
  check_nonneg(sigma, "sigma");
  check_nonneg(v_norm, "v_norm");
  check_nonneg(eps_train, "eps_train");
  check_nonneg(eps_test, "eps_test");
}

bool AsymptoticConfig::has_asymptotic_prediction() const {
  return eps_train > 0.0 ? delta > 0.0 : delta > 1.0;
}

std::string_view to_string(RiskSource source) {
  switch (source) {
    case RiskSource::pareto_theory: return "pareto_theory";
    case RiskSource::saddle_theory: return "saddle_theory";
    case RiskSource::empirical: return "empirical";
  }
  return "unknown";
}

std::string_view to_string(KnobKind kind) {
  return kind == KnobKind::lambda ? "lambda" : "epsilon";
}

double standard_risk(const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                     const Eigen::Ref<const Eigen::VectorXd>& theta0, double sigma0) {
  check_same_size(theta_hat, theta0);
  check_nonneg(sigma0, "sigma0");
  const double p = static_cast<double>(theta0.size());
  return (sigma0 * sigma0 + (theta_hat - theta0).squaredNorm()) / p;
}

double adversarial_risk(const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                        const Eigen::Ref<const Eigen::VectorXd>& theta0, double sigma0,
                        double eps_test) {
  check_same_size(theta_hat, theta0);
  check_nonneg(sigma0, "sigma0");
  check_nonneg(eps_test, "eps_test");
  const double p = static_cast<double>(theta0.size());
  const double clean = (sigma0 * sigma0 + (theta_hat - theta0).squaredNorm()) / p;
  const double norm = theta_hat.norm();
  return clean + eps_test * eps_test * norm * norm / p +
         2.0 * kSqrt2OverPi * (eps_test / std::sqrt(p)) * norm * std::sqrt(clean);
}

Eigen::VectorXd worst_case_perturbation(const Eigen::Ref<const Eigen::VectorXd>& x, double y,
                                        const Eigen::Ref<const Eigen::VectorXd>& theta,
                                        double eps) {
  check_same_size(x, theta);
  check_nonneg(eps, "eps");
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(theta.size());
  const double norm = theta.norm();
  const double residual = y - x.dot(theta);
  if (norm == 0.0 || residual == 0.0) return delta;
  // The residual y - <x + d, theta> moves by -<d, theta>; push it away from zero.
  const double sign = residual > 0.0 ? 1.0 : -1.0;
  delta = (-eps * sign / norm) * theta;
  return delta;
}

}  // namespace advtrade
