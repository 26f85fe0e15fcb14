#pragma once

#include <string_view>

#include <Eigen/Core>

namespace advtrade {

/// sqrt(2/pi), the mean of |N(0,1)|.
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;

/// Limiting problem parameters of a converging sequence of Gaussian
/// regression instances.
struct AsymptoticConfig {
  double delta = 2.0;     ///< n / p
  double sigma = 1.0;     ///< limit of sqrt(sigma0^2 / p)
  double v_norm = 1.0;    ///< limit of ||theta0|| / sqrt(p)
  double eps_train = 0.0; ///< l2 budget of the training adversary
  double eps_test = 0.0;  ///< l2 budget of the test adversary

  /// Throws InvalidArgument unless delta > 0 and the other fields are >= 0
  /// (and finite).
  void validate() const;

  /// True when the asymptotic theory applies: eps_train > 0, or
  /// eps_train = 0 with delta > 1.
  bool has_asymptotic_prediction() const;

  bool operator==(const AsymptoticConfig&) const = default;
};

enum class RiskSource { pareto_theory, saddle_theory, empirical };
enum class KnobKind { lambda, epsilon };

std::string_view to_string(RiskSource source);
std::string_view to_string(KnobKind kind);

/// A (standard risk, adversarial risk) pair and the knob value behind it.
struct RiskPoint {
  double sr = 0.0;
  double ar = 0.0;
  RiskSource source = RiskSource::pareto_theory;
  double knob = 0.0;
  KnobKind knob_kind = KnobKind::lambda;
};

/// (sigma0^2 + ||theta_hat - theta0||^2) / p, the expected squared prediction
/// error on a clean test point divided by p.
double standard_risk(const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                     const Eigen::Ref<const Eigen::VectorXd>& theta0, double sigma0);

/// Expected squared prediction error under the worst l2 test perturbation of
/// norm eps_test, divided by p.
double adversarial_risk(const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                        const Eigen::Ref<const Eigen::VectorXd>& theta0, double sigma0,
                        double eps_test);

/// Maximizer of (y - <x + d, theta>)^2 over ||d|| <= eps. Returns zero when
/// theta = 0 or the residual is exactly zero.
Eigen::VectorXd worst_case_perturbation(const Eigen::Ref<const Eigen::VectorXd>& x, double y,
                                        const Eigen::Ref<const Eigen::VectorXd>& theta,
                                        double eps);

}  // namespace advtrade
