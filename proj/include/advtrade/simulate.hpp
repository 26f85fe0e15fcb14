#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "advtrade/errors.hpp"
#include "advtrade/model.hpp"
#include "advtrade/rng.hpp"

namespace advtrade {

struct FiniteInstance {
  int n = 0;
  int p = 0;
  Eigen::MatrixXd design;  ///< n x p, i.i.d. N(0,1)
  Eigen::VectorXd labels;
  Eigen::VectorXd theta0;  ///< rescaled so ||theta0||^2 = p V^2
  double sigma0 = 0.0;     ///< sigma sqrt(p)
};

/// Draws X, then theta0, then the noise, in that order, from `rng`.
FiniteInstance generate_instance(int n, int p, const AsymptoticConfig& cfg, SeededRng& rng);

/// n = round(delta p), at least 1.
int sample_count(double delta, int p);

/// (1/2n) sum_i (|y_i - <x_i, theta>| + eps ||theta||)^2.
double adversarial_loss(const Eigen::Ref<const Eigen::VectorXd>& theta, const FiniteInstance& inst,
                        double eps);

/// Norm of the minimum-norm element (approximately, for the zero-residual
/// block) of the subdifferential of adversarial_loss at theta. Residuals with
/// |r_i| <= 1e-10 (1 + max |y|) count as exactly zero.
double adversarial_subgradient_norm(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                    const FiniteInstance& inst, double eps);

struct TrainReport {
  Eigen::VectorXd theta_hat;
  double final_loss = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<double> loss_trace;
};

class TrainingDidNotConverge : public ConvergenceFailure {
 public:
  TrainingDidNotConverge(const std::string& what, TrainReport report)
      : ConvergenceFailure(what, report.grad_norm), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

/// Minimizes adversarial_loss(., inst, eps) until the subgradient norm is at
/// most tol (1 + loss). Majorize-minimize warm start, then an active-set
/// Newton method that treats exactly interpolated samples as equality
/// constraints. Every accepted step lowers the loss.
TrainReport train_adversarial(const FiniteInstance& inst, double eps, double tol = 1e-8,
                              int max_iter = 200000);

RiskPoint empirical_risk_point(const FiniteInstance& inst,
                               const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                               const AsymptoticConfig& cfg);

/// Per-replicate measurements, normalized by p.
struct ReplicateResult {
  std::uint64_t stream = 0;
  double err2 = 0.0;   ///< ||theta_hat - theta0||^2 / p
  double norm2 = 0.0;  ///< ||theta_hat||^2 / p
  double sr = 0.0;
  double ar = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;  ///< standard error of the mean
};

struct ReplicateSummary {
  int seeds = 0;
  MeanStderr err2;
  MeanStderr norm2;
  MeanStderr sr;
  MeanStderr ar;
  std::vector<ReplicateResult> runs;  ///< ordered by stream index
};

/// Deterministic pairwise sum.
double pairwise_sum(const std::vector<double>& xs);
MeanStderr mean_stderr(const std::vector<double>& xs);

/// One replicate: stream k of master_seed, n = round(delta p).
ReplicateResult run_replicate(const AsymptoticConfig& cfg, int p, std::uint64_t master_seed,
                              std::uint64_t k);

/// Replicates 0..seeds-1 on `workers` threads (0 = hardware concurrency).
/// The summary does not depend on the worker count.
ReplicateSummary run_replicates(const AsymptoticConfig& cfg, int p, int seeds,
                                std::uint64_t master_seed, unsigned workers = 0);

}  // namespace advtrade
