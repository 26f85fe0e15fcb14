#include "advtrade/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "advtrade/parallel.hpp"

namespace advtrade {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_theta(const Eigen::Ref<const VectorXd>& theta, const FiniteInstance& inst) {
  if (theta.size() != inst.p) throw InvalidArgument("theta has the wrong dimension");
}

double loss_from_residual(const VectorXd& r, double c) {
  return (r.array().abs() + c).square().sum() / (2.0 * static_cast<double>(r.size()));
}

double zero_residual_cutoff(const FiniteInstance& inst) {
  return 1e-10 * (1.0 + inst.labels.cwiseAbs().maxCoeff());
}

// Subgradient at theta != 0 given an explicit zero-residual set. s_Z is the
// least-squares fit of the smooth part, clipped to [-1, 1].
double subgradient_norm_with(const VectorXd& theta, const FiniteInstance& inst, double eps,
                             const std::vector<char>& zero) {
  const double n = inst.n;
  const VectorXd r = inst.labels - inst.design * theta;
  const double nt = theta.norm();
  const double c = eps * nt;
  VectorXd w(inst.n);  // (|r_i| + c) sign(r_i) on N
  double total = 0.0;  // sum_i (|r_i| + c)
  std::vector<int> z_idx;
  for (int i = 0; i < inst.n; ++i) {
    if (zero[i]) {
      w[i] = 0.0;
      z_idx.push_back(i);
      total += c;
    } else {
      w[i] = r[i] + (r[i] > 0.0 ? c : -c);
      total += std::abs(r[i]) + c;
    }
  }
  VectorXd g = -inst.design.transpose() * w;
  if (nt > 0.0) g += (eps * total / nt) * theta;
  g /= n;
  if (z_idx.empty() || c == 0.0) return g.norm();
  MatrixXd xz(inst.p, static_cast<int>(z_idx.size()));
  for (std::size_t k = 0; k < z_idx.size(); ++k) {
    xz.col(static_cast<int>(k)) = inst.design.row(z_idx[k]).transpose() * (c / n);
  }
  VectorXd s = xz.completeOrthogonalDecomposition().solve(g);
  s = s.cwiseMax(-1.0).cwiseMin(1.0);
  return (g - xz * s).norm();
}

double zero_subgradient_norm(const FiniteInstance& inst, double eps) {
  const double n = inst.n;
  const double excess = (inst.design.transpose() * inst.labels).norm() -
                        eps * inst.labels.cwiseAbs().sum();
  return std::max(excess, 0.0) / n;
}

struct TrainState {
  VectorXd theta;
  double loss = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// Majorize-minimize: (|r| + c)^2 <= r^2 / t + c^2 / (1 - t) with equality at
// t = |r| / (|r| + c), so each step is a weighted ridge regression.
void mm_phase(TrainState& st, const FiniteInstance& inst, double eps, int steps, int max_iter) {
  const int n = inst.n;
  const int p = inst.p;
  for (int k = 0; k < steps && st.iterations < max_iter; ++k) {
    const VectorXd r = inst.labels - inst.design * st.theta;
    const double c = eps * st.theta.norm();
    if (c == 0.0) return;
    VectorXd sw(n);
    double ridge = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = std::clamp(std::abs(r[i]) / (std::abs(r[i]) + c), 1e-10, 1.0 - 1e-10);
      sw[i] = std::sqrt(1.0 / t);
      ridge += 1.0 / (1.0 - t);
    }
    ridge *= eps * eps;
    const MatrixXd xw = sw.asDiagonal() * inst.design;
    MatrixXd a = MatrixXd::Zero(p, p);
    a.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
    a.diagonal().array() += ridge;
    const VectorXd rhs = xw.transpose() * sw.cwiseProduct(inst.labels);
    const VectorXd next = a.selfadjointView<Eigen::Lower>().llt().solve(rhs);
    const double l = adversarial_loss(next, inst, eps);
    ++st.iterations;
    if (!(l < st.loss)) return;
    const double gain = st.loss - l;
    st.theta = next;
    st.loss = l;
    st.trace.push_back(l);
    if (gain <= 1e-13 * (1.0 + l)) return;
  }
}

// Active-set Newton. Samples in Z are held at zero residual through equality
// constraints; the others keep a fixed residual sign so the loss is smooth.
// Returns the final zero set.
std::vector<char> active_set_phase(TrainState& st, const FiniteInstance& inst, double eps,
                                   const MatrixXd& gram, double tol, int max_iter) {
  const int n = inst.n;
  const int p = inst.p;
  const double dn = n;
  VectorXd r = inst.labels - inst.design * st.theta;
  std::vector<char> zero(n, 0);
  VectorXd s(n);
  {
    const double c = eps * st.theta.norm();
    for (int i = 0; i < n; ++i) {
      zero[i] = std::abs(r[i]) < 1e-4 * (std::abs(r[i]) + c);
      s[i] = zero[i] ? 0.0 : (r[i] >= 0.0 ? 1.0 : -1.0);
    }
  }
  int releases = 0;
  int flat = 0;  // consecutive steps without a loss decrease
  while (st.iterations < max_iter) {
    const double nt = st.theta.norm();
    if (nt == 0.0) break;
    const double c = eps * nt;
    const VectorXd u = st.theta / nt;
    std::vector<int> z_idx;
    for (int i = 0; i < n; ++i) {
      if (zero[i]) z_idx.push_back(i);
    }
    const int m = static_cast<int>(z_idx.size());
    MatrixXd xz(m, p);
    for (int k = 0; k < m; ++k) xz.row(k) = inst.design.row(z_idx[k]);

    VectorXd wn(n);
    double a_sum = dn * c;
    for (int i = 0; i < n; ++i) {
      wn[i] = zero[i] ? 0.0 : r[i] + c * s[i];
      if (!zero[i]) a_sum += s[i] * r[i];
    }
    const VectorXd xs = inst.design.transpose() * s;  // s is 0 on Z
    const VectorXd g = (-inst.design.transpose() * wn + eps * a_sum * u) / dn;

    MatrixXd h = gram;
    if (m > 0) h.noalias() -= xz.transpose() * xz;
    h -= eps * (xs * u.transpose() + u * xs.transpose());
    h += (eps * a_sum / nt) * (MatrixXd::Identity(p, p) - u * u.transpose());
    h += dn * eps * eps * (u * u.transpose());
    h /= dn;

    MatrixXd kkt = MatrixXd::Zero(p + m, p + m);
    kkt.topLeftCorner(p, p) = h;
    kkt.topLeftCorner(p, p).diagonal().array() += 1e-14 * (1.0 + h.diagonal().maxCoeff());
    if (m > 0) {
      kkt.topRightCorner(p, m) = xz.transpose();
      kkt.bottomLeftCorner(m, p) = xz;
    }
    VectorXd rhs(p + m);
    rhs.head(p) = -g;
    for (int k = 0; k < m; ++k) rhs[p + k] = r[z_idx[k]];
    const VectorXd sol = kkt.partialPivLu().solve(rhs);
    const VectorXd d = sol.head(p);
    const VectorXd nu = sol.tail(m);
    const VectorXd dr = -(inst.design * d);

    // First sign change among the smooth samples blocks the step.
    double step = 1.0;
    int blocking = -1;
    for (int i = 0; i < n; ++i) {
      if (zero[i] || s[i] * dr[i] >= 0.0) continue;
      const double ratio = -(s[i] * r[i]) / (s[i] * dr[i]);
      if (ratio < step) {
        step = ratio;
        blocking = i;
      }
    }
    VectorXd trial;
    double trial_loss = 0.0;
    for (;;) {
      trial = st.theta + step * d;
      trial_loss = adversarial_loss(trial, inst, eps);
      if (trial_loss <= st.loss) break;
      step *= 0.5;
      blocking = -1;
      if (step < 1e-12) break;
    }
    ++st.iterations;
    if (step < 1e-12) break;
    st.theta = trial;
    flat = trial_loss < st.loss ? 0 : flat + 1;
    if (trial_loss < st.loss) st.trace.push_back(trial_loss);
    st.loss = std::min(st.loss, trial_loss);
    r = inst.labels - inst.design * st.theta;
    if (blocking >= 0) {
      zero[blocking] = 1;
      s[blocking] = 0.0;
      continue;
    }
    if (subgradient_norm_with(st.theta, inst, eps, zero) <= tol * (1.0 + st.loss)) break;
    if (flat > 50) break;
    if (step == 1.0 && d.norm() <= 1e-10 * (1.0 + st.theta.norm())) {
      // Stationary on the face; release the worst multiplier, if any.
      int worst = -1;
      double worst_abs = 1.0 + 1e-9;
      for (int k = 0; k < m; ++k) {
        const double sz = -dn * nu[k] / c;
        if (std::abs(sz) > worst_abs) {
          worst_abs = std::abs(sz);
          worst = k;
        }
      }
      if (worst < 0 || releases > 4 * n) break;
      ++releases;
      const int j = z_idx[worst];
      zero[j] = 0;
      s[j] = nu[worst] < 0.0 ? 1.0 : -1.0;
    }
  }
  return zero;
}

}  // namespace

int sample_count(double delta, int p) {
  return std::max(1, static_cast<int>(std::llround(delta * static_cast<double>(p))));
}

FiniteInstance generate_instance(int n, int p, const AsymptoticConfig& cfg, SeededRng& rng) {
  if (n < 1 || p < 1) throw InvalidArgument("n and p must be >= 1");
  cfg.validate();
  FiniteInstance inst;
  inst.n = n;
  inst.p = p;
  inst.design.resize(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) inst.design(i, j) = rng.normal();
  }
  inst.theta0.resize(p);
  for (int j = 0; j < p; ++j) inst.theta0[j] = rng.normal();
  const double norm = inst.theta0.norm();
  if (cfg.v_norm == 0.0 || norm == 0.0) {
    inst.theta0.setZero();
  } else {
    inst.theta0 *= cfg.v_norm * std::sqrt(static_cast<double>(p)) / norm;
  }
  inst.sigma0 = cfg.sigma * std::sqrt(static_cast<double>(p));
  inst.labels = inst.design * inst.theta0;
  for (int i = 0; i < n; ++i) {
    const double w = rng.normal();
    if (inst.sigma0 > 0.0) inst.labels[i] += inst.sigma0 * w;
  }
  return inst;
}

double adversarial_loss(const Eigen::Ref<const VectorXd>& theta, const FiniteInstance& inst,
                        double eps) {
  check_theta(theta, inst);
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
  const VectorXd r = inst.labels - inst.design * theta;
  return loss_from_residual(r, eps * theta.norm());
}

double adversarial_subgradient_norm(const Eigen::Ref<const VectorXd>& theta,
                                    const FiniteInstance& inst, double eps) {
  check_theta(theta, inst);
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
  if (eps > 0.0 && theta.norm() == 0.0) return zero_subgradient_norm(inst, eps);
  const VectorXd r = inst.labels - inst.design * theta;
  const double cut = zero_residual_cutoff(inst);
  std::vector<char> zero(inst.n);
  for (int i = 0; i < inst.n; ++i) zero[i] = std::abs(r[i]) <= cut;
  return subgradient_norm_with(theta, inst, eps, zero);
}

TrainReport train_adversarial(const FiniteInstance& inst, double eps, double tol, int max_iter) {
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
  const int p = inst.p;
  TrainState st;
  st.theta = VectorXd::Zero(p);
  st.loss = adversarial_loss(st.theta, inst, eps);
  st.trace.push_back(st.loss);

  auto finish = [&](double gnorm) {
    TrainReport rep;
    rep.theta_hat = st.theta;
    rep.final_loss = st.loss;
    rep.iterations = st.iterations;
    rep.grad_norm = gnorm;
    rep.loss_trace = st.trace;
    if (!(gnorm <= tol * (1.0 + st.loss))) {
      throw TrainingDidNotConverge("adversarial training did not reach the gradient tolerance",
                                   std::move(rep));
    }
    return rep;
  };

  const VectorXd ls = inst.design.completeOrthogonalDecomposition().solve(inst.labels);
  if (eps == 0.0) {
    // Minimum-norm least squares; one step from theta = 0.
    const double l = adversarial_loss(ls, inst, 0.0);
    ++st.iterations;
    if (l < st.loss) {
      st.theta = ls;
      st.loss = l;
      st.trace.push_back(l);
    }
    const double gnorm =
        (inst.design.transpose() * (inst.labels - inst.design * st.theta)).norm() / inst.n;
    return finish(gnorm);
  }
  if (zero_subgradient_norm(inst, eps) == 0.0) return finish(0.0);

  // Warm start at half the least-squares fit when that beats theta = 0.
  const VectorXd start = 0.5 * ls;
  const double start_loss = adversarial_loss(start, inst, eps);
  ++st.iterations;
  if (start_loss < st.loss) {
    st.theta = start;
    st.loss = start_loss;
    st.trace.push_back(start_loss);
  } else {
    st.theta = 1e-3 * ls;
    st.loss = adversarial_loss(st.theta, inst, eps);
    st.trace.push_back(st.loss);
  }

  MatrixXd gram = MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(inst.design.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  double gnorm = std::numeric_limits<double>::infinity();
  int mm_steps = 20;
  for (int round = 0; round < 6 && st.iterations < max_iter; ++round) {
    mm_phase(st, inst, eps, mm_steps, max_iter);
    const std::vector<char> zero = active_set_phase(st, inst, eps, gram, tol, max_iter);
    gnorm = st.theta.norm() > 0.0 ? subgradient_norm_with(st.theta, inst, eps, zero)
                                   : zero_subgradient_norm(inst, eps);
    if (gnorm <= tol * (1.0 + st.loss)) break;
    mm_steps *= 2;
  }
  return finish(gnorm);
}

RiskPoint empirical_risk_point(const FiniteInstance& inst,
                               const Eigen::Ref<const VectorXd>& theta_hat,
                               const AsymptoticConfig& cfg) {
  RiskPoint pt;
  pt.sr = standard_risk(theta_hat, inst.theta0, inst.sigma0);
  pt.ar = adversarial_risk(theta_hat, inst.theta0, inst.sigma0, cfg.eps_test);
  pt.source = RiskSource::empirical;
  pt.knob = cfg.eps_train;
  pt.knob_kind = KnobKind::epsilon;
  return pt;
}

double pairwise_sum(const std::vector<double>& xs) {
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= 8) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += xs[i];
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) + self(self, mid, hi);
  };
  return rec(rec, 0, xs.size());
}

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  const double k = static_cast<double>(xs.size());
  out.mean = pairwise_sum(xs) / k;
  if (xs.size() > 1) {
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - out.mean) * (xs[i] - out.mean);
    out.se = std::sqrt(pairwise_sum(dev) / (k - 1.0) / k);
  }
  return out;
}

ReplicateResult run_replicate(const AsymptoticConfig& cfg, int p, std::uint64_t master_seed,
                              std::uint64_t k) {
  SeededRng rng = SeededRng::stream(master_seed, k);
  const FiniteInstance inst = generate_instance(sample_count(cfg.delta, p), p, cfg, rng);
  const TrainReport rep = train_adversarial(inst, cfg.eps_train);
  const RiskPoint pt = empirical_risk_point(inst, rep.theta_hat, cfg);
  ReplicateResult res;
  res.stream = k;
  res.err2 = (rep.theta_hat - inst.theta0).squaredNorm() / p;
  res.norm2 = rep.theta_hat.squaredNorm() / p;
  res.sr = pt.sr;
  res.ar = pt.ar;
  res.loss = rep.final_loss;
  res.grad_norm = rep.grad_norm;
  return res;
}

ReplicateSummary run_replicates(const AsymptoticConfig& cfg, int p, int seeds,
                                std::uint64_t master_seed, unsigned workers) {
  if (seeds < 1) throw InvalidArgument("seeds must be >= 1");
  if (p < 1) throw InvalidArgument("p must be >= 1");
  ReplicateSummary sum;
  sum.seeds = seeds;
  sum.runs.resize(seeds);
  parallel_for(static_cast<std::size_t>(seeds), workers, [&](std::size_t k) {
    sum.runs[k] = run_replicate(cfg, p, master_seed, k);
  });
  std::vector<double> err2;
  std::vector<double> norm2;
  std::vector<double> sr;
  std::vector<double> ar;
  for (const auto& r : sum.runs) {
    err2.push_back(r.err2);
    norm2.push_back(r.norm2);
    sr.push_back(r.sr);
    ar.push_back(r.ar);
  }
  sum.err2 = mean_stderr(err2);
  sum.norm2 = mean_stderr(norm2);
  sum.sr = mean_stderr(sr);
  sum.ar = mean_stderr(ar);
  return sum;
}

}  // namespace advtrade
