#include "advtrade/saddle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "advtrade/errors.hpp"

namespace advtrade {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Pieces of the erf correction shared by D and its gradient.
struct ErfParts {
  bool active = false;
  double omega = 0.0;
  double mu = 0.0;  // tau_g / beta
  double a = 0.0;   // indicator ratio
  double t = 0.0;   // tau_star(a, beta, tau_g)
  double k = 0.0;   // omega^2 / (2 mu (mu + 1))
};

ErfParts erf_parts(const SaddleVars& v, const AsymptoticConfig& cfg) {
  ErfParts e;
  e.omega = std::hypot(v.alpha, cfg.sigma);
  e.mu = v.tau_g / v.beta;
  e.a = v.gamma * (v.tau_g + v.beta) / (cfg.delta * cfg.eps_train * v.beta * e.omega);
  e.active = e.a > kSqrt2OverPi;
  if (e.active) {
    e.t = tau_star(e.a, v.beta, v.tau_g);
    e.k = e.omega * e.omega / (2.0 * e.mu * (e.mu + 1.0));
  }
  return e;
}

void check_vars(const SaddleVars& v, const AsymptoticConfig& cfg) {
  if (!(v.tau_h > 0.0) || !(v.tau_g > 0.0)) {
    throw InvalidArgument("tau_h and tau_g must be > 0");
  }
  if (!(v.beta > 0.0)) throw InvalidArgument("beta must be > 0");
  if (!(v.alpha >= 0.0) || !(v.gamma >= 0.0)) throw InvalidArgument("alpha, gamma must be >= 0");
  if (!(cfg.eps_train > 0.0)) throw DomainError("D is defined for eps_train > 0 only");
  if (v.alpha == 0.0 && cfg.sigma == 0.0) throw DomainError("alpha = sigma = 0 makes D singular");
}

// ---------------------------------------------------------------------------
// Small projected Newton method for box-constrained smooth minimization.

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

template <int N>
struct Box {
  Vec<N> lo;
  Vec<N> hi;

  Vec<N> clamp(const Vec<N>& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
};

template <int N>
double projected_gradient_norm(const Vec<N>& x, const Vec<N>& g, const Box<N>& box) {
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    if (x[i] <= box.lo[i] && g[i] > 0.0) continue;
    if (x[i] >= box.hi[i] && g[i] < 0.0) continue;
    worst = std::max(worst, std::abs(g[i]));
  }
  return worst;
}

template <int N>
struct NewtonResult {
  Vec<N> x;
  double f = 0.0;
  double pg = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <int N, typename Grad>
Mat<N> fd_hessian(Grad& grad, const Vec<N>& x, const Box<N>& box) {
  Mat<N> h;
  for (int j = 0; j < N; ++j) {
    const double step = 1e-6 * std::max(std::abs(x[j]), 1e-6);
    Vec<N> up = x;
    Vec<N> down = x;
    double width = 2.0 * step;
    if (x[j] + step > box.hi[j]) {
      width = step;
    } else {
      up[j] += step;
    }
    if (x[j] - step < box.lo[j]) {
      width = (width == 2.0 * step) ? step : 0.0;
    } else {
      down[j] -= step;
    }
    if (width == 0.0) {
      h.col(j).setZero();
      h(j, j) = 1.0;
      continue;
    }
    h.col(j) = (grad(up) - grad(down)) / width;
  }
  return 0.5 * (h + h.transpose());
}

template <int N, typename Fn, typename Grad, typename Hess>
NewtonResult<N> projected_newton(Fn& f, Grad& grad, Hess& hess, Vec<N> x, const Box<N>& box,
                                 double tol, int max_iter) {
  NewtonResult<N> res;
  x = box.clamp(x);
  double fx = f(x);
  Vec<N> g = grad(x);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it;
    const double pg = projected_gradient_norm<N>(x, g, box);
    if (pg <= tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    std::array<bool, N> free{};
    for (int i = 0; i < N; ++i) {
      free[i] = !((x[i] <= box.lo[i] && g[i] > 0.0) || (x[i] >= box.hi[i] && g[i] < 0.0));
    }
    Mat<N> h = hess(x);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (i != j && (!free[i] || !free[j])) h(i, j) = 0.0;
      }
      if (!free[i]) h(i, i) = 1.0;
    }
    Vec<N> dir;
    double shift = 0.0;
    const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    for (int attempt = 0;; ++attempt) {
      Eigen::LLT<Mat<N>> llt(h + shift * Mat<N>::Identity());
      if (llt.info() == Eigen::Success) {
        dir = -llt.solve(g);
        break;
      }
      shift = attempt == 0 ? 1e-10 * scale : shift * 10.0;
      if (attempt > 40) {
        dir = -g / scale;
        break;
      }
    }
    for (int i = 0; i < N; ++i) {
      if (!free[i]) dir[i] = 0.0;
    }
    // Scale variables may shrink by at most a factor of ten per iteration.
    double t = 1.0;
    for (int i = 0; i < N; ++i) {
      if (dir[i] < 0.0 && x[i] > 0.0) t = std::min(t, 0.9 * x[i] / -dir[i]);
    }
    const double t0 = t;
    bool accepted = false;
    Vec<N> trial;
    double ftrial = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      trial = box.clamp(x + t * dir);
      ftrial = f(trial);
      if (std::isfinite(ftrial) && ftrial <= fx + 1e-4 * g.dot(trial - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    Vec<N> g_trial;
    bool have_grad = false;
    if (!accepted) {
      // Near the rounding floor f no longer resolves progress; accept the
      // Newton step if f does not rise beyond rounding and the gradient halves.
      trial = box.clamp(x + t0 * dir);
      ftrial = f(trial);
      if (std::isfinite(ftrial) && ftrial <= fx + 1e-13 * (1.0 + std::abs(fx))) {
        g_trial = grad(trial);
        have_grad = true;
        accepted = projected_gradient_norm<N>(trial, g_trial, box) < 0.5 * pg;
      }
    }
    if (!accepted || trial == x) {
      // Rounding floor: no further decrease is representable.
      res.converged = pg <= 1e3 * tol * (1.0 + std::abs(fx));
      break;
    }
    x = trial;
    fx = ftrial;
    g = have_grad ? g_trial : grad(x);
    res.iterations = it + 1;
  }
  res.x = x;
  res.f = fx;
  res.pg = projected_gradient_norm<N>(x, g, box);
  return res;
}

// ---------------------------------------------------------------------------

double hypot_safe(double a, double b) { return std::sqrt(a * a + b * b); }

SaddleSolution zero_estimator_solution(const AsymptoticConfig& cfg) {
  const double omega = hypot_safe(cfg.v_norm, cfg.sigma);
  SaddleSolution sol;
  sol.zero_estimator = true;
  sol.alpha = cfg.v_norm;
  sol.tau_g = 0.0;
  sol.tau_h = cfg.delta * cfg.v_norm;
  sol.gamma = kSqrt2OverPi * cfg.delta * cfg.eps_train * omega;
  sol.beta = std::sqrt(std::max(sol.gamma * sol.gamma - sol.tau_h * sol.tau_h, 0.0));
  sol.tau_star = 0.0;
  sol.d_value = 0.5 * cfg.delta * omega * omega;
  sol.stationarity = 0.0;
  return sol;
}

SaddleSolution zero_budget_solution(const AsymptoticConfig& cfg) {
  const double root = std::sqrt(cfg.delta - 1.0);
  SaddleSolution sol;
  sol.alpha = cfg.sigma / root;
  sol.tau_g = sol.alpha;
  sol.beta = cfg.sigma * root;
  sol.tau_h = sol.beta;
  sol.gamma = 0.0;
  sol.tau_star = 0.0;
  // D restricted to gamma = 0 at the stationary point.
  const double d = cfg.delta;
  const double w2 = sol.alpha * sol.alpha + cfg.sigma * cfg.sigma;
  sol.d_value = d * sol.beta * w2 / (2.0 * (sol.tau_g + sol.beta)) -
                sol.alpha * sol.beta * sol.beta / (2.0 * sol.tau_h) - sol.alpha * sol.tau_h / 2.0 +
                sol.beta * sol.tau_g / 2.0;
  sol.stationarity = 0.0;
  return sol;
}

struct Start {
  Vec<2> inner;  // alpha, tau_g
  Vec<3> outer;  // beta, gamma, tau_h
};

Start initial_point(const AsymptoticConfig& cfg) {
  const double s = std::max(cfg.sigma, 1e-3 * std::max(cfg.v_norm, 1.0));
  const double d = cfg.delta;
  double alpha;
  double beta;
  if (d > 1.05) {
    alpha = s / std::sqrt(d - 1.0);
    beta = s * std::sqrt(d - 1.0);
  } else {
    alpha = std::max(1.0, std::max(cfg.sigma, cfg.v_norm));
    beta = std::max(cfg.eps_train * cfg.eps_train, 1e-3);
  }
  alpha = std::min(alpha, 10.0 * std::max({1.0, cfg.sigma, cfg.v_norm}));
  const double tau_g = alpha;
  const double omega = hypot_safe(alpha, cfg.sigma);
  // Start inside the indicator-active region.
  const double gamma =
      1.2 * kSqrt2OverPi * d * cfg.eps_train * beta * omega / (tau_g + beta);
  Start st;
  st.inner << alpha, tau_g;
  st.outer << beta, gamma, beta;
  return st;
}

struct NestedResult {
  Vec<2> inner;
  Vec<3> outer;
  double value = 0.0;
  double pg_inner = 0.0;
  double pg_outer = 0.0;
  int iterations = 0;
  bool converged = false;
};

SaddleVars make_vars(const Vec<2>& x, const Vec<3>& y) { return {x[0], y[0], y[1], y[2], x[1]}; }

// Hessian of D in the order (alpha, tau_g, beta, gamma, tau_h) by central
// differences of the analytic gradient.
Mat<5> hessian_D(const Vec<2>& x, const Vec<3>& y, const AsymptoticConfig& cfg) {
  Vec<5> z;
  z << x, y;
  auto grad = [&](const Vec<5>& p) {
    const SaddleGradient g = gradient_D({p[0], p[2], p[3], p[4], p[1]}, cfg);
    Vec<5> out;
    out << g.alpha, g.tau_g, g.beta, g.gamma, g.tau_h;
    return out;
  };
  Box<5> box;
  box.lo << 0.0, 1e-300, 1e-300, 0.0, 1e-300;
  box.hi.setConstant(kInf);
  if (cfg.sigma == 0.0) box.lo[0] = 1e-300;
  return fd_hessian<5>(grad, z, box);
}

NestedResult solve_nested(const AsymptoticConfig& cfg, const Start& start, double k_alpha,
                          double k_beta, const SaddleOptions& options) {
  constexpr double kFloor = 1e-12;
  Box<2> inner_box;
  // D is singular at alpha = sigma = 0.
  inner_box.lo << (cfg.sigma > 0.0 ? 0.0 : kFloor), kFloor;
  inner_box.hi << k_alpha, kInf;
  Box<3> outer_box;
  outer_box.lo << kFloor, 0.0, kFloor;
  outer_box.hi << k_beta, kInf, kInf;

  Vec<2> warm = start.inner;
  const Vec<2> cold = start.inner;
  auto inner_run = [&](const Vec<3>& y, const Vec<2>& from) {
    auto f = [&](const Vec<2>& x) { return evaluate_D(make_vars(x, y), cfg); };
    auto g = [&](const Vec<2>& x) {
      const SaddleGradient gr = gradient_D(make_vars(x, y), cfg);
      Vec<2> out;
      out << gr.alpha, gr.tau_g;
      return out;
    };
    auto h = [&](const Vec<2>& x) { return fd_hessian<2>(g, x, inner_box); };
    return projected_newton<2>(f, g, h, from, inner_box, 1e-12, 200);
  };
  auto inner_solve = [&](const Vec<3>& y) {
    NewtonResult<2> r = inner_run(y, warm);
    if (!r.converged) {
      const NewtonResult<2> fresh = inner_run(y, cold);
      if (fresh.converged || fresh.f < r.f) r = fresh;
    }
    if (r.converged) warm = r.x;
    return r;
  };
  // A trial point whose inner minimum is not resolved must not be accepted.
  auto outer_f = [&](const Vec<3>& y) {
    const NewtonResult<2> r = inner_solve(y);
    return r.converged ? -r.f : kInf;
  };
  auto outer_g = [&](const Vec<3>& y) {
    const NewtonResult<2> r = inner_solve(y);
    const SaddleGradient gr = gradient_D(make_vars(r.x, y), cfg);
    Vec<3> out;
    out << -gr.beta, -gr.gamma, -gr.tau_h;
    return out;
  };
  // Implicit-function Hessian of -min_x D: -(D_yy - D_yx D_xx^-1 D_xy), with
  // inner variables on a bound held fixed.
  auto outer_h = [&](const Vec<3>& y) {
    const NewtonResult<2> r = inner_solve(y);
    const Mat<5> h = hessian_D(r.x, y, cfg);
    Mat<3> schur = h.bottomRightCorner<3, 3>();
    const Vec<2> gi = h.topLeftCorner<2, 2>().diagonal();
    std::array<bool, 2> free{};
    for (int i = 0; i < 2; ++i) free[i] = r.x[i] > inner_box.lo[i] && r.x[i] < inner_box.hi[i];
    const Eigen::Matrix<double, 2, 3> cross = h.topRightCorner<2, 3>();
    if (free[0] && free[1]) {
      schur -= cross.transpose() * h.topLeftCorner<2, 2>().ldlt().solve(cross);
    } else {
      for (int i = 0; i < 2; ++i) {
        if (free[i] && gi[i] > 0.0) schur -= cross.row(i).transpose() * cross.row(i) / gi[i];
      }
    }
    return Mat<3>(-schur);
  };
  NewtonResult<3> outer = projected_newton<3>(outer_f, outer_g, outer_h, start.outer, outer_box,
                                              1e-11, options.max_outer_iterations);
  const NewtonResult<2> inner = inner_solve(outer.x);

  NestedResult res;
  res.inner = inner.x;
  res.outer = outer.x;
  res.value = inner.f;
  res.iterations = outer.iterations;
  const SaddleGradient gr = gradient_D(make_vars(inner.x, outer.x), cfg);
  Vec<2> gi;
  gi << gr.alpha, gr.tau_g;
  Vec<3> go;
  go << -gr.beta, -gr.gamma, -gr.tau_h;
  res.pg_inner = projected_gradient_norm<2>(inner.x, gi, inner_box);
  res.pg_outer = projected_gradient_norm<3>(outer.x, go, outer_box);
  res.converged = std::max(res.pg_inner, res.pg_outer) <= options.stationarity_tol;
  return res;
}

}  // namespace

double tau_characteristic(double tau, double a, double beta, double tau_g) {
  return a - (beta / tau_g) * tau - tau * std::erf(tau * kInvSqrt2) -
         kSqrt2OverPi * std::exp(-0.5 * tau * tau);
}

double tau_star(double a, double beta, double tau_g) {
  if (!(beta > 0.0) || !(tau_g > 0.0)) throw InvalidArgument("tau_star needs beta, tau_g > 0");
  if (!(a >= kSqrt2OverPi)) throw DomainError("tau_star needs a >= sqrt(2/pi)");
  auto f = [&](double t) { return tau_characteristic(t, a, beta, tau_g); };
  if (f(0.0) <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 80 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  // f is concave and decreasing, so Newton from the right end converges
  // monotonically without leaving the bracket.
  double t = hi;
  for (int i = 0; i < 50; ++i) {
    const double ft = f(t);
    if (ft == 0.0) break;
    const double slope = -(beta / tau_g + std::erf(t * kInvSqrt2));
    const double next = t - ft / slope;
    if (!(next < t) || next < lo) break;
    t = next;
  }
  return t;
}

double indicator_ratio(const SaddleVars& v, const AsymptoticConfig& cfg) {
  return v.gamma * (v.tau_g + v.beta) /
         (cfg.delta * cfg.eps_train * v.beta * std::hypot(v.alpha, cfg.sigma));
}

double erf_term(const SaddleVars& v, const AsymptoticConfig& cfg) {
  check_vars(v, cfg);
  const ErfParts e = erf_parts(v, cfg);
  if (!e.active) return 0.0;
  return cfg.delta * e.k * (std::erf(e.t * kInvSqrt2) - e.a * e.t);
}

double evaluate_D(const SaddleVars& v, const AsymptoticConfig& cfg) {
  check_vars(v, cfg);
  const double d = cfg.delta;
  const double w2 = v.alpha * v.alpha + cfg.sigma * cfg.sigma;
  double value = d * v.beta * w2 / (2.0 * (v.tau_g + v.beta));
  const ErfParts e = erf_parts(v, cfg);
  if (e.active) value += d * e.k * (std::erf(e.t * kInvSqrt2) - e.a * e.t);
  const double ab = v.alpha * v.beta / v.tau_h;
  value += -v.alpha / (2.0 * v.tau_h) * (v.gamma * v.gamma + v.beta * v.beta) +
           v.gamma * std::sqrt(ab * ab + cfg.v_norm * cfg.v_norm) - v.alpha * v.tau_h / 2.0 +
           v.beta * v.tau_g / 2.0;
  return value;
}

SaddleGradient gradient_D(const SaddleVars& v, const AsymptoticConfig& cfg) {
  check_vars(v, cfg);
  const double d = cfg.delta;
  const double w2 = v.alpha * v.alpha + cfg.sigma * cfg.sigma;
  const double sum = v.tau_g + v.beta;
  SaddleGradient g;

  // delta beta w^2 / (2 (tau_g + beta))
  g.alpha = d * v.beta * v.alpha / sum;
  g.beta = d * w2 * v.tau_g / (2.0 * sum * sum);
  g.tau_g = -d * v.beta * w2 / (2.0 * sum * sum);

  // Erf correction: delta K(omega, mu) min_t phi(t; a, mu). By the envelope
  // theorem d phi/da = -2 t*, d phi/dmu = -t*^2 / mu^2 at the minimizer.
  const ErfParts e = erf_parts(v, cfg);
  if (e.active) {
    const double erf_t = std::erf(e.t * kInvSqrt2);
    const double value = erf_t - e.a * e.t;
    const double d_omega = d * (2.0 * e.k / e.omega) * erf_t;  // includes a(omega)
    const double d_a = -2.0 * d * e.k * e.t;
    const double dk_dmu = -e.k * (2.0 * e.mu + 1.0) / (e.mu * (e.mu + 1.0));
    const double da_dmu = v.gamma / (d * cfg.eps_train * e.omega);
    const double d_mu = d * (dk_dmu * value - e.k * e.t * e.t / (e.mu * e.mu)) + d_a * da_dmu;
    g.alpha += d_omega * v.alpha / e.omega;
    g.gamma += d_a * (e.mu + 1.0) / (d * cfg.eps_train * e.omega);
    g.tau_g += d_mu / v.beta;
    g.beta += d_mu * (-e.mu / v.beta);
  }

  // -alpha (gamma^2 + beta^2) / (2 tau_h) + gamma R - alpha tau_h / 2 + beta tau_g / 2
  const double ab = v.alpha * v.beta / v.tau_h;
  const double r = std::sqrt(ab * ab + cfg.v_norm * cfg.v_norm);
  const double sq = v.gamma * v.gamma + v.beta * v.beta;
  // gamma * d R / d(.) with R = sqrt(ab^2 + V^2); guarded for R = 0.
  const double coupling = r > 0.0 ? v.gamma * ab / r : v.gamma;
  g.alpha += -sq / (2.0 * v.tau_h) + coupling * v.beta / v.tau_h - v.tau_h / 2.0;
  g.beta += -v.alpha * v.beta / v.tau_h + coupling * v.alpha / v.tau_h + v.tau_g / 2.0;
  g.gamma += -v.alpha * v.gamma / v.tau_h + r;
  g.tau_h += v.alpha * sq / (2.0 * v.tau_h * v.tau_h) - coupling * ab / v.tau_h - v.alpha / 2.0;
  g.tau_g += v.beta / 2.0;
  return g;
}

double g_limit(double mu, double tau, double gamma, double omega, const AsymptoticConfig& cfg) {
  if (!(mu > 0.0) || !(omega > 0.0) || !(tau >= 0.0)) {
    throw InvalidArgument("g_limit needs mu > 0, omega > 0, tau >= 0");
  }
  if (!(cfg.eps_train > 0.0)) throw DomainError("g_limit needs eps_train > 0");
  const double t = tau / omega;
  const double gauss = std::exp(-0.5 * t * t);
  const double tail = std::erfc(t * kInvSqrt2);
  const double w2 = omega * omega;
  const double first =
      w2 / (2.0 * mu * (mu + 1.0)) * ((1.0 - kSqrt2OverPi * t * gauss) + (t * t - 1.0) * tail);
  const double inner =
      gamma * (mu + 1.0) / (cfg.delta * cfg.eps_train * omega) + t * tail - kSqrt2OverPi * gauss;
  const double pos = std::max(inner, 0.0);
  return first - w2 / (2.0 * (mu + 1.0) * (mu + 1.0)) * pos * pos;
}

double zero_estimator_threshold(const AsymptoticConfig& cfg) {
  const double s2 = cfg.sigma * cfg.sigma;
  const double v2 = cfg.v_norm * cfg.v_norm;
  if (v2 + s2 == 0.0) return kInf;
  return std::sqrt(v2 + (v2 + s2) / cfg.delta) / (kSqrt2OverPi * std::sqrt(v2 + s2));
}

SaddleSolution solve_saddle(const AsymptoticConfig& cfg, const SaddleOptions& options) {
  cfg.validate();
  if (!cfg.has_asymptotic_prediction()) {
    throw DomainError("eps_train = 0 requires delta > 1");
  }
  if (cfg.eps_train == 0.0) return zero_budget_solution(cfg);
  if (cfg.eps_train >= zero_estimator_threshold(cfg)) return zero_estimator_solution(cfg);
  if (cfg.sigma == 0.0 && cfg.v_norm == 0.0) {
    throw DomainError("sigma = V = 0 gives a degenerate scalar problem");
  }

  if (!(options.box_scale > 0.0)) throw InvalidArgument("box_scale must be > 0");
  double k_alpha = options.box_scale * 100.0 * std::max({1.0, cfg.sigma, cfg.v_norm});
  double k_beta = options.box_scale * (100.0 * cfg.sigma * (1.0 + std::sqrt(cfg.delta)) + 100.0);
  Start start = initial_point(cfg);
  for (int attempt = 0;; ++attempt) {
    const NestedResult r = solve_nested(cfg, start, k_alpha, k_beta, options);
    const bool alpha_hit = r.inner[0] >= k_alpha * (1.0 - 1e-9);
    const bool beta_hit = r.outer[0] >= k_beta * (1.0 - 1e-9);
    if (alpha_hit || beta_hit) {
      if (!options.auto_enlarge || attempt >= options.max_enlargements) {
        throw BoxTooSmall(std::string("saddle point touches the ") +
                          (alpha_hit ? "K_alpha" : "K_beta") + " box");
      }
      if (alpha_hit) k_alpha *= 2.0;
      if (beta_hit) k_beta *= 2.0;
      start.inner = r.inner;
      start.outer = r.outer;
      continue;
    }
    if (!r.converged) {
      throw ConvergenceFailure("saddle solver did not reach the stationarity tolerance",
                               std::max(r.pg_inner, r.pg_outer));
    }
    SaddleSolution sol;
    sol.alpha = r.inner[0];
    sol.tau_g = r.inner[1];
    sol.beta = r.outer[0];
    sol.gamma = r.outer[1];
    sol.tau_h = r.outer[2];
    sol.d_value = r.value;
    sol.stationarity = std::max(r.pg_inner, r.pg_outer);
    sol.box_alpha = k_alpha;
    sol.box_beta = k_beta;
    sol.outer_iterations = r.iterations;
    const ErfParts e = erf_parts(sol.vars(), cfg);
    sol.tau_star = e.active ? e.t : 0.0;
    return sol;
  }
}

double asymptotic_estimator_norm(const SaddleSolution& sol, const AsymptoticConfig& cfg) {
  if (sol.zero_estimator) return 0.0;
  if (cfg.eps_train == 0.0) {
    return std::sqrt(cfg.v_norm * cfg.v_norm + cfg.sigma * cfg.sigma / (cfg.delta - 1.0));
  }
  const double omega = std::hypot(sol.alpha, cfg.sigma);
  return sol.beta * sol.tau_star * omega / (cfg.eps_train * sol.tau_g);
}

RiskPair asymptotic_risks(const SaddleSolution& sol, const AsymptoticConfig& cfg) {
  const double sr = cfg.sigma * cfg.sigma + sol.alpha * sol.alpha;
  const double norm = asymptotic_estimator_norm(sol, cfg);
  const double et = cfg.eps_test;
  const double ar = sr + et * et * norm * norm + 2.0 * kSqrt2OverPi * et * norm * std::sqrt(sr);
  return {sr, ar};
}

SmallEpsExpansion sr_small_eps(const AsymptoticConfig& cfg) {
  cfg.validate();
  if (!(cfg.delta > 1.0)) throw DomainError("small-eps expansion needs delta > 1");
  const double d = cfg.delta;
  const double s = cfg.sigma;
  const double v = cfg.v_norm;
  SmallEpsExpansion out;
  out.intercept = d * s * s / (d - 1.0);
  out.slope = -2.0 * kSqrt2OverPi * s * s * s * std::pow(d, 1.5) /
              ((d - 1.0) * (d - 1.0) * std::sqrt(s * s + v * v * (d - 1.0)));
  return out;
}

}  // namespace advtrade
