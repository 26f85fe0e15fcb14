#include "advtrade/saddle.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "advtrade/errors.hpp"
#include "doctest.h"

using namespace advtrade;

namespace {

AsymptoticConfig unit(double delta, double eps) {
  AsymptoticConfig c;
  c.delta = delta;
  c.sigma = 1.0;
  c.v_norm = 1.0;
  c.eps_train = eps;
  c.eps_test = 0.5;
  return c;
}

// Plain bisection on the characteristic function, independent of tau_star.
double tau_bisect(double a, double beta, double tau_g) {
  double lo = 0.0;
  double hi = 1.0;
  while (tau_characteristic(hi, a, beta, tau_g) > 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tau_characteristic(mid, a, beta, tau_g) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double golden_min(const std::function<double(double)>& f, double lo, double hi) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  for (int i = 0; i < 200; ++i) {
    const double c = b - r * (b - a);
    const double d = a + r * (b - a);
    (f(c) < f(d) ? b : a) = (f(c) < f(d) ? d : c);
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("tau_star solves the characteristic equation") {
  for (double a : {0.8, 1.0, 2.0, 5.0, 40.0}) {
    for (double beta : {0.1, 1.0, 7.0}) {
      for (double tg : {0.05, 1.0, 3.0}) {
        const double t = tau_star(a, beta, tg);
        CHECK(std::abs(tau_characteristic(t, a, beta, tg)) <= 1e-12 * a);
        CHECK(t == doctest::Approx(tau_bisect(a, beta, tg)).epsilon(1e-12));
      }
    }
  }
  // At the indicator boundary the root is zero.
  CHECK(tau_star(kSqrt2OverPi, 1.0, 1.0) == 0.0);
}

TEST_CASE("tau_star is increasing in a and decreasing in beta / tau_g") {
  double prev = 0.0;
  for (double a = 0.8; a < 10.0; a += 0.3) {
    const double t = tau_star(a, 1.0, 1.0);
    CHECK(t > prev);
    prev = t;
  }
  CHECK(tau_star(2.0, 2.0, 1.0) < tau_star(2.0, 1.0, 1.0));
  CHECK(tau_star(2.0, 1.0, 2.0) > tau_star(2.0, 1.0, 1.0));
}

TEST_CASE("tau_star rejects bad arguments") {
  CHECK_THROWS_AS(tau_star(0.5, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(tau_star(1.0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(tau_star(1.0, 1.0, -1.0), InvalidArgument);
}

TEST_CASE("D hand value with the indicator off") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  const SaddleVars v{1.0, 1.0, 0.0, 1.0, 1.0};
  // 2*1*2/4 - 1/2 + 0 - 1/2 + 1/2
  CHECK(evaluate_D(v, cfg) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(erf_term(v, cfg) == 0.0);
}

TEST_CASE("D argument checks") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  CHECK_THROWS_AS(evaluate_D({1.0, 1.0, 0.0, 0.0, 1.0}, cfg), InvalidArgument);
  CHECK_THROWS_AS(evaluate_D({1.0, 1.0, 0.0, 1.0, 0.0}, cfg), InvalidArgument);
  CHECK_THROWS_AS(evaluate_D({1.0, -1.0, 0.0, 1.0, 1.0}, cfg), InvalidArgument);
  CHECK_THROWS_AS(evaluate_D({1.0, 1.0, 0.0, 1.0, 1.0}, unit(2.0, 0.0)), DomainError);
  AsymptoticConfig noiseless = cfg;
  noiseless.sigma = 0.0;
  CHECK_THROWS_AS(evaluate_D({0.0, 1.0, 0.0, 1.0, 1.0}, noiseless), DomainError);
}

TEST_CASE("erf term equals delta times the minimum of g_limit over tau") {
  const AsymptoticConfig cfg = unit(2.0, 0.4);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.2, 2.5);
  int active = 0;
  for (int k = 0; k < 30; ++k) {
    const SaddleVars v{u(gen), u(gen), 3.0 * u(gen), u(gen), u(gen)};
    const double omega = std::hypot(v.alpha, cfg.sigma);
    const double mu = v.tau_g / v.beta;
    auto g = [&](double tau) { return g_limit(mu, tau, v.gamma, omega, cfg); };
    // g is exactly flat once erfc underflows, so scan before refining.
    double best = 0.0;
    for (int i = 1; i <= 4000; ++i) {
      const double tau = 12.0 * omega * i / 4000.0;
      if (g(tau) < g(best)) best = tau;
    }
    const double step = 12.0 * omega / 4000.0;
    const double tau = golden_min(g, std::max(best - step, 0.0), best + step);
    const double expected = cfg.delta * g(tau);
    CHECK(erf_term(v, cfg) == doctest::Approx(expected).epsilon(1e-8).scale(1.0));
    const double a = indicator_ratio(v, cfg);
    // Past t* ~ 3 the minimum is too flat in double precision to locate.
    if (a > kSqrt2OverPi && tau_star(a, v.beta, v.tau_g) < 3.0) {
      ++active;
      CHECK(tau == doctest::Approx(omega * tau_star(a, v.beta, v.tau_g)).epsilon(1e-4));
    }
  }
  CHECK(active >= 5);
}

TEST_CASE("g_limit tail and zero-gamma values") {
  const AsymptoticConfig cfg = unit(2.0, 0.4);
  const double mu = 0.7;
  const double omega = 1.3;
  const double gamma = 0.9;
  const double w2 = omega * omega;
  const double lead = gamma * (mu + 1.0) / (cfg.delta * cfg.eps_train * omega);
  const double far = w2 / (2.0 * mu * (mu + 1.0)) - w2 / (2.0 * (mu + 1.0) * (mu + 1.0)) * lead * lead;
  CHECK(g_limit(mu, 1e3 * omega, gamma, omega, cfg) == doctest::Approx(far).epsilon(1e-14));
  // gamma = 0 leaves the positive part at zero for every tau.
  for (double tau : {0.0, 0.3, 1.0, 4.0}) {
    const double t = tau / omega;
    const double first =
        w2 / (2.0 * mu * (mu + 1.0)) *
        ((1.0 - kSqrt2OverPi * t * std::exp(-0.5 * t * t)) + (t * t - 1.0) * std::erfc(t / std::sqrt(2.0)));
    CHECK(g_limit(mu, tau, 0.0, omega, cfg) == doctest::Approx(first).epsilon(1e-14));
  }
  CHECK_THROWS_AS(g_limit(0.0, 1.0, 1.0, 1.0, cfg), InvalidArgument);
  CHECK_THROWS_AS(g_limit(1.0, 1.0, 1.0, 1.0, unit(2.0, 0.0)), DomainError);
}

TEST_CASE("gradient_D matches central differences") {
  const AsymptoticConfig cfg = unit(1.7, 0.6);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  for (int k = 0; k < 40; ++k) {
    const SaddleVars v{u(gen), u(gen), 2.0 * u(gen), u(gen), u(gen)};
    const SaddleGradient g = gradient_D(v, cfg);
    auto fd = [&](double SaddleVars::*field) {
      const double h = 1e-6;
      SaddleVars up = v;
      SaddleVars dn = v;
      up.*field += h;
      dn.*field -= h;
      return (evaluate_D(up, cfg) - evaluate_D(dn, cfg)) / (2.0 * h);
    };
    CHECK(g.alpha == doctest::Approx(fd(&SaddleVars::alpha)).epsilon(1e-6).scale(1.0));
    CHECK(g.beta == doctest::Approx(fd(&SaddleVars::beta)).epsilon(1e-6).scale(1.0));
    CHECK(g.gamma == doctest::Approx(fd(&SaddleVars::gamma)).epsilon(1e-6).scale(1.0));
    CHECK(g.tau_h == doctest::Approx(fd(&SaddleVars::tau_h)).epsilon(1e-6).scale(1.0));
    CHECK(g.tau_g == doctest::Approx(fd(&SaddleVars::tau_g)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("D and its gradient are continuous across the indicator boundary") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  SaddleVars v{0.8, 1.1, 0.0, 0.9, 0.7};
  const double at_one = indicator_ratio({v.alpha, v.beta, 1.0, v.tau_h, v.tau_g}, cfg);
  SaddleVars below = v;
  SaddleVars above = v;
  below.gamma = kSqrt2OverPi * (1.0 - 1e-6) / at_one;
  above.gamma = kSqrt2OverPi * (1.0 + 1e-6) / at_one;
  CHECK(indicator_ratio(below, cfg) < kSqrt2OverPi);
  CHECK(indicator_ratio(above, cfg) > kSqrt2OverPi);
  CHECK(std::abs(evaluate_D(above, cfg) - evaluate_D(below, cfg)) < 1e-5);
  const SaddleGradient gb = gradient_D(below, cfg);
  const SaddleGradient ga = gradient_D(above, cfg);
  CHECK(std::abs(ga.alpha - gb.alpha) < 1e-5);
  CHECK(std::abs(ga.gamma - gb.gamma) < 1e-5);
  CHECK(std::abs(ga.tau_g - gb.tau_g) < 1e-5);
}

TEST_CASE("zero budget closed form") {
  const SaddleSolution s = solve_saddle(unit(2.0, 0.0));
  CHECK(s.alpha == 1.0);
  CHECK(s.tau_g == 1.0);
  CHECK(s.beta == 1.0);
  CHECK(s.tau_h == 1.0);
  CHECK(s.gamma == 0.0);
  CHECK(asymptotic_risks(s, unit(2.0, 0.0)).sr == 2.0);
  // sigma^2 delta / (delta - 1) next to the interpolation threshold.
  CHECK(asymptotic_risks(solve_saddle(unit(1.02, 0.0)), unit(1.02, 0.0)).sr ==
        doctest::Approx(51.0).epsilon(1e-12));
  CHECK_THROWS_AS(solve_saddle(unit(1.0, 0.0)), DomainError);
  CHECK_THROWS_AS(solve_saddle(unit(0.5, 0.0)), DomainError);
}

TEST_CASE("generic solver agrees with the zero budget limit") {
  const SaddleSolution s = solve_saddle(unit(2.0, 1e-4));
  CHECK(std::abs(s.alpha - 1.0) < 1e-3);
  CHECK(s.stationarity <= 1e-7);
}

TEST_CASE("saddle point reference values at delta 2, eps 0.5") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  const SaddleSolution s = solve_saddle(cfg);
  // Independent dense-grid prototype, five significant digits.
  CHECK(s.alpha == doctest::Approx(0.64863).epsilon(2e-5));
  CHECK(s.beta == doctest::Approx(1.6415).epsilon(5e-5));
  CHECK(s.gamma == doctest::Approx(1.0288).epsilon(5e-5));
  CHECK(s.tau_h == doctest::Approx(1.2502).epsilon(5e-5));
  CHECK(s.tau_g == doctest::Approx(0.50554).epsilon(2e-5));
  CHECK(s.d_value == doctest::Approx(1.35536).epsilon(2e-5));
  CHECK(s.stationarity <= 1e-7);
  CHECK(!s.zero_estimator);
  CHECK(s.tau_star == doctest::Approx(tau_star(indicator_ratio(s.vars(), cfg), s.beta, s.tau_g)));
}

TEST_CASE("local saddle probe") {
  const AsymptoticConfig cfg = unit(3.0, 0.3);
  const SaddleSolution s = solve_saddle(cfg);
  const SaddleVars v = s.vars();
  const double d0 = evaluate_D(v, cfg);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double h = 1e-3;
    SaddleVars x = v;
    x.alpha += h * n(gen);
    x.tau_g += h * n(gen);
    CHECK(evaluate_D(x, cfg) >= d0 - 1e-10);
    SaddleVars y = v;
    y.beta += h * n(gen);
    y.gamma += h * n(gen);
    y.tau_h += h * n(gen);
    CHECK(evaluate_D(y, cfg) <= d0 + 1e-10);
  }
}

TEST_CASE("zero estimator regime") {
  const AsymptoticConfig base = unit(2.0, 0.0);
  const double eps0 = zero_estimator_threshold(base);
  CHECK(eps0 == doctest::Approx(std::sqrt(2.0) / (kSqrt2OverPi * std::sqrt(2.0))));
  const AsymptoticConfig big = unit(2.0, 1.5 * eps0);
  const SaddleSolution s = solve_saddle(big);
  CHECK(s.zero_estimator);
  CHECK(s.alpha == 1.0);
  CHECK(asymptotic_estimator_norm(s, big) == 0.0);
  const RiskPair r = asymptotic_risks(s, big);
  CHECK(r.sr == 2.0);
  CHECK(r.ar == 2.0);
  // Just below the threshold the estimator is small but nonzero.
  const AsymptoticConfig near = unit(2.0, 0.97 * eps0);
  const SaddleSolution t = solve_saddle(near);
  CHECK(!t.zero_estimator);
  const double norm = asymptotic_estimator_norm(t, near);
  CHECK(norm > 0.0);
  CHECK(norm < 0.3);
}

TEST_CASE("small eps expansion") {
  AsymptoticConfig cfg = unit(3.0, 0.0);
  cfg.sigma = 0.5;
  cfg.v_norm = 2.0;
  const SmallEpsExpansion e = sr_small_eps(cfg);
  CHECK(e.intercept == doctest::Approx(3.0 * 0.25 / 2.0));
  auto sr = [&](double eps) {
    AsymptoticConfig c = cfg;
    c.eps_train = eps;
    return asymptotic_risks(solve_saddle(c), c).sr;
  };
  CHECK(sr(0.0) == doctest::Approx(e.intercept).epsilon(1e-14));
  // Richardson-extrapolated forward difference.
  const double h = 0.004;
  const double slope = 2.0 * (sr(h) - sr(0.0)) / h - (sr(2.0 * h) - sr(0.0)) / (2.0 * h);
  CHECK(slope == doctest::Approx(e.slope).epsilon(0.02));
  CHECK_THROWS_AS(sr_small_eps(unit(0.8, 0.0)), DomainError);
}

TEST_CASE("box contact raises or enlarges") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  SaddleOptions strict;
  strict.auto_enlarge = false;
  strict.box_scale = 0.005;  // K_alpha = 0.5 < alpha*
  CHECK_THROWS_AS(solve_saddle(cfg, strict), BoxTooSmall);
  SaddleOptions grow = strict;
  grow.auto_enlarge = true;
  const SaddleSolution s = solve_saddle(cfg, grow);
  CHECK(s.box_alpha == doctest::Approx(1.0));
  CHECK(s.alpha == doctest::Approx(solve_saddle(cfg).alpha).epsilon(1e-8));
  CHECK(s.alpha < s.box_alpha);
  CHECK(s.beta < s.box_beta);
}

TEST_CASE("large delta limit is the population minimizer") {
  // As delta grows adversarial training minimizes SR + 2c eps N sqrt(SR) + eps^2 N^2
  // along theta0 / (1 + g); locate that minimizer directly.
  for (double eps : {0.1, 0.3, 0.6}) {
    auto population = [&](double g) {
      const double n = 1.0 / (1.0 + g);
      const double sr = 1.0 + (g * n) * (g * n);
      return sr + 2.0 * kSqrt2OverPi * eps * n * std::sqrt(sr) + eps * eps * n * n;
    };
    const double g = golden_min(population, 0.0, 20.0);
    const double sr_pop = 1.0 + (g / (1.0 + g)) * (g / (1.0 + g));
    const AsymptoticConfig cfg = unit(1e4, eps);
    const double sr = asymptotic_risks(solve_saddle(cfg), cfg).sr;
    CHECK(sr == doctest::Approx(sr_pop).epsilon(2e-4));
  }
}

TEST_CASE("solver covers the default double descent grid") {
  for (double eps : {0.1, 0.4, 0.8}) {
    for (int i = 0; i < 57; i += 4) {
      const double inv = 0.2 + i * (3.0 - 0.2) / 56.0;
      const AsymptoticConfig cfg = unit(1.0 / inv, eps);
      const SaddleSolution s = solve_saddle(cfg);
      CHECK(s.stationarity <= 1e-7);
      CHECK(s.alpha > 0.0);
    }
  }
}
