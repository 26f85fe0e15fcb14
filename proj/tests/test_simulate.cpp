#include "advtrade/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "advtrade/rng.hpp"
#include "advtrade/saddle.hpp"
#include "doctest.h"

using namespace advtrade;
using Eigen::VectorXd;

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

FiniteInstance draw(int n, int p, const AsymptoticConfig& cfg, std::uint64_t seed) {
  SeededRng rng(seed);
  return generate_instance(n, p, cfg, rng);
}

double sample_sd(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= xs.size();
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / (xs.size() - 1));
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  SeededRng a(42);
  SeededRng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  SeededRng s0 = SeededRng::stream(42, 0);
  SeededRng s1 = SeededRng::stream(42, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += s0.next_u64() == s1.next_u64();
  CHECK(equal == 0);
  SeededRng u(7);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("rng normals have unit moments") {
  SeededRng rng(123);
  const int n = 400000;
  double m1 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  CHECK(std::abs(m1 / n) < 5.0 / std::sqrt(n));
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(m4 / n == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("instance generation") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  const FiniteInstance inst = draw(400, 200, cfg, 1);
  CHECK(inst.design.rows() == 400);
  CHECK(inst.design.cols() == 200);
  CHECK(inst.theta0.squaredNorm() == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(inst.sigma0 == doctest::Approx(std::sqrt(200.0)));
  CHECK(std::abs(inst.design.mean()) < 0.01);
  CHECK(inst.design.squaredNorm() / inst.design.size() == doctest::Approx(1.0).epsilon(0.01));
  const VectorXd noise = inst.labels - inst.design * inst.theta0;
  CHECK(noise.squaredNorm() / 400.0 == doctest::Approx(200.0).epsilon(0.15));

  AsymptoticConfig quiet = cfg;
  quiet.sigma = 0.0;
  const FiniteInstance clean = draw(50, 20, quiet, 2);
  CHECK((clean.labels - clean.design * clean.theta0).norm() == 0.0);

  AsymptoticConfig null_model = cfg;
  null_model.v_norm = 0.0;
  const FiniteInstance pure = draw(50, 20, null_model, 3);
  CHECK(pure.theta0.norm() == 0.0);

  // Same seed, same instance.
  const FiniteInstance again = draw(400, 200, cfg, 1);
  CHECK(again.labels == inst.labels);
  CHECK_THROWS_AS(draw(0, 5, cfg, 1), InvalidArgument);
}

TEST_CASE("sample_count") {
  CHECK(sample_count(2.0, 500) == 1000);
  CHECK(sample_count(0.5, 3) == 2);
  CHECK(sample_count(1e-6, 10) == 1);
}

TEST_CASE("adversarial loss hand values") {
  FiniteInstance inst;
  inst.n = 1;
  inst.p = 1;
  inst.design = Eigen::MatrixXd::Ones(1, 1);
  inst.labels = VectorXd::Ones(1);
  inst.theta0 = VectorXd::Ones(1);
  VectorXd theta(1);
  theta << 0.5;
  CHECK(adversarial_loss(theta, inst, 0.0) == doctest::Approx(0.125));
  // (|1 - 0.5| + 0.5 * 0.5)^2 / 2
  CHECK(adversarial_loss(theta, inst, 0.5) == doctest::Approx(0.28125));
  CHECK_THROWS_AS(adversarial_loss(VectorXd::Ones(2), inst, 0.5), InvalidArgument);
  CHECK_THROWS_AS(adversarial_loss(theta, inst, -1.0), InvalidArgument);
}

TEST_CASE("adversarial loss is convex") {
  const FiniteInstance inst = draw(30, 10, unit(3.0, 0.0), 9);
  SeededRng rng(4);
  for (int k = 0; k < 200; ++k) {
    VectorXd a(10);
    VectorXd b(10);
    for (int j = 0; j < 10; ++j) {
      a[j] = 2.0 * rng.normal();
      b[j] = 2.0 * rng.normal();
    }
    const double mid = adversarial_loss(0.5 * (a + b), inst, 0.7);
    CHECK(mid <= 0.5 * (adversarial_loss(a, inst, 0.7) + adversarial_loss(b, inst, 0.7)) + 1e-12);
  }
}

TEST_CASE("zero budget training recovers theta0 without noise") {
  AsymptoticConfig cfg = unit(2.0, 0.0);
  cfg.sigma = 0.0;
  const FiniteInstance inst = draw(100, 50, cfg, 5);
  const TrainReport rep = train_adversarial(inst, 0.0);
  CHECK((rep.theta_hat - inst.theta0).norm() <= 1e-8 * inst.theta0.norm());
}

TEST_CASE("training matches a brute-force grid at p = 2") {
  const FiniteInstance inst = draw(6, 2, unit(3.0, 0.5), 17);
  const double eps = 0.5;
  VectorXd t(2);
  auto loss = [&](double x, double y) {
    t << x, y;
    return adversarial_loss(t, inst, eps);
  };
  double best = INFINITY;
  double bx = 0.0;
  double by = 0.0;
  for (int i = 0; i <= 6000; ++i) {
    for (int j = 0; j <= 6000; ++j) {
      const double x = -3.0 + i * 1e-3;
      const double y = -3.0 + j * 1e-3;
      const double l = loss(x, y);
      if (l < best) {
        best = l;
        bx = x;
        by = y;
      }
    }
  }
  // Refine around the coarse minimizer.
  double h = 1e-3;
  for (int round = 0; round < 6; ++round) {
    const double cx = bx;
    const double cy = by;
    for (int i = -20; i <= 20; ++i) {
      for (int j = -20; j <= 20; ++j) {
        const double l = loss(cx + i * h / 10.0, cy + j * h / 10.0);
        if (l < best) {
          best = l;
          bx = cx + i * h / 10.0;
          by = cy + j * h / 10.0;
        }
      }
    }
    h /= 10.0;
  }
  const TrainReport rep = train_adversarial(inst, eps);
  CHECK(rep.final_loss <= best + 1e-12);
  CHECK(rep.final_loss >= best - 1e-6);
  CHECK(std::abs(rep.theta_hat[0] - bx) < 1e-4);
  CHECK(std::abs(rep.theta_hat[1] - by) < 1e-4);
}

TEST_CASE("training trace decreases and the certificate is small") {
  const FiniteInstance inst = draw(200, 100, unit(2.0, 0.5), 21);
  const TrainReport rep = train_adversarial(inst, 0.5);
  REQUIRE(!rep.loss_trace.empty());
  for (std::size_t i = 1; i < rep.loss_trace.size(); ++i) {
    CHECK(rep.loss_trace[i] <= rep.loss_trace[i - 1]);
  }
  CHECK(rep.grad_norm <= 1e-8 * (1.0 + rep.final_loss));
  CHECK(adversarial_subgradient_norm(rep.theta_hat, inst, 0.5) <= 1e-8 * (1.0 + rep.final_loss));
  CHECK(rep.final_loss == doctest::Approx(adversarial_loss(rep.theta_hat, inst, 0.5)));
}

TEST_CASE("overparametrized training converges") {
  const FiniteInstance inst = draw(60, 120, unit(0.5, 0.2), 8);
  const TrainReport rep = train_adversarial(inst, 0.2);
  CHECK(rep.grad_norm <= 1e-8 * (1.0 + rep.final_loss));
}

TEST_CASE("theta = 0 exactly when the budget passes the finite-sample threshold") {
  const FiniteInstance inst = draw(200, 100, unit(2.0, 0.0), 31);
  // Zero is optimal iff ||X^T y|| <= eps ||y||_1.
  const double critical = (inst.design.transpose() * inst.labels).norm() / inst.labels.lpNorm<1>();
  const TrainReport above = train_adversarial(inst, 1.01 * critical);
  CHECK(above.theta_hat.norm() == 0.0);
  const TrainReport below = train_adversarial(inst, 0.95 * critical);
  CHECK(below.theta_hat.norm() > 0.0);
  // The finite threshold sits near the proportional-limit value.
  CHECK(critical == doctest::Approx(zero_estimator_threshold(unit(2.0, 0.0))).epsilon(0.15));
}

TEST_CASE("non-convergence is reported with the last iterate") {
  const FiniteInstance inst = draw(200, 100, unit(2.0, 0.5), 21);
  try {
    train_adversarial(inst, 0.5, 1e-8, 1);
    FAIL("expected TrainingDidNotConverge");
  } catch (const TrainingDidNotConverge& e) {
    CHECK(e.report().theta_hat.size() == 100);
    CHECK(e.last_residual() > 0.0);
  }
}

TEST_CASE("empirical risk point uses the finite-sample risks") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  const FiniteInstance inst = draw(100, 50, cfg, 6);
  const TrainReport rep = train_adversarial(inst, 0.5);
  const RiskPoint pt = empirical_risk_point(inst, rep.theta_hat, cfg);
  CHECK(pt.sr == doctest::Approx(standard_risk(rep.theta_hat, inst.theta0, inst.sigma0)));
  CHECK(pt.ar ==
        doctest::Approx(adversarial_risk(rep.theta_hat, inst.theta0, inst.sigma0, cfg.eps_test)));
  CHECK(pt.source == RiskSource::empirical);
}

TEST_CASE("summary statistics") {
  CHECK(pairwise_sum({}) == 0.0);
  std::vector<double> xs(1000, 0.1);
  CHECK(pairwise_sum(xs) == doctest::Approx(100.0).epsilon(1e-15));
  const MeanStderr m = mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == 2.5);
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(mean_stderr({3.0}).se == 0.0);
}

TEST_CASE("replicates are deterministic and independent of worker count") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  const ReplicateSummary one = run_replicates(cfg, 40, 6, 99, 1);
  const ReplicateSummary three = run_replicates(cfg, 40, 6, 99, 3);
  REQUIRE(one.runs.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(one.runs[i].stream == i);
    CHECK(one.runs[i].err2 == three.runs[i].err2);
    CHECK(one.runs[i].ar == three.runs[i].ar);
  }
  CHECK(one.sr.mean == three.sr.mean);
  CHECK(one.sr.se == three.sr.se);
  // A single replicate reruns in isolation.
  const ReplicateResult r4 = run_replicate(cfg, 40, 99, 4);
  CHECK(r4.err2 == one.runs[4].err2);
}

TEST_CASE("replicate spread shrinks with dimension") {
  const AsymptoticConfig cfg = unit(2.0, 0.5);
  std::vector<double> small;
  std::vector<double> large;
  for (const ReplicateResult& r : run_replicates(cfg, 50, 8, 5, 0).runs) small.push_back(r.err2);
  for (const ReplicateResult& r : run_replicates(cfg, 400, 8, 5, 0).runs) large.push_back(r.err2);
  CHECK(sample_sd(large) < 0.7 * sample_sd(small));
  // And the mean approaches the saddle prediction alpha^2.
  const double alpha = solve_saddle(cfg).alpha;
  double mean = 0.0;
  for (double x : large) mean += x / large.size();
  CHECK(mean == doctest::Approx(alpha * alpha).epsilon(0.08));
}
