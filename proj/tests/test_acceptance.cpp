#include "advtrade/acceptance.hpp"

#include <cmath>
#include <string>

#include "advtrade/model.hpp"
#include "advtrade/saddle.hpp"
#include "doctest.h"

using namespace advtrade;

namespace {

// Root of the characteristic equation with the sign of the sqrt(2/pi) term
// flipped: a - (beta/tau_g) tau - tau erf(tau/sqrt2) + sqrt(2/pi) exp(-tau^2/2).
double mutant_tau(double a, double beta, double tau_g) {
  auto f = [&](double t) {
    return a - (beta / tau_g) * t - t * std::erf(t / std::sqrt(2.0)) +
           kSqrt2OverPi * std::exp(-0.5 * t * t);
  };
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("tau criterion passes with the real solver") {
  AcceptanceOptions opts;
  const CriterionResult r = criterion_tau_star(opts);
  CHECK(r.passed);
  CHECK(r.id == 2);
  REQUIRE(r.checks.size() == 2);
  CHECK(r.checks[0].measured <= 1e-12);
}

TEST_CASE("tau criterion catches a sign-flipped solver") {
  AcceptanceOptions opts;
  opts.tau_solver = mutant_tau;
  const CriterionResult r = criterion_tau_star(opts);
  CHECK(!r.passed);
  const std::string line = r.summary_line();
  CHECK(line.rfind("FAIL [ 2]", 0) == 0);
  CHECK(line.find("max_residual") != std::string::npos);
  CHECK(line.find("VIOLATED") != std::string::npos);
}

TEST_CASE("tau criterion catches a solver that returns garbage") {
  AcceptanceOptions opts;
  opts.tau_solver = [](double, double, double) { return NAN; };
  CHECK(!criterion_tau_star(opts).passed);
}

TEST_CASE("run_acceptance honours the selection and reports in order") {
  AcceptanceOptions opts;
  opts.only = {4, 2};
  std::vector<int> seen;
  const auto results = run_acceptance(opts, [&](const CriterionResult& r) { seen.push_back(r.id); });
  REQUIRE(results.size() == 2);
  CHECK(seen == std::vector<int>{2, 4});
  CHECK(results[0].passed);
  CHECK(results[1].passed);
}

TEST_CASE("json report fields") {
  AcceptanceOptions opts;
  const CriterionResult r = criterion_pareto(opts);
  const nlohmann::json j = to_json(r);
  CHECK(j["id"] == 4);
  CHECK(j["passed"] == r.passed);
  CHECK(j["checks"].size() == r.checks.size());
  CHECK(j["checks"][0].contains("measured"));
  CHECK(j["checks"][0].contains("tolerance"));
  CHECK(j["time_limit"] == 1.0);
}

TEST_CASE("a thrown error fails the criterion and is recorded") {
  AcceptanceOptions opts;
  opts.tau_solver = [](double, double, double) -> double { throw std::runtime_error("boom"); };
  const CriterionResult r = criterion_tau_star(opts);
  CHECK(!r.passed);
  CHECK(r.error.find("boom") != std::string::npos);
}
