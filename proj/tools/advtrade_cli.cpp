#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advtrade/acceptance.hpp"
#include "advtrade/errors.hpp"
#include "advtrade/sweep.hpp"
#include "advtrade/table.hpp"

using namespace advtrade;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Flags {
  double sigma = 1.0;
  double v = 1.0;
  double eps_test = 0.5;
  std::string delta;
  std::string eps_grid;
  std::string lambda_grid = "0.001:1000:40:log";
  std::string inv_delta_grid = "0.2:3:57:lin";
  int p = 1000;
  int seeds = 50;
  std::uint64_t seed = 1;
  std::uint64_t validate_seed = 20240611;
  bool empirical = false;
  bool json = false;
  bool quick = false;
  unsigned workers = 0;
  std::string out;
  std::vector<int> only;
};

void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--sigma", f.sigma, "noise level sigma")->capture_default_str();
  cmd->add_option("--v", f.v, "signal strength V")->capture_default_str();
  cmd->add_option("--eps-test", f.eps_test, "test adversary budget")->capture_default_str();
  cmd->add_option("--out", f.out, "output file (default stdout)");
  cmd->add_flag("--json", f.json, "emit one JSON document instead of CSV");
  cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--seed", f.seed, "master seed")->capture_default_str();
}

void add_mc_flags(CLI::App* cmd, Flags& f) {
  cmd->add_flag("--empirical", f.empirical, "add Monte Carlo columns");
  cmd->add_option("--p", f.p, "dimension of simulated instances")->capture_default_str();
  cmd->add_option("--seeds", f.seeds, "replicates per grid point")->capture_default_str();
}

AsymptoticConfig base_config(const Flags& f) {
  AsymptoticConfig cfg;
  cfg.sigma = f.sigma;
  cfg.v_norm = f.v;
  cfg.eps_test = f.eps_test;
  cfg.validate();
  return cfg;
}

SweepOptions sweep_options(const Flags& f) {
  SweepOptions o;
  o.empirical = f.empirical;
  o.p = f.p;
  o.seeds = f.seeds;
  o.master_seed = f.seed;
  o.workers = f.workers;
  return o;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("cannot open " + path + " for writing");
  file << text;
}

void emit_tables(const std::vector<SweepTable>& tables, const Flags& f) {
  emit(f.json ? to_json_document(tables) : to_csv(tables), f.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Standard versus adversarial risk in Gaussian linear regression"};
  app.require_subcommand(1);
  Flags f;

  auto* pareto = app.add_subcommand("pareto", "Pareto-optimal (SR, AR) frontier over lambda");
  add_model_flags(pareto, f);
  pareto->add_option("--lambda-grid", f.lambda_grid, "lambda grid")->capture_default_str();

  auto* algo = app.add_subcommand("algo-curve", "adversarial-training (SR, AR) curves per delta");
  add_model_flags(algo, f);
  add_mc_flags(algo, f);
  algo->add_option("--delta", f.delta, "list of delta values (default 1,2,5,20)");
  algo->add_option("--eps-grid", f.eps_grid, "eps grid (default 0.01:2:25:log)");
  algo->add_option("--lambda-grid", f.lambda_grid, "lambda grid of the reference frontier")
      ->capture_default_str();

  auto* sr = app.add_subcommand("sr-sweep", "standard risk against eps per delta");
  add_model_flags(sr, f);
  add_mc_flags(sr, f);
  sr->add_option("--delta", f.delta, "list of delta values (default 0.5,2,10)");
  sr->add_option("--eps-grid", f.eps_grid, "eps grid (default 0:1:41:lin)");

  auto* dd = app.add_subcommand("double-descent", "standard risk against 1/delta per eps");
  add_model_flags(dd, f);
  add_mc_flags(dd, f);
  dd->add_option("--inv-delta-grid", f.inv_delta_grid, "1/delta grid")->capture_default_str();
  dd->add_option("--eps-grid", f.eps_grid, "list of eps values (default 0,0.1,0.4,0.8)");

  auto* mc = app.add_subcommand("montecarlo", "trained estimators against theory at one delta");
  add_model_flags(mc, f);
  mc->add_option("--p", f.p, "dimension of simulated instances")->capture_default_str();
  mc->add_option("--seeds", f.seeds, "replicates per grid point")->capture_default_str();
  mc->add_option("--delta", f.delta, "delta (default 2)");
  mc->add_option("--eps-grid", f.eps_grid, "eps grid (default 0.5)");

  auto* val = app.add_subcommand("validate", "run the acceptance suite");
  val->add_flag("--quick", f.quick, "5x fewer Monte Carlo seeds, 2x looser tolerances");
  val->add_option("--seed", f.validate_seed, "master seed")->capture_default_str();
  val->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  val->add_option("--only", f.only, "criterion ids to run")
      ->delimiter(',')
      ->check(CLI::Range(1, 10));
  val->add_option("--out", f.out, "write the JSON report here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto grid_or = [&](const std::string& text, const char* fallback) {
    return parse_grid(text.empty() ? fallback : text);
  };

  try {
    if (*pareto) {
      emit_tables({cmd_pareto(base_config(f), parse_grid(f.lambda_grid), sweep_options(f))}, f);
    } else if (*algo) {
      emit_tables(cmd_algo_curve(base_config(f), grid_or(f.eps_grid, "0.01:2:25:log"),
                                 grid_or(f.delta, "1,2,5,20"), parse_grid(f.lambda_grid),
                                 sweep_options(f)),
                  f);
    } else if (*sr) {
      emit_tables(cmd_sr_sweep(base_config(f), grid_or(f.eps_grid, "0:1:41:lin"),
                               grid_or(f.delta, "0.5,2,10"), sweep_options(f)),
                  f);
    } else if (*dd) {
      emit_tables(cmd_double_descent(base_config(f), parse_grid(f.inv_delta_grid),
                                     grid_or(f.eps_grid, "0,0.1,0.4,0.8"), sweep_options(f)),
                  f);
    } else if (*mc) {
      AsymptoticConfig cfg = base_config(f);
      const std::vector<double> deltas = grid_or(f.delta, "2");
      if (deltas.size() != 1) throw InvalidArgument("montecarlo takes a single --delta");
      cfg.delta = deltas.front();
      emit_tables({cmd_montecarlo(cfg, grid_or(f.eps_grid, "0.5"), sweep_options(f))}, f);
    } else if (*val) {
      AcceptanceOptions opts;
      opts.quick = f.quick;
      opts.master_seed = f.validate_seed;
      opts.workers = f.workers;
      opts.only = f.only;
      const auto results = run_acceptance(opts, [](const CriterionResult& r) {
        std::cerr << r.summary_line() << std::endl;
      });
      nlohmann::json report;
      report["quick"] = f.quick;
      report["master_seed"] = f.validate_seed;
      report["criteria"] = nlohmann::json::array();
      bool ok = true;
      for (const auto& r : results) {
        report["criteria"].push_back(to_json(r));
        ok = ok && r.passed;
      }
      report["passed"] = ok;
      emit(report.dump(2) + "\n", f.out);
      return ok ? 0 : kExitFailure;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
