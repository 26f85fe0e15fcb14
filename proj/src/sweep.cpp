#include "advtrade/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "advtrade/errors.hpp"
#include "advtrade/parallel.hpp"
#include "advtrade/saddle.hpp"
#include "advtrade/simulate.hpp"

namespace advtrade {
namespace {

using nlohmann::json;

double parse_number(std::string_view s) {
  const std::string str(s);
  char* end = nullptr;
  const double v = std::strtod(str.c_str(), &end);
  if (str.empty() || end != str.c_str() + str.size() || !std::isfinite(v)) {
    throw InvalidArgument("bad number '" + str + "' in grid");
  }
  return v;
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string at_point(const AsymptoticConfig& cfg) {
  return " (delta=" + format_double(cfg.delta) + ", eps=" + format_double(cfg.eps_train) + ")";
}

std::vector<double> sorted_unique(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

SaddleSolution annotated_saddle(const AsymptoticConfig& cfg) {
  try {
    return solve_saddle(cfg);
  } catch (const ConvergenceFailure& e) {
    throw ConvergenceFailure(e.what() + at_point(cfg), e.last_residual());
  } catch (const BoxTooSmall& e) {
    throw BoxTooSmall(e.what() + at_point(cfg));
  } catch (const DomainError& e) {
    throw DomainError(e.what() + at_point(cfg));
  }
}

SweepTable base_table(const std::string& command, const AsymptoticConfig& cfg,
                      const std::string& axis, const SweepOptions& opts) {
  SweepTable t;
  t.command = command;
  t.config = cfg;
  t.axis_name = axis;
  t.provenance.master_seed = opts.master_seed;
  t.provenance.timestamp = reproducible_timestamp();
  if (opts.empirical) {
    t.extra["p"] = opts.p;
    t.extra["seeds"] = opts.seeds;
  }
  return t;
}

// Attaches Monte Carlo columns. configs[i] describes row i. Replicate k of
// every row uses stream k of the master seed.
std::vector<ReplicateSummary> fill_empirical(std::vector<SweepRow>& rows,
                                             const std::vector<AsymptoticConfig>& configs,
                                             const SweepOptions& opts) {
  const std::size_t seeds = static_cast<std::size_t>(opts.seeds);
  std::vector<ReplicateResult> flat(rows.size() * seeds);
  parallel_for(flat.size(), opts.workers, [&](std::size_t idx) {
    const std::size_t row = idx / seeds;
    const std::size_t k = idx % seeds;
    try {
      flat[idx] = run_replicate(configs[row], opts.p, opts.master_seed, k);
    } catch (const ConvergenceFailure& e) {
      throw ConvergenceFailure(e.what() + at_point(configs[row]), e.last_residual());
    }
  });
  std::vector<ReplicateSummary> out(rows.size());
  for (std::size_t row = 0; row < rows.size(); ++row) {
    ReplicateSummary& s = out[row];
    s.seeds = opts.seeds;
    std::vector<double> err2, norm2, sr, ar;
    for (std::size_t k = 0; k < seeds; ++k) {
      const ReplicateResult& r = flat[row * seeds + k];
      s.runs.push_back(r);
      err2.push_back(r.err2);
      norm2.push_back(r.norm2);
      sr.push_back(r.sr);
      ar.push_back(r.ar);
    }
    s.err2 = mean_stderr(err2);
    s.norm2 = mean_stderr(norm2);
    s.sr = mean_stderr(sr);
    s.ar = mean_stderr(ar);
    rows[row].sr_empirical = s.sr.mean;
    rows[row].ar_empirical = s.ar.mean;
    rows[row].n_seeds = opts.seeds;
    rows[row].stderr_sr = s.sr.se;
    rows[row].stderr_ar = s.ar.se;
  }
  return out;
}

void check_options(const SweepOptions& opts) {
  if (opts.empirical && (opts.p < 1 || opts.seeds < 1)) {
    throw InvalidArgument("--p and --seeds must be >= 1");
  }
}

// Rows over an eps grid at fixed delta; eps = 0 with delta <= 1 is skipped.
SweepTable eps_table(const std::string& command, AsymptoticConfig cfg,
                     const std::vector<double>& eps_grid, const SweepOptions& opts) {
  SweepTable t = base_table(command, cfg, "eps_train", opts);
  std::vector<AsymptoticConfig> configs;
  json skipped = json::array();
  for (double e : sorted_unique(eps_grid)) {
    AsymptoticConfig c = cfg;
    c.eps_train = e;
    c.validate();
    if (!c.has_asymptotic_prediction()) {
      skipped.push_back({{"axis_value", e}, {"reason", "no_limit"}});
      continue;
    }
    configs.push_back(c);
  }
  t.rows.resize(configs.size());
  parallel_for(configs.size(), opts.workers, [&](std::size_t i) {
    const RiskPair rp = saddle_point_risks(configs[i]);
    t.rows[i].axis_value = configs[i].eps_train;
    t.rows[i].sr_theory = rp.sr;
    t.rows[i].ar_theory = rp.ar;
  });
  if (!skipped.empty()) t.extra["skipped"] = skipped;
  if (opts.empirical) fill_empirical(t.rows, configs, opts);
  return t;
}

double point_segment_distance(const RiskPair& q, const RiskPair& a, const RiskPair& b) {
  const double dx = b.sr - a.sr;
  const double dy = b.ar - a.ar;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((q.sr - a.sr) * dx + (q.ar - a.ar) * dy) / len2, 0.0, 1.0);
  return std::hypot(q.sr - (a.sr + t * dx), q.ar - (a.ar + t * dy));
}

}  // namespace

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split_view(text, ':');
    if (parts.size() != 4) throw InvalidArgument("grid must be start:stop:count:lin|log");
    const double lo = parse_number(parts[0]);
    const double hi = parse_number(parts[1]);
    const double count_d = parse_number(parts[2]);
    const int count = static_cast<int>(count_d);
    if (count < 1 || count != count_d) throw InvalidArgument("grid count must be a positive integer");
    if (parts[3] == "lin") {
      for (int i = 0; i < count; ++i) {
        out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
      }
    } else if (parts[3] == "log") {
      if (!(lo > 0.0) || !(hi > 0.0)) throw InvalidArgument("log grid needs positive ends");
      out = count == 1 ? std::vector<double>{lo} : log_grid(lo, hi, count);
    } else {
      throw InvalidArgument("grid spacing must be lin or log");
    }
  } else {
    for (auto piece : split_view(text, ',')) out.push_back(parse_number(piece));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RiskPair saddle_point_risks(const AsymptoticConfig& cfg) {
  return asymptotic_risks(annotated_saddle(cfg), cfg);
}

double sup_distance_to_polyline(const std::vector<RiskPair>& curve,
                                const std::vector<RiskPair>& frontier) {
  if (curve.empty() || frontier.empty()) throw InvalidArgument("empty curve");
  double worst = 0.0;
  for (const RiskPair& q : curve) {
    double best = std::hypot(q.sr - frontier[0].sr, q.ar - frontier[0].ar);
    for (std::size_t i = 1; i < frontier.size(); ++i) {
      best = std::min(best, point_segment_distance(q, frontier[i - 1], frontier[i]));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double sr_slope_fd(const AsymptoticConfig& cfg, double eps) {
  AsymptoticConfig c0 = cfg;
  c0.eps_train = 0.0;
  AsymptoticConfig c1 = cfg;
  c1.eps_train = eps;
  return (saddle_point_risks(c1).sr - saddle_point_risks(c0).sr) / eps;
}

SweepTable cmd_pareto(const AsymptoticConfig& cfg, const std::vector<double>& lambdas,
                      const SweepOptions& opts) {
  if (lambdas.empty()) throw InvalidArgument("lambda grid is empty");
  SweepTable t = base_table("pareto", cfg, "lambda", SweepOptions{false, opts.p, opts.seeds,
                                                                  opts.master_seed, opts.workers});
  const std::vector<double> grid = sorted_unique(lambdas);
  const std::vector<RiskPoint> pts = pareto_curve(grid, cfg);
  json eps_map = json::array();
  for (const RiskPoint& pt : pts) {
    SweepRow r;
    r.axis_value = pt.knob;
    r.sr_theory = pt.sr;
    r.ar_theory = pt.ar;
    t.rows.push_back(r);
    eps_map.push_back(lambda_to_epsilon(pt.knob, cfg));
  }
  // Training budget that reaches each frontier point as delta grows.
  t.extra["eps_of_lambda"] = eps_map;
  return t;
}

std::vector<SweepTable> cmd_algo_curve(const AsymptoticConfig& cfg,
                                       const std::vector<double>& eps_grid,
                                       const std::vector<double>& deltas,
                                       const std::vector<double>& lambdas,
                                       const SweepOptions& opts) {
  check_options(opts);
  if (eps_grid.empty() || deltas.empty()) throw InvalidArgument("empty grid");
  std::vector<RiskPair> frontier;
  if (!lambdas.empty()) {
    for (const RiskPoint& pt : pareto_curve(lambdas, cfg)) frontier.push_back({pt.sr, pt.ar});
  }
  std::vector<SweepTable> out;
  for (double d : deltas) {
    AsymptoticConfig c = cfg;
    c.delta = d;
    SweepTable t = eps_table("algo-curve", c, eps_grid, opts);
    if (!frontier.empty() && !t.rows.empty()) {
      std::vector<RiskPair> curve;
      for (const SweepRow& r : t.rows) curve.push_back({r.sr_theory, r.ar_theory});
      t.extra["sup_distance_to_pareto"] = sup_distance_to_polyline(curve, frontier);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SweepTable> cmd_sr_sweep(const AsymptoticConfig& cfg,
                                     const std::vector<double>& eps_grid,
                                     const std::vector<double>& deltas, const SweepOptions& opts) {
  check_options(opts);
  if (eps_grid.empty() || deltas.empty()) throw InvalidArgument("empty grid");
  std::vector<SweepTable> out;
  for (double d : deltas) {
    AsymptoticConfig c = cfg;
    c.delta = d;
    SweepTable t = eps_table("sr-sweep", c, eps_grid, opts);
    if (d > 1.0) {
      const SmallEpsExpansion ex = sr_small_eps(c);
      t.extra["small_eps_intercept"] = ex.intercept;
      t.extra["small_eps_slope"] = ex.slope;
      const auto first = std::find_if(eps_grid.begin(), eps_grid.end(), [](double e) { return e > 0; });
      if (first != eps_grid.end()) {
        t.extra["fd_slope_eps"] = *first;
        t.extra["fd_slope"] = sr_slope_fd(c, *first);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SweepTable> cmd_double_descent(const AsymptoticConfig& cfg,
                                           const std::vector<double>& inv_delta_grid,
                                           const std::vector<double>& eps_list,
                                           const SweepOptions& opts) {
  check_options(opts);
  if (inv_delta_grid.empty() || eps_list.empty()) throw InvalidArgument("empty grid");
  for (double x : inv_delta_grid) {
    if (!(x > 0.0)) throw InvalidArgument("1/delta values must be > 0");
  }
  std::vector<SweepTable> out;
  for (double e : eps_list) {
    AsymptoticConfig base = cfg;
    base.eps_train = e;
    SweepTable t = base_table("double-descent", base, "inv_delta", opts);
    std::vector<AsymptoticConfig> configs;
    std::vector<double> xs;
    json skipped = json::array();
    for (double x : sorted_unique(inv_delta_grid)) {
      AsymptoticConfig c = base;
      c.delta = 1.0 / x;
      c.validate();
      if (e == 0.0 && std::abs(c.delta - 1.0) < 0.02) {
        skipped.push_back({{"axis_value", x}, {"reason", "pole"}});
        continue;
      }
      if (!c.has_asymptotic_prediction()) {
        skipped.push_back({{"axis_value", x}, {"reason", "no_limit"}});
        continue;
      }
      configs.push_back(c);
      xs.push_back(x);
    }
    t.rows.resize(configs.size());
    parallel_for(configs.size(), opts.workers, [&](std::size_t i) {
      const RiskPair rp = saddle_point_risks(configs[i]);
      t.rows[i].axis_value = xs[i];
      t.rows[i].sr_theory = rp.sr;
      t.rows[i].ar_theory = rp.ar;
    });
    if (!skipped.empty()) t.extra["skipped"] = skipped;
    if (opts.empirical) fill_empirical(t.rows, configs, opts);
    if (!t.rows.empty()) t.extra["peak_inv_delta"] = t.rows[argmax_sr(t)].axis_value;
    out.push_back(std::move(t));
  }
  return out;
}

SweepTable cmd_montecarlo(const AsymptoticConfig& cfg, const std::vector<double>& eps_grid,
                          const SweepOptions& opts) {
  SweepOptions o = opts;
  o.empirical = true;
  check_options(o);
  if (eps_grid.empty()) throw InvalidArgument("empty grid");
  SweepTable t = base_table("montecarlo", cfg, "eps_train", o);
  std::vector<AsymptoticConfig> configs;
  std::vector<SaddleSolution> sols;
  for (double e : sorted_unique(eps_grid)) {
    AsymptoticConfig c = cfg;
    c.eps_train = e;
    c.validate();
    if (!c.has_asymptotic_prediction()) throw DomainError("no limit at" + at_point(c));
    configs.push_back(c);
  }
  sols.resize(configs.size());
  t.rows.resize(configs.size());
  parallel_for(configs.size(), o.workers, [&](std::size_t i) {
    sols[i] = annotated_saddle(configs[i]);
    const RiskPair rp = asymptotic_risks(sols[i], configs[i]);
    t.rows[i].axis_value = configs[i].eps_train;
    t.rows[i].sr_theory = rp.sr;
    t.rows[i].ar_theory = rp.ar;
  });
  const std::vector<ReplicateSummary> sums = fill_empirical(t.rows, configs, o);
  json stats = json::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const double norm = asymptotic_estimator_norm(sols[i], configs[i]);
    stats.push_back({{"eps_train", configs[i].eps_train},
                     {"err2_theory", sols[i].alpha * sols[i].alpha},
                     {"err2_mean", sums[i].err2.mean},
                     {"err2_stderr", sums[i].err2.se},
                     {"norm2_theory", norm * norm},
                     {"norm2_mean", sums[i].norm2.mean},
                     {"norm2_stderr", sums[i].norm2.se}});
  }
  t.extra["replicates"] = stats;
  return t;
}

std::size_t argmax_sr(const SweepTable& table) {
  if (table.rows.empty()) throw InvalidArgument("empty table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].sr_theory > table.rows[best].sr_theory) best = i;
  }
  return best;
}

}  // namespace advtrade
