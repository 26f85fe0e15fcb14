#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "advtrade/model.hpp"
#include "advtrade/pareto.hpp"
#include "advtrade/table.hpp"

namespace advtrade {

/// "start:stop:count:lin|log" or a comma list. Returned sorted, without
/// duplicates. Throws InvalidArgument on malformed input.
std::vector<double> parse_grid(std::string_view text);

struct SweepOptions {
  bool empirical = false;
  int p = 1000;
  int seeds = 50;
  std::uint64_t master_seed = 1;
  unsigned workers = 0;  ///< 0 = all cores
};

/// Theory (SR, AR) from the saddle point; errors are rethrown with (delta, eps).
RiskPair saddle_point_risks(const AsymptoticConfig& cfg);

/// Largest Euclidean distance from a curve point to the polyline through
/// `frontier` (taken in the given order).
double sup_distance_to_polyline(const std::vector<RiskPair>& curve,
                                const std::vector<RiskPair>& frontier);

/// Forward difference (SR(eps) - SR(0)) / eps from the saddle solver.
double sr_slope_fd(const AsymptoticConfig& cfg, double eps);

SweepTable cmd_pareto(const AsymptoticConfig& cfg, const std::vector<double>& lambdas,
                      const SweepOptions& opts);

/// One table per delta over the eps grid. The header carries the sup-distance
/// to the Pareto polyline over `lambdas`.
std::vector<SweepTable> cmd_algo_curve(const AsymptoticConfig& cfg,
                                       const std::vector<double>& eps_grid,
                                       const std::vector<double>& deltas,
                                       const std::vector<double>& lambdas,
                                       const SweepOptions& opts);

/// One SR-vs-eps table per delta. For delta > 1 the header also carries the
/// small-eps expansion and the finite-difference slope at the first positive
/// grid point.
std::vector<SweepTable> cmd_sr_sweep(const AsymptoticConfig& cfg,
                                     const std::vector<double>& eps_grid,
                                     const std::vector<double>& deltas, const SweepOptions& opts);

/// One table per eps over 1/delta. At eps = 0, points with delta <= 1 or
/// |delta - 1| < 0.02 are skipped and listed in the header.
std::vector<SweepTable> cmd_double_descent(const AsymptoticConfig& cfg,
                                           const std::vector<double>& inv_delta_grid,
                                           const std::vector<double>& eps_list,
                                           const SweepOptions& opts);

/// Theory against simulation at cfg.delta over the eps grid; always
/// empirical. The header lists per-eps error and norm statistics.
SweepTable cmd_montecarlo(const AsymptoticConfig& cfg, const std::vector<double>& eps_grid,
                          const SweepOptions& opts);

/// Index of the largest sr_theory (first one on ties).
std::size_t argmax_sr(const SweepTable& table);

}  // namespace advtrade
