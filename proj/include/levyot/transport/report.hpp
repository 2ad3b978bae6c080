#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "levyot/simulate.hpp"
#include "levyot/transport/dual.hpp"
#include "levyot/transport/primal.hpp"

namespace levyot {

struct McValidation {
  double cost_estimate = 0.0;
  double ci = 0.0;  // 2 standard errors
  double terminal_ks = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Simulates the schedule from mu0 and prices it along the paths.
inline McValidation evaluate_cost_mc(const TransportInstance& inst, const std::vector<std::vector<double>>& schedule,
                                     std::size_t n_paths, std::uint64_t seed, std::size_t workers = 1) {
  require(!schedule.empty(), "cost MC: empty schedule");
  require(n_paths >= 1, "cost MC: need at least one path");
  const std::size_t K = schedule.size(), P = inst.fam.n_params();
  std::vector<LevyTriplet> pieces;
  for (const auto& th : schedule) {
    require(th.size() == P, "cost MC: schedule entry has wrong size");
    for (std::size_t i = 0; i < P; ++i)
      require(th[i] >= inst.fam.box()[i].lo && th[i] <= inst.fam.box()[i].hi,
              "cost MC: schedule leaves the parameter box");
    pieces.push_back(inst.fam.evaluate(th));
  }
  SimulationConfig sc;
  sc.horizon = 1.0;
  sc.n_steps = K;
  sc.n_paths = n_paths;
  sc.seed = seed;
  sc.workers = workers;
  const PathBundle paths = simulate_paths(TripletSchedule::per_step(std::move(pieces), 1.0), Vec::Zero(1), sc);
  // initial states from a stream the path simulator never uses
  std::vector<double> x0(n_paths);
  rng::Stream s0(seed, std::uint64_t{3} << 62);
  for (double& x : x0) x = inst.mu0.sample(s0);

  McValidation out;
  out.n_paths = n_paths;
  out.seed = seed;
  const double dt = 1.0 / static_cast<double>(K);
  if (is_state_independent(inst.L, inst.fam)) {
    out.cost_estimate = schedule_cost(inst, schedule);
    out.ci = 0.0;
  } else {
    double sum = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      double c = 0.0;
      for (std::size_t k = 0; k < K; ++k) c += dt * inst.L(paths.time_grid[k], x0[p] + paths.value(p, k, 0), schedule[k]);
      sum += c;
      sq += c * c;
    }
    const double n = static_cast<double>(n_paths);
    out.cost_estimate = sum / n;
    const double var = n > 1 ? std::max(0.0, (sq - n * out.cost_estimate * out.cost_estimate) / (n - 1.0)) : 0.0;
    out.ci = 2.0 * std::sqrt(var / n);
  }
  std::vector<double> term(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) term[p] = x0[p] + paths.value(p, K, 0);
  out.terminal_ks = marginal_ks(std::move(term), inst.mu1.cdf());
  return out;
}

struct DualityConfig {
  PrimalConfig primal;
  DualConfig dual;
  std::size_t mc_paths = 100000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  double allowance_rel = 0.02;
};

struct DualityReport {
  std::optional<double> primal_value;  // empty for state-dependent costs
  double dual_value = 0.0;
  double gap = 0.0;  // NaN when the primal side is unavailable
  std::vector<std::vector<double>> control_schedule;
  std::vector<double> grid_nodes, dual_potential;
  std::vector<double> dual_history;
  double feasibility_residual = 0.0;
  std::optional<McValidation> mc_validation;
  double allowance = 0.0;
  double gtol = 0.0, ftol = 0.0;
  bool weak_duality = true;          // gap >= -allowance
  bool history_weak_duality = true;  // every ascent iterate below primal + allowance
  bool primal_failed = false;
  bool dual_failed = false;
  bool both_failed = false;
  std::string note;
  ValueGrid values;                  // value function at the returned potential
};

inline DualityReport duality_report(const TransportInstance& inst, const DualityConfig& cfg) {
  DualityReport rep;
  rep.gtol = cfg.dual.gtol;
  rep.ftol = cfg.primal.ftol;
  if (is_state_independent(inst.L, inst.fam)) {
    const PrimalResult pr = solve_primal_deterministic(inst, cfg.primal);
    rep.primal_value = pr.value;
    rep.control_schedule = pr.schedule;
    rep.feasibility_residual = pr.feasibility_residual;
    rep.primal_failed = pr.likely_infeasible;
    rep.mc_validation = evaluate_cost_mc(inst, pr.schedule, cfg.mc_paths, cfg.seed, cfg.workers);
  } else {
    rep.primal_failed = true;
    rep.note = "state-dependent cost: primal side not computed";
  }
  const DualResult dr = dual_ascent(inst, cfg.dual);
  rep.dual_value = dr.value;
  rep.dual_potential = dr.lambda1;
  rep.grid_nodes = cfg.dual.grid.grid.nodes();
  rep.dual_history = dr.history;
  rep.dual_failed = dr.line_search_failed || dr.likely_infeasible;
  rep.both_failed = rep.primal_failed && rep.dual_failed;
  GridConfig gc = cfg.dual.grid;
  gc.record_operators = false;
  rep.values = solve_hjb(inst, dr.lambda1, gc);
  if (rep.primal_value) {
    const double pv = *rep.primal_value;
    rep.allowance = cfg.allowance_rel * (1.0 + std::abs(pv));
    rep.gap = pv - rep.dual_value;
    rep.weak_duality = rep.gap >= -rep.allowance;
    for (double v : rep.dual_history)
      if (v > pv + rep.allowance) rep.history_weak_duality = false;
  } else {
    rep.gap = std::nan("");
  }
  return rep;
}

}  // namespace levyot
