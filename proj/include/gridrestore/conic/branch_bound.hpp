#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "gridrestore/common.hpp"
#include "gridrestore/conic/ipm.hpp"
#include "gridrestore/conic/model.hpp"

namespace gridrestore::conic {

struct mip_options {
  double gap_tol = 1e-10;  // stop when incumbent - bound <= gap_tol*max(1,|inc|)
  double int_tol = 1e-6;
  int max_nodes = 200000;
  double time_limit_s = inf;
  ipm_options ipm;
};

struct incumbent_point {
  std::vector<double> x;
  double objective = inf;
};

struct mip_result {
  solve_status status = solve_status::numerical_error;
  std::optional<incumbent_point> incumbent;
  double best_bound = -inf;
  double gap = inf;  // incumbent - best_bound (minimization)
  int nodes = 0;
  double wall_s = 0.0;
  std::string message;

  bool ok() const { return status == solve_status::optimal && incumbent.has_value(); }
};

/// Branch-and-bound over conic relaxations. Best-bound node selection,
/// branching on the most fractional binary (ties by smallest variable id),
/// so runs are deterministic.
inline mip_result solve_mip(const model& mdl, const mip_options& opt = {}) {
  mdl.validate();
  stopwatch clock;
  mip_result out;

  struct node {
    long id;
    double bound;                                  // parent relaxation value
    std::vector<std::pair<int, double>> fixings;   // var -> fixed value
  };
  struct node_cmp {
    bool operator()(const node& a, const node& b) const {
      if (a.bound != b.bound) return a.bound < b.bound;
      return a.id < b.id;
    }
  };

  const std::vector<int> bins = mdl.binary_vars();
  std::ostringstream warnings;

  model work = mdl;
  const auto solve_node = [&](const node& nd) {
    for (int b : bins) {
      const auto& vd = mdl.var(b);
      work.set_var_bounds(b, vd.lo, vd.hi);
    }
    for (const auto& [v, val] : nd.fixings) work.set_var_bounds(v, val, val);
    return solve_continuous(work, opt.ipm);
  };

  // Exact objective at an integral point: binaries rounded, continuous as-is.
  const auto exact_objective = [&](std::vector<double>& x) {
    for (int b : bins) x[b] = std::round(x[b]);
    return mdl.eval_objective(x);
  };

  const auto most_fractional = [&](const std::vector<double>& x) {
    int pick = -1;
    double best = opt.int_tol;
    for (int b : bins) {
      const double f = std::abs(x[b] - std::round(x[b]));
      if (f > best) {
        best = f;
        pick = b;
      }
    }
    return pick;
  };

  std::set<node, node_cmp> open;
  long next_id = 0;
  open.insert(node{next_id++, -inf, {}});

  std::optional<incumbent_point> inc;
  double best_bound = -inf;
  int processed = 0;
  const auto prune_eps = [&] {
    return inc ? std::max(1e-12, 1e-9 * std::abs(inc->objective)) : 0.0;
  };

  const auto finish = [&](solve_status st) {
    out.status = st;
    out.incumbent = inc;
    out.nodes = processed;
    out.wall_s = clock.seconds();
    if (inc && open.empty()) best_bound = inc->objective;
    out.best_bound = best_bound;
    out.gap = inc ? inc->objective - best_bound : inf;
    out.message = warnings.str();
    return out;
  };

  while (!open.empty()) {
    node nd = *open.begin();
    open.erase(open.begin());
    // best-bound order: the queue head carries the global lower bound
    if (nd.bound != -inf) best_bound = nd.bound;

    if (inc) {
      const double bnd = nd.bound == -inf ? -inf : nd.bound;
      if (bnd >= inc->objective - prune_eps()) {
        // everything left is no better
        best_bound = inc->objective;
        return finish(solve_status::optimal);
      }
      const double gap = inc->objective - (bnd == -inf ? -inf : bnd);
      if (gap <= opt.gap_tol * std::max(1.0, std::abs(inc->objective)))
        return finish(solve_status::optimal);
    }
    if (processed >= opt.max_nodes) return finish(solve_status::iteration_limit);
    if (clock.seconds() > opt.time_limit_s) return finish(solve_status::time_limit);

    ++processed;
    auto rel = solve_node(nd);
    if (rel.status == solve_status::infeasible) {
      if (processed == 1) return finish(solve_status::infeasible);  // root
      continue;  // pruned by infeasibility
    }
    if (rel.status == solve_status::unbounded) {
      if (processed == 1) return finish(solve_status::unbounded);
      warnings << "node " << nd.id << ": unbounded relaxation pruned\n";
      continue;
    }
    if (rel.status != solve_status::optimal) {
      if (processed == 1) {
        out.message = "root relaxation failed: " + rel.message;
        return finish(solve_status::numerical_error);
      }
      warnings << "node " << nd.id << ": relaxation " << to_string(rel.status)
               << " pruned\n";
      continue;
    }
    const double node_lb = rel.objective;
    if (inc && node_lb >= inc->objective - prune_eps()) continue;

    const int frac = most_fractional(rel.x);
    if (frac < 0) {
      std::vector<double> x = rel.x;
      const double obj = exact_objective(x);
      if (!inc || obj < inc->objective - 1e-12) inc = incumbent_point{std::move(x), obj};
      continue;
    }
    node lo{next_id++, node_lb, nd.fixings};
    lo.fixings.emplace_back(frac, 0.0);
    node hi{next_id++, node_lb, nd.fixings};
    hi.fixings.emplace_back(frac, 1.0);
    open.insert(std::move(lo));
    open.insert(std::move(hi));
  }

  if (inc) {
    best_bound = inc->objective;
    return finish(solve_status::optimal);
  }
  return finish(solve_status::infeasible);
}

}  // namespace gridrestore::conic
