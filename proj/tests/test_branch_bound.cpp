#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gridrestore/conic/branch_bound.hpp"

using namespace gridrestore;
using conic::model;
using conic::row_sense;
using conic::solve_status;

TEST_CASE("mip: two-item knapsack", "[mip]") {
  // max 5a + 4b s.t. a + b <= 1 binary ==> minimize -5a - 4b
  model m;
  int a = m.add_binary("a");
  int b = m.add_binary("b");
  m.add_row("cap", {{a, 1.0}, {b, 1.0}}, row_sense::le, 1.0);
  m.set_objective_term(a, -5.0);
  m.set_objective_term(b, -4.0);
  auto r = conic::solve_mip(m);
  REQUIRE(r.ok());
  CHECK(r.incumbent->objective == -5.0);
  CHECK(r.incumbent->x[a] == 1.0);
  CHECK(r.incumbent->x[b] == 0.0);
  CHECK(r.gap <= 1e-9);
}

TEST_CASE("mip: misocp picks the closer cone center", "[mip]") {
  // point (1,0); centers (2b, 1-b): b=0 -> dist sqrt(2), b=1 -> dist 1
  model m;
  int t = m.add_continuous("t");
  int x = m.add_continuous("x", 1.0, 1.0);
  int y = m.add_continuous("y", 0.0, 0.0);
  int b = m.add_binary("b");
  conic::soc_block blk;
  blk.name = "dist";
  blk.exprs.push_back(conic::affine_expr::of_var(t));
  blk.exprs.push_back(conic::affine_expr({{x, 1.0}, {b, -2.0}}, 0.0));
  blk.exprs.push_back(conic::affine_expr({{y, 1.0}, {b, 1.0}}, -1.0));
  m.add_cone(blk);
  m.set_objective_term(t, 1.0);
  auto r = conic::solve_mip(m);
  REQUIRE(r.ok());

  // exhaustive oracle over both assignments
  double best = conic::inf;
  for (double bv : {0.0, 1.0}) {
    model fixed = m;
    fixed.set_var_bounds(b, bv, bv);
    auto cr = conic::solve_continuous(fixed);
    REQUIRE(cr.status == solve_status::optimal);
    best = std::min(best, cr.objective);
  }
  CHECK(std::abs(r.incumbent->objective - best) <= 1e-6);
  CHECK(std::abs(r.incumbent->x[b] - 1.0) <= 1e-9);
}

TEST_CASE("mip: integer infeasible with feasible relaxation", "[mip]") {
  model m;
  int x = m.add_binary("x");
  m.add_row("lo", {{x, 1.0}}, row_sense::ge, 0.2);
  m.add_row("hi", {{x, 1.0}}, row_sense::le, 0.8);
  m.set_objective_term(x, 1.0);
  auto r = conic::solve_mip(m);
  CHECK(r.status == solve_status::infeasible);
  CHECK_FALSE(r.incumbent.has_value());
}

TEST_CASE("mip: infeasible relaxation at root", "[mip]") {
  model m;
  int x = m.add_binary("x");
  m.add_row("lo", {{x, 1.0}}, row_sense::ge, 2.0);
  m.set_objective_term(x, 1.0);
  auto r = conic::solve_mip(m);
  CHECK(r.status == solve_status::infeasible);
}

TEST_CASE("mip: node limit returns valid bound", "[mip]") {
  model m;
  std::vector<int> xs;
  std::vector<conic::linear_term> sum;
  for (int i = 0; i < 8; ++i) {
    int v = m.add_binary("x" + std::to_string(i));
    xs.push_back(v);
    sum.push_back({v, 1.0 + 0.1 * i});
    m.set_objective_term(v, -(1.0 + 0.3 * i));
  }
  m.add_row("cap", sum, row_sense::le, 3.7);
  conic::mip_options opt;
  opt.max_nodes = 3;
  auto r = conic::solve_mip(m, opt);
  CHECK(r.status == solve_status::iteration_limit);
  auto full = conic::solve_mip(m);
  REQUIRE(full.ok());
  CHECK(r.best_bound <= full.incumbent->objective + 1e-9);
}

TEST_CASE("mip: best bound never exceeds enumerated optimum", "[mip]") {
  // random binary LPs with <= 12 binaries; compare against brute force
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 7);  // 6..12
    model m;
    std::vector<double> c(n), a(n);
    std::vector<int> vs;
    std::vector<conic::linear_term> row;
    for (int i = 0; i < n; ++i) {
      vs.push_back(m.add_binary("x" + std::to_string(i)));
      c[i] = U(rng);
      a[i] = std::abs(U(rng));
      m.set_objective_term(vs[i], c[i]);
      row.push_back({vs[i], a[i]});
    }
    const double cap = 0.4 * n * 0.5;
    m.add_row("cap", row, row_sense::le, cap);
    auto r = conic::solve_mip(m);
    REQUIRE(r.ok());

    double best = conic::inf;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double obj = 0.0, used = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) {
          obj += c[i];
          used += a[i];
        }
      if (used <= cap) best = std::min(best, obj);
    }
    INFO("trial " << trial << " n=" << n);
    CHECK(std::abs(r.incumbent->objective - best) <= 1e-7);
    CHECK(r.best_bound <= best + 1e-7);
  }
}

TEST_CASE("mip: continuous-only model passes through", "[mip]") {
  model m;
  int x = m.add_continuous("x", 3.0, 10.0);
  m.set_objective_term(x, 1.0);
  auto r = conic::solve_mip(m);
  REQUIRE(r.ok());
  CHECK(std::abs(r.incumbent->objective - 3.0) <= 1e-7);
}
