#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gridrestore/common.hpp"
#include "gridrestore/conic/model.hpp"

namespace gridrestore::conic {

enum class solve_status {
  optimal,
  infeasible,
  unbounded,
  iteration_limit,
  time_limit,
  numerical_error,
};

inline const char* to_string(solve_status s) {
  switch (s) {
    case solve_status::optimal: return "optimal";
    case solve_status::infeasible: return "infeasible";
    case solve_status::unbounded: return "unbounded";
    case solve_status::iteration_limit: return "iteration_limit";
    case solve_status::time_limit: return "time_limit";
    case solve_status::numerical_error: return "numerical_error";
  }
  return "?";
}

struct ipm_options {
  double feas_tol = 1e-8;   // primal/dual feasibility (relative)
  double gap_tol = 1e-8;    // relative complementarity gap
  int max_iter = 100;
  bool verbose = false;
};

struct kkt_residuals {
  double primal = inf;
  double dual = inf;
  double gap = inf;  // relative
};

struct solve_result {
  solve_status status = solve_status::numerical_error;
  std::vector<double> x;          // model variable values
  std::vector<double> row_duals;  // one per model row (its stated sense)
  std::vector<std::vector<double>> cone_duals;
  double objective = 0.0;
  double dual_objective = 0.0;
  kkt_residuals residuals;
  int iterations = 0;
  std::string message;  // iteration trace on failure, certificate notes

  bool ok() const { return status == solve_status::optimal; }
};

namespace detail {

// Cone layout of the slack vector: first `lp` nonnegative entries, then
// second-order blocks of the given sizes.
struct cone_layout {
  int lp = 0;
  std::vector<int> soc;  // block dims (>= 2)
  int dim() const {
    int d = lp;
    for (int q : soc) d += q;
    return d;
  }
  int degree() const { return lp + static_cast<int>(soc.size()); }
};

inline void cone_unit(const cone_layout& lay, Eigen::VectorXd& e) {
  e.setZero(lay.dim());
  e.head(lay.lp).setOnes();
  int off = lay.lp;
  for (int q : lay.soc) {
    e[off] = 1.0;
    off += q;
  }
}

// max alpha >= 0 with u + alpha*du in K (u strictly interior)
inline double step_to_boundary(const cone_layout& lay, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& du) {
  double alpha = inf;
  for (int i = 0; i < lay.lp; ++i)
    if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
  int off = lay.lp;
  for (int q : lay.soc) {
    const double u0 = u[off], d0 = du[off];
    const auto u1 = u.segment(off + 1, q - 1);
    const auto d1 = du.segment(off + 1, q - 1);
    const double a = d0 * d0 - d1.squaredNorm();
    const double b = u0 * d0 - u1.dot(d1);
    const double c = std::max(u0 * u0 - u1.squaredNorm(), 0.0);
    double root = inf;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) root = -c / (2.0 * b);
    } else {
      const double disc = b * b - a * c;
      if (a < 0.0) {
        root = (-b - std::sqrt(std::max(disc, 0.0))) / a;
      } else if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double r1 = (-b - sq) / a, r2 = (-b + sq) / a;
        if (r1 > 0.0) root = r1;
        else if (r2 > 0.0) root = r2;
      }
    }
    if (root >= 0.0) alpha = std::min(alpha, root);
    off += q;
  }
  return alpha;
}

// Nesterov-Todd scaling state. For LP entries w2[i] = s_i/z_i. For each SOC
// block we keep eta and the scaling point wbar with J(wbar)=1, where
// Wbar^2 = 2*wbar*wbar' - J.
struct nt_scaling {
  Eigen::VectorXd lp_w2;
  std::vector<double> eta;
  std::vector<Eigen::VectorXd> wbar;
  Eigen::VectorXd lambda;  // lambda = W z = W^{-1} s

  static std::optional<nt_scaling> compute(const cone_layout& lay,
                                           const Eigen::VectorXd& s,
                                           const Eigen::VectorXd& z) {
    nt_scaling nt;
    nt.lp_w2.resize(lay.lp);
    nt.lambda.resize(lay.dim());
    for (int i = 0; i < lay.lp; ++i) {
      if (s[i] <= 0.0 || z[i] <= 0.0) return std::nullopt;
      nt.lp_w2[i] = s[i] / z[i];
      nt.lambda[i] = std::sqrt(s[i] * z[i]);
    }
    int off = lay.lp;
    for (int q : lay.soc) {
      const double js = s[off] * s[off] - s.segment(off + 1, q - 1).squaredNorm();
      const double jz = z[off] * z[off] - z.segment(off + 1, q - 1).squaredNorm();
      if (js <= 0.0 || jz <= 0.0 || s[off] <= 0.0 || z[off] <= 0.0) return std::nullopt;
      const double sres = std::sqrt(js), zres = std::sqrt(jz);
      Eigen::VectorXd sbar = s.segment(off, q) / sres;
      Eigen::VectorXd zbar = z.segment(off, q) / zres;
      const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
      Eigen::VectorXd w(q);
      w[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
      w.tail(q - 1) = (sbar.tail(q - 1) - zbar.tail(q - 1)) / (2.0 * gamma);
      const double eta = std::sqrt(sres / zres);
      // lambda = eta * Wbar * z
      Eigen::VectorXd lam = apply_wbar(w, z.segment(off, q));
      nt.lambda.segment(off, q) = eta * lam;
      nt.eta.push_back(eta);
      nt.wbar.push_back(std::move(w));
      off += q;
    }
    return nt;
  }

  static Eigen::VectorXd apply_wbar(const Eigen::VectorXd& w, const Eigen::VectorXd& u) {
    const int q = static_cast<int>(u.size());
    Eigen::VectorXd r(q);
    const double w0 = w[0];
    const auto w1 = w.tail(q - 1);
    const auto u1 = u.tail(q - 1);
    const double w1u1 = w1.dot(u1);
    r[0] = w0 * u[0] + w1u1;
    r.tail(q - 1) = u[0] * w1 + u1 + (w1u1 / (1.0 + w0)) * w1;
    return r;
  }
  static Eigen::VectorXd apply_wbar_inv(const Eigen::VectorXd& w, const Eigen::VectorXd& u) {
    const int q = static_cast<int>(u.size());
    Eigen::VectorXd r(q);
    const double w0 = w[0];
    const auto w1 = w.tail(q - 1);
    const auto u1 = u.tail(q - 1);
    const double w1u1 = w1.dot(u1);
    r[0] = w0 * u[0] - w1u1;
    r.tail(q - 1) = -u[0] * w1 + u1 + (w1u1 / (1.0 + w0)) * w1;
    return r;
  }

  // W u (symmetric scaling)
  Eigen::VectorXd apply_w(const cone_layout& lay, const Eigen::VectorXd& u) const {
    Eigen::VectorXd r(lay.dim());
    for (int i = 0; i < lay.lp; ++i) r[i] = std::sqrt(lp_w2[i]) * u[i];
    int off = lay.lp;
    for (size_t k = 0; k < lay.soc.size(); ++k) {
      const int q = lay.soc[k];
      r.segment(off, q) = eta[k] * apply_wbar(wbar[k], u.segment(off, q));
      off += q;
    }
    return r;
  }
  Eigen::VectorXd apply_w_inv(const cone_layout& lay, const Eigen::VectorXd& u) const {
    Eigen::VectorXd r(lay.dim());
    for (int i = 0; i < lay.lp; ++i) r[i] = u[i] / std::sqrt(lp_w2[i]);
    int off = lay.lp;
    for (size_t k = 0; k < lay.soc.size(); ++k) {
      const int q = lay.soc[k];
      r.segment(off, q) = apply_wbar_inv(wbar[k], u.segment(off, q)) / eta[k];
      off += q;
    }
    return r;
  }
  // W^2 u
  Eigen::VectorXd apply_w2(const cone_layout& lay, const Eigen::VectorXd& u) const {
    Eigen::VectorXd r(lay.dim());
    for (int i = 0; i < lay.lp; ++i) r[i] = lp_w2[i] * u[i];
    int off = lay.lp;
    for (size_t k = 0; k < lay.soc.size(); ++k) {
      const int q = lay.soc[k];
      const auto& w = wbar[k];
      const auto u_b = u.segment(off, q);
      const double wu = w.dot(u_b);
      Eigen::VectorXd ju(q);
      ju[0] = u_b[0];
      ju.tail(q - 1) = -u_b.tail(q - 1);
      r.segment(off, q) = eta[k] * eta[k] * (2.0 * wu * w - ju);
      off += q;
    }
    return r;
  }
};

// Jordan algebra helpers over the cone layout.
inline Eigen::VectorXd jordan_mul(const cone_layout& lay, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& v) {
  Eigen::VectorXd r(lay.dim());
  for (int i = 0; i < lay.lp; ++i) r[i] = u[i] * v[i];
  int off = lay.lp;
  for (int q : lay.soc) {
    const auto ub = u.segment(off, q);
    const auto vb = v.segment(off, q);
    r[off] = ub.dot(vb);
    r.segment(off + 1, q - 1) = ub[0] * vb.tail(q - 1) + vb[0] * ub.tail(q - 1);
    off += q;
  }
  return r;
}

// solve lambda o u = d for u
inline Eigen::VectorXd jordan_solve(const cone_layout& lay, const Eigen::VectorXd& lam,
                                    const Eigen::VectorXd& d) {
  Eigen::VectorXd u(lay.dim());
  for (int i = 0; i < lay.lp; ++i) u[i] = d[i] / lam[i];
  int off = lay.lp;
  for (int q : lay.soc) {
    const double l0 = lam[off];
    const auto l1 = lam.segment(off + 1, q - 1);
    const double jl = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * d[off] - l1.dot(d.segment(off + 1, q - 1))) / jl;
    u[off] = u0;
    u.segment(off + 1, q - 1) = (d.segment(off + 1, q - 1) - u0 * l1) / l0;
    off += q;
  }
  return u;
}

// Standard conic form:  min c'x  s.t.  A x = b,  G x + s = h,  s in K.
struct standard_form {
  int n = 0;
  Eigen::SparseMatrix<double> A, G;
  Eigen::VectorXd b, h, c;
  cone_layout lay;
  double obj_constant = 0.0;

  // provenance for mapping duals back to the model
  std::vector<int> eq_row_of;      // A row -> model row index
  std::vector<int> lp_row_of;      // LP slot -> model row index (-1 for bounds)
  std::vector<double> lp_row_sign; // multiplier sign to recover stated-sense dual
  std::vector<int> cone_of;        // SOC block -> model cone index
};

inline standard_form build_standard_form(const model& m, bool relax_binaries) {
  (void)relax_binaries;  // binaries are always relaxed to their bounds here
  standard_form sf;
  sf.n = m.num_vars();
  sf.obj_constant = m.objective_constant();
  sf.c.setZero(sf.n);
  for (int i = 0; i < sf.n; ++i) sf.c[i] = m.objective_coef(i);

  std::vector<Eigen::Triplet<double>> ta, tg;
  std::vector<double> b, h;

  for (int r = 0; r < m.num_rows(); ++r) {
    const auto& row = m.rows()[r];
    if (row.sense == row_sense::eq) {
      const int i = static_cast<int>(b.size());
      for (const auto& t : row.terms) ta.emplace_back(i, t.var, t.coef);
      b.push_back(row.rhs);
      sf.eq_row_of.push_back(r);
    }
  }
  // LP inequalities: normalized to g'x <= h
  for (int r = 0; r < m.num_rows(); ++r) {
    const auto& row = m.rows()[r];
    if (row.sense == row_sense::eq) continue;
    const double sgn = row.sense == row_sense::le ? 1.0 : -1.0;
    const int i = static_cast<int>(h.size());
    for (const auto& t : row.terms) tg.emplace_back(i, t.var, sgn * t.coef);
    h.push_back(sgn * row.rhs);
    sf.lp_row_of.push_back(r);
    sf.lp_row_sign.push_back(1.0);
  }
  // variable bounds
  for (int v = 0; v < m.num_vars(); ++v) {
    const auto& vd = m.var(v);
    if (vd.lo > -inf) {
      const int i = static_cast<int>(h.size());
      tg.emplace_back(i, v, -1.0);
      h.push_back(-vd.lo);
      sf.lp_row_of.push_back(-1);
      sf.lp_row_sign.push_back(1.0);
    }
    if (vd.hi < inf) {
      const int i = static_cast<int>(h.size());
      tg.emplace_back(i, v, 1.0);
      h.push_back(vd.hi);
      sf.lp_row_of.push_back(-1);
      sf.lp_row_sign.push_back(1.0);
    }
  }
  sf.lay.lp = static_cast<int>(h.size());
  // SOC blocks: s_block = e(x), i.e. G = -coef, h = const
  for (int cidx = 0; cidx < m.num_cones(); ++cidx) {
    const auto& blk = m.cones()[cidx];
    const int q = static_cast<int>(blk.exprs.size());
    for (int j = 0; j < q; ++j) {
      const int i = static_cast<int>(h.size());
      for (const auto& t : blk.exprs[j].terms) tg.emplace_back(i, t.var, -t.coef);
      h.push_back(blk.exprs[j].constant);
    }
    sf.lay.soc.push_back(q);
    sf.cone_of.push_back(cidx);
  }

  sf.A.resize(static_cast<int>(b.size()), sf.n);
  sf.A.setFromTriplets(ta.begin(), ta.end());
  sf.G.resize(static_cast<int>(h.size()), sf.n);
  sf.G.setFromTriplets(tg.begin(), tg.end());
  sf.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int>(b.size()));
  sf.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<int>(h.size()));
  return sf;
}

// KKT solver for [ dI  A'  G' ; A  -dI  0 ; G  0  -(W^2+dI) ] with iterative
// refinement against the unregularized system.
class kkt_solver {
public:
  kkt_solver(const standard_form& sf) : sf_(sf) {}

  bool factor(const nt_scaling& nt) {
    nt_ = &nt;
    const int n = sf_.n;
    const int p = static_cast<int>(sf_.A.rows());
    const int mm = static_cast<int>(sf_.G.rows());
    const int N = n + p + mm;
    std::vector<Eigen::Triplet<double>> tri;
    tri.reserve(sf_.A.nonZeros() * 2 + sf_.G.nonZeros() * 2 + N + 16 * sf_.lay.soc.size());
    for (int i = 0; i < n; ++i) tri.emplace_back(i, i, kReg);
    for (int i = 0; i < p; ++i) tri.emplace_back(n + i, n + i, -kReg);
    for (int k = 0; k < sf_.A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.A, k); it; ++it) {
        tri.emplace_back(n + it.row(), it.col(), it.value());
        tri.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (int k = 0; k < sf_.G.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.G, k); it; ++it) {
        tri.emplace_back(n + p + it.row(), it.col(), it.value());
        tri.emplace_back(it.col(), n + p + it.row(), it.value());
      }
    for (int i = 0; i < sf_.lay.lp; ++i)
      tri.emplace_back(n + p + i, n + p + i, -nt.lp_w2[i] - kReg);
    int off = sf_.lay.lp;
    for (size_t kb = 0; kb < sf_.lay.soc.size(); ++kb) {
      const int q = sf_.lay.soc[kb];
      const auto& w = nt.wbar[kb];
      const double e2 = nt.eta[kb] * nt.eta[kb];
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
          double wij = 2.0 * w[i] * w[j];
          if (i == j) wij += (i == 0 ? -1.0 : 1.0);
          double val = -e2 * wij;
          if (i == j) val -= kReg;
          if (val != 0.0) tri.emplace_back(n + p + off + i, n + p + off + j, val);
        }
      off += q;
    }
    Eigen::SparseMatrix<double> K(N, N);
    K.setFromTriplets(tri.begin(), tri.end());
    ldlt_.compute(K);
    return ldlt_.info() == Eigen::Success;
  }

  // Solve the unregularized KKT system by refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd u = ldlt_.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd r = rhs - apply(u);
      u += ldlt_.solve(r);
    }
    return u;
  }

  // y := K_unreg * u
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    const int n = sf_.n;
    const int p = static_cast<int>(sf_.A.rows());
    const int mm = static_cast<int>(sf_.G.rows());
    Eigen::VectorXd x = u.head(n), y = u.segment(n, p), z = u.tail(mm);
    Eigen::VectorXd out(n + p + mm);
    out.head(n) = sf_.A.transpose() * y + sf_.G.transpose() * z;
    out.segment(n, p) = sf_.A * x;
    out.tail(mm) = sf_.G * x - nt_->apply_w2(sf_.lay, z);
    return out;
  }

private:
  static constexpr double kReg = 1e-10;
  const standard_form& sf_;
  const nt_scaling* nt_ = nullptr;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace detail

/// Primal-dual interior-point solver over the nonnegative orthant and
/// second-order cones, on the homogeneous self-dual embedding with
/// Nesterov-Todd scaling and a Mehrotra predictor-corrector. Binary variables
/// are relaxed to their current bounds.
inline solve_result solve_continuous(const model& mdl, const ipm_options& opt = {}) {
  using namespace detail;
  mdl.validate();
  solve_result res;
  const standard_form sf = build_standard_form(mdl, true);
  const int n = sf.n;
  const int p = static_cast<int>(sf.A.rows());
  const int mm = static_cast<int>(sf.G.rows());
  if (mm == 0)
    throw input_error("model has no inequality/bound/cone rows; conic solver needs a bounded cone part");

  const double nrm_b = p ? sf.b.cwiseAbs().maxCoeff() : 0.0;
  const double nrm_h = sf.h.cwiseAbs().maxCoeff();
  const double nrm_c = n ? sf.c.cwiseAbs().maxCoeff() : 0.0;
  const double nu = sf.lay.degree();

  Eigen::VectorXd e;
  cone_unit(sf.lay, e);

  // --- initial point: identity scaling, least-norm primal/dual heuristics
  nt_scaling nt_id;
  nt_id.lp_w2 = Eigen::VectorXd::Ones(sf.lay.lp);
  nt_id.lambda = e;
  for (int q : sf.lay.soc) {
    nt_id.eta.push_back(1.0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(q);
    w[0] = 1.0;
    nt_id.wbar.push_back(std::move(w));
  }
  kkt_solver kkt(sf);
  if (!kkt.factor(nt_id)) {
    res.status = solve_status::numerical_error;
    res.message = "initial KKT factorization failed";
    return res;
  }
  Eigen::VectorXd x, y, s, z;
  {
    Eigen::VectorXd rhs(n + p + mm);
    rhs.setZero();
    rhs.segment(n, p) = sf.b;
    rhs.tail(mm) = sf.h;
    Eigen::VectorXd u = kkt.solve(rhs);
    x = u.head(n);
    s = -u.tail(mm);  // s = h - Gx at the least-norm point
    // push into the cone interior
    double ap = -inf;
    for (int i = 0; i < sf.lay.lp; ++i) ap = std::max(ap, -s[i]);
    int off = sf.lay.lp;
    for (int q : sf.lay.soc) {
      ap = std::max(ap, s.segment(off + 1, q - 1).norm() - s[off]);
      off += q;
    }
    if (ap >= 0.0) s += (1.0 + ap) * e;

    rhs.setZero();
    rhs.head(n) = -sf.c;
    u = kkt.solve(rhs);
    y = u.segment(n, p);
    z = u.tail(mm);
    double ad = -inf;
    for (int i = 0; i < sf.lay.lp; ++i) ad = std::max(ad, -z[i]);
    off = sf.lay.lp;
    for (int q : sf.lay.soc) {
      ad = std::max(ad, z.segment(off + 1, q - 1).norm() - z[off]);
      off += q;
    }
    if (ad >= 0.0) z += (1.0 + ad) * e;
  }
  double tau = 1.0, kappa = 1.0;

  std::ostringstream trace;
  const auto record = [&](int it, double pres, double dres, double relgap, double mu) {
    char line[160];
    std::snprintf(line, sizeof(line), "it=%-3d pres=%9.2e dres=%9.2e relgap=%9.2e mu=%9.2e tau=%8.2e kappa=%8.2e",
                  it, pres, dres, relgap, mu, tau, kappa);
    trace << line << "\n";
    if (opt.verbose) log_info("%s", line);
  };

  const auto finish_optimal = [&](int it) {
    res.status = solve_status::optimal;
    res.iterations = it;
    res.x.assign(x.data(), x.data() + n);
    for (auto& v : res.x) v /= tau;
    res.objective = sf.c.dot(x) / tau + sf.obj_constant;
    res.dual_objective = -(sf.b.dot(y) + sf.h.dot(z)) / tau + sf.obj_constant;
    res.row_duals.assign(mdl.num_rows(), 0.0);
    for (int i = 0; i < p; ++i) res.row_duals[sf.eq_row_of[i]] = y[i] / tau;
    for (int i = 0; i < sf.lay.lp; ++i)
      if (sf.lp_row_of[i] >= 0) res.row_duals[sf.lp_row_of[i]] = z[i] / tau;
    res.cone_duals.resize(sf.lay.soc.size());
    int off = sf.lay.lp;
    for (size_t k = 0; k < sf.lay.soc.size(); ++k) {
      const int q = sf.lay.soc[k];
      res.cone_duals[k].assign(z.data() + off, z.data() + off + q);
      for (auto& v : res.cone_duals[k]) v /= tau;
      off += q;
    }
  };

  // Classifies the current iterate as an infeasibility/unboundedness ray.
  // `slack` relaxes the certificate tolerance on abort paths where the
  // iteration can no longer continue but the ray signature is unambiguous.
  const auto classify_ray = [&](int it, double slack) -> bool {
    const double dobj_ray = -(sf.b.dot(y) + sf.h.dot(z));
    if (dobj_ray > 0.0) {
      const double cert = (sf.A.transpose() * y + sf.G.transpose() * z).cwiseAbs().maxCoeff();
      if (cert <= slack * opt.feas_tol * (1.0 + nrm_c) * dobj_ray) {
        res.status = solve_status::infeasible;
        res.iterations = it;
        res.row_duals.assign(mdl.num_rows(), 0.0);
        for (int i = 0; i < p; ++i) res.row_duals[sf.eq_row_of[i]] = y[i] / dobj_ray;
        for (int i = 0; i < sf.lay.lp; ++i)
          if (sf.lp_row_of[i] >= 0) res.row_duals[sf.lp_row_of[i]] = z[i] / dobj_ray;
        res.message = "primal infeasible; dual ray with b'y+h'z = -1 stored in row_duals";
        return true;
      }
    }
    const double pobj_ray = -sf.c.dot(x);
    if (pobj_ray > 0.0) {
      const double cert = std::max(p ? (sf.A * x).cwiseAbs().maxCoeff() : 0.0,
                                   (sf.G * x + s).cwiseAbs().maxCoeff());
      if (cert <= slack * opt.feas_tol * (1.0 + std::max(nrm_b, nrm_h)) * pobj_ray) {
        res.status = solve_status::unbounded;
        res.iterations = it;
        res.x.assign(x.data(), x.data() + n);
        for (auto& v : res.x) v /= pobj_ray;
        res.message = "dual infeasible; unbounded primal ray with c'x = -1 stored in x";
        return true;
      }
    }
    return false;
  };
  // Relaxed classification is only trusted once tau has collapsed against
  // kappa, the telltale of the infeasible/unbounded branch of the embedding.
  const auto classify_on_abort = [&](int it) {
    return tau <= 1e-6 * std::max(1.0, kappa) && classify_ray(it, 1e4);
  };

  for (int it = 0; it <= opt.max_iter; ++it) {
    // residuals of the embedding
    Eigen::VectorXd r1 = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    Eigen::VectorXd r2 = sf.A * x - sf.b * tau;
    Eigen::VectorXd r3 = sf.G * x + s - sf.h * tau;
    const double r4 = sf.c.dot(x) + sf.b.dot(y) + sf.h.dot(z) + kappa;

    const double gap_abs = s.dot(z);
    const double mu = (gap_abs + tau * kappa) / (nu + 1.0);
    const double pcost = sf.c.dot(x) / tau;
    const double dcost = -(sf.b.dot(y) + sf.h.dot(z)) / tau;
    const double pres = std::max(p ? r2.cwiseAbs().maxCoeff() : 0.0,
                                 r3.cwiseAbs().maxCoeff()) /
                        (tau * (1.0 + std::max(nrm_b, nrm_h)));
    const double dres = r1.cwiseAbs().maxCoeff() / (tau * (1.0 + nrm_c));
    const double relgap = (gap_abs / (tau * tau)) / std::max({1.0, std::abs(pcost), std::abs(dcost)});
    record(it, pres, dres, relgap, mu);

    if (pres <= opt.feas_tol && dres <= opt.feas_tol && relgap <= opt.gap_tol) {
      res.residuals = {pres, dres, relgap};
      finish_optimal(it);
      return res;
    }
    if (classify_ray(it, 1.0)) return res;
    if (it == opt.max_iter) break;

    auto nt_opt = nt_scaling::compute(sf.lay, s, z);
    if (!nt_opt) {
      if (classify_on_abort(it)) return res;
      res.status = solve_status::numerical_error;
      res.message = "iterate left the cone interior\n" + trace.str();
      res.iterations = it;
      return res;
    }
    nt_scaling& nt = *nt_opt;
    if (!kkt.factor(nt)) {
      if (classify_on_abort(it)) return res;
      res.status = solve_status::numerical_error;
      res.message = "KKT factorization failed\n" + trace.str();
      res.iterations = it;
      return res;
    }
    Eigen::VectorXd rhs1(n + p + mm);
    rhs1.head(n) = -sf.c;
    rhs1.segment(n, p) = sf.b;
    rhs1.tail(mm) = sf.h;
    const Eigen::VectorXd u1 = kkt.solve(rhs1);
    const double dot1 = sf.c.dot(u1.head(n)) + sf.b.dot(u1.segment(n, p)) + sf.h.dot(u1.tail(mm));

    const auto take_step = [&](const Eigen::VectorXd& ds_rhs, double dkappa_rhs,
                               double resid_scale, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                               Eigen::VectorXd& dz, Eigen::VectorXd& ds, double& dtau,
                               double& dkappa) {
      Eigen::VectorXd lam_inv_ds = jordan_solve(sf.lay, nt.lambda, ds_rhs);
      Eigen::VectorXd w_lids = nt.apply_w(sf.lay, lam_inv_ds);
      Eigen::VectorXd rhs0(n + p + mm);
      rhs0.head(n) = -resid_scale * r1;
      rhs0.segment(n, p) = -resid_scale * r2;
      rhs0.tail(mm) = -resid_scale * r3 + w_lids;
      const Eigen::VectorXd u0 = kkt.solve(rhs0);
      const double dot0 = sf.c.dot(u0.head(n)) + sf.b.dot(u0.segment(n, p)) + sf.h.dot(u0.tail(mm));
      dtau = (-resid_scale * r4 + dkappa_rhs / tau - dot0) / (dot1 - kappa / tau);
      dx = u0.head(n) + dtau * u1.head(n);
      dy = u0.segment(n, p) + dtau * u1.segment(n, p);
      dz = u0.tail(mm) + dtau * u1.tail(mm);
      ds = -nt.apply_w(sf.lay, lam_inv_ds + nt.apply_w(sf.lay, dz));
      dkappa = -(dkappa_rhs + kappa * dtau) / tau;
    };

    // predictor
    Eigen::VectorXd dxa, dya, dza, dsa;
    double dtaua, dkappaa;
    Eigen::VectorXd ds_aff = jordan_mul(sf.lay, nt.lambda, nt.lambda);
    take_step(ds_aff, tau * kappa, 1.0, dxa, dya, dza, dsa, dtaua, dkappaa);
    double amax = std::min(step_to_boundary(sf.lay, s, dsa), step_to_boundary(sf.lay, z, dza));
    if (dtaua < 0.0) amax = std::min(amax, -tau / dtaua);
    if (dkappaa < 0.0) amax = std::min(amax, -kappa / dkappaa);
    const double alpha_aff = std::min(1.0, amax);
    const double mu_aff = ((s + alpha_aff * dsa).dot(z + alpha_aff * dza) +
                           (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)) /
                          (nu + 1.0);
    double sigma = std::pow(std::max(0.0, std::min(1.0, mu_aff / mu)), 3.0);
    sigma = std::min(std::max(sigma, 1e-8), 1.0 - 1e-8);

    // corrector
    Eigen::VectorXd wi_dsa = nt.apply_w_inv(sf.lay, dsa);
    Eigen::VectorXd w_dza = nt.apply_w(sf.lay, dza);
    Eigen::VectorXd ds_comb = ds_aff + jordan_mul(sf.lay, wi_dsa, w_dza) - sigma * mu * e;
    const double dk_comb = tau * kappa + dtaua * dkappaa - sigma * mu;
    Eigen::VectorXd dx, dy, dz, ds;
    double dtau, dkappa;
    take_step(ds_comb, dk_comb, 1.0 - sigma, dx, dy, dz, ds, dtau, dkappa);
    amax = std::min(step_to_boundary(sf.lay, s, ds), step_to_boundary(sf.lay, z, dz));
    if (dtau < 0.0) amax = std::min(amax, -tau / dtau);
    if (dkappa < 0.0) amax = std::min(amax, -kappa / dkappa);
    const double alpha = std::min(1.0, 0.99 * amax);
    if (!(alpha > 1e-13) || !std::isfinite(alpha)) {
      if (classify_on_abort(it)) return res;
      res.status = solve_status::numerical_error;
      res.message = "step length stalled\n" + trace.str();
      res.iterations = it;
      return res;
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  res.status = solve_status::iteration_limit;
  res.iterations = opt.max_iter;
  res.message = "iteration limit reached\n" + trace.str();
  res.x.assign(x.data(), x.data() + n);
  for (auto& v : res.x) v /= tau;
  res.objective = sf.c.dot(x) / tau + sf.obj_constant;
  return res;
}

}  // namespace gridrestore::conic
