#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gridrestore/common.hpp"

namespace gridrestore::conic {

constexpr double inf = std::numeric_limits<double>::infinity();

enum class var_kind { continuous, binary };

enum class row_sense { le, ge, eq };

struct linear_term {
  int var = -1;
  double coef = 0.0;
};

/// a'x + constant
struct affine_expr {
  std::vector<linear_term> terms;
  double constant = 0.0;

  affine_expr() = default;
  affine_expr(std::vector<linear_term> t, double c) : terms(std::move(t)), constant(c) {}

  static affine_expr of_var(int v, double coef = 1.0) {
    affine_expr e;
    e.terms.push_back({v, coef});
    return e;
  }
  affine_expr& add(int v, double coef) {
    if (coef != 0.0) terms.push_back({v, coef});
    return *this;
  }
};

struct variable_def {
  std::string name;
  var_kind kind = var_kind::continuous;
  double lo = -inf;
  double hi = inf;
};

struct linear_row {
  std::string name;
  std::vector<linear_term> terms;
  row_sense sense = row_sense::le;
  double rhs = 0.0;
};

/// Second-order cone block: ||(e_1, ..., e_k)|| <= e_0 with k >= 1.
struct soc_block {
  std::string name;
  std::vector<affine_expr> exprs;  // exprs[0] is the bound side
};

/// Generic minimization model over continuous/binary variables with linear
/// rows and second-order cone blocks. Insertion order is the canonical order
/// everywhere (dumps, standard-form conversion), which keeps builds
/// bit-reproducible.
class model {
public:
  int add_var(std::string name, var_kind kind, double lo, double hi) {
    if (kind == var_kind::binary) {
      if (lo < 0.0 || hi > 1.0)
        throw input_error("binary variable '" + name + "' has bounds outside [0,1]");
    }
    vars_.push_back({std::move(name), kind, lo, hi});
    return static_cast<int>(vars_.size()) - 1;
  }
  int add_continuous(std::string name, double lo = -inf, double hi = inf) {
    return add_var(std::move(name), var_kind::continuous, lo, hi);
  }
  int add_binary(std::string name) {
    return add_var(std::move(name), var_kind::binary, 0.0, 1.0);
  }

  void add_row(linear_row row) {
    check_terms(row.terms, "row '" + row.name + "'");
    rows_.push_back(std::move(row));
  }
  void add_row(std::string name, std::vector<linear_term> terms, row_sense sense, double rhs) {
    add_row(linear_row{std::move(name), std::move(terms), sense, rhs});
  }

  void add_cone(soc_block block) {
    if (block.exprs.size() < 2)
      throw input_error("cone block '" + block.name + "' needs k >= 1");
    for (const auto& e : block.exprs) check_terms(e.terms, "cone '" + block.name + "'");
    cones_.push_back(std::move(block));
  }

  void set_objective_term(int var, double coef) {
    check_var(var, "objective");
    if (static_cast<int>(obj_.size()) < num_vars()) obj_.resize(num_vars(), 0.0);
    obj_[var] += coef;
  }
  void set_objective_constant(double c) { obj_constant_ = c; }
  void add_objective_constant(double c) { obj_constant_ += c; }

  // Bound edits are used by branch-and-bound to fix/split binaries.
  void set_var_bounds(int var, double lo, double hi) {
    check_var(var, "bounds");
    vars_[var].lo = lo;
    vars_[var].hi = hi;
  }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_cones() const { return static_cast<int>(cones_.size()); }
  const variable_def& var(int i) const { return vars_[i]; }
  const std::vector<variable_def>& vars() const { return vars_; }
  const std::vector<linear_row>& rows() const { return rows_; }
  const std::vector<soc_block>& cones() const { return cones_; }
  double objective_coef(int v) const {
    return v < static_cast<int>(obj_.size()) ? obj_[v] : 0.0;
  }
  double objective_constant() const { return obj_constant_; }

  std::vector<int> binary_vars() const {
    std::vector<int> out;
    for (int i = 0; i < num_vars(); ++i)
      if (vars_[i].kind == var_kind::binary) out.push_back(i);
    return out;
  }

  double eval_objective(const std::vector<double>& x) const {
    double v = obj_constant_;
    for (int i = 0; i < num_vars() && i < static_cast<int>(obj_.size()); ++i)
      v += obj_[i] * x[i];
    return v;
  }

  /// Checks all structural invariants; throws input_error naming the offender.
  void validate() const {
    for (int i = 0; i < num_vars(); ++i) {
      const auto& v = vars_[i];
      if (!(v.lo <= v.hi))
        throw input_error("variable '" + v.name + "' has lo > hi");
      if (v.kind == var_kind::binary && (v.lo < 0.0 || v.hi > 1.0))
        throw input_error("binary variable '" + v.name + "' has bounds outside [0,1]");
    }
    for (const auto& r : rows_) check_terms(r.terms, "row '" + r.name + "'");
    for (const auto& c : cones_) {
      if (c.exprs.size() < 2)
        throw input_error("cone block '" + c.name + "' needs k >= 1");
      for (const auto& e : c.exprs) check_terms(e.terms, "cone '" + c.name + "'");
    }
  }

  /// Text dump for differential testing: one row per line, cones by block.
  /// Deterministic: fixed ordering and %.17g formatting.
  void dump(std::ostream& os) const {
    os << "conicmodel v1\n";
    os << "vars " << num_vars() << "\n";
    for (const auto& v : vars_) {
      os << "  var " << v.name << " "
         << (v.kind == var_kind::binary ? "bin" : "cont") << " "
         << fmt(v.lo) << " " << fmt(v.hi) << "\n";
    }
    os << "min";
    for (int i = 0; i < static_cast<int>(obj_.size()); ++i)
      if (obj_[i] != 0.0) os << " " << fmt(obj_[i]) << "*" << vars_[i].name;
    if (obj_constant_ != 0.0) os << " + " << fmt(obj_constant_);
    os << "\n";
    os << "rows " << num_rows() << "\n";
    for (const auto& r : rows_) {
      os << "  row " << r.name << ":";
      for (const auto& t : r.terms) os << " " << fmt(t.coef) << "*" << vars_[t.var].name;
      os << (r.sense == row_sense::le ? " <= " : r.sense == row_sense::ge ? " >= " : " == ");
      os << fmt(r.rhs) << "\n";
    }
    os << "cones " << num_cones() << "\n";
    for (const auto& c : cones_) {
      os << "  cone " << c.name << ":";
      bool first = true;
      for (const auto& e : c.exprs) {
        os << (first ? " " : " | ");
        first = false;
        bool any = false;
        for (const auto& t : e.terms) {
          os << (any ? " + " : "") << fmt(t.coef) << "*" << vars_[t.var].name;
          any = true;
        }
        if (e.constant != 0.0 || !any) os << (any ? " + " : "") << fmt(e.constant);
      }
      os << "\n";
    }
  }

  std::string dump_string() const {
    std::ostringstream ss;
    dump(ss);
    return ss.str();
  }

private:
  static std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  void check_var(int v, const std::string& where) const {
    if (v < 0 || v >= num_vars())
      throw input_error("unknown variable index in " + where);
  }
  void check_terms(const std::vector<linear_term>& ts, const std::string& where) const {
    for (const auto& t : ts) check_var(t.var, where);
  }

  std::vector<variable_def> vars_;
  std::vector<linear_row> rows_;
  std::vector<soc_block> cones_;
  std::vector<double> obj_;
  double obj_constant_ = 0.0;
};

}  // namespace gridrestore::conic
