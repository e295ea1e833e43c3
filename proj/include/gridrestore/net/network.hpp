#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridrestore/common.hpp"

namespace gridrestore::net {

struct time_grid {
  double start_hour = 9.0;
  double step_hours = 1.0;
  int count = 12;
};

enum class switch_kind { sectionalizing, tie };
enum class actuation { manual, remote };

struct switch_def {
  std::string id;
  switch_kind kind = switch_kind::sectionalizing;
  actuation act = actuation::manual;
  double op_time_min = 30.0;  // lambda_ij
};

struct node_def {
  std::string id;
  bool substation = false;
};

struct line_def {
  std::string id;
  int from = -1, to = -1;     // node indices
  double r = 0.0, x = 0.0;    // p.u.
  double ampacity = 0.0;      // f_ij^max, p.u. current
  int switch_idx = -1;        // -1: not switchable
  bool tie = false;           // normally open
};

struct load_def {
  int node = -1;
  double importance = 1.0;    // D_i
  bool breaker = false;
  double breaker_op_time_min = 0.5;  // lambda_i
  std::vector<double> p, q;   // per time step, p.u.
};

struct dg_def {
  std::string id;
  int node = -1;
  bool dispatchable = true;
  double p_max = 0.0;           // P^inj_max
  double s_max = 0.0;           // S^inj_max
  std::vector<double> profile;  // non-dispatchable injection per step
};

/// Static grid data. Loaded from the JSON schema documented in the repo
/// fixtures; validated on construction.
struct network {
  double base_mva = 1.0;
  double v_base_kv = 11.4;
  double v_min = 0.917, v_max = 1.05;
  double v_slack = 1.0;
  time_grid grid;

  std::vector<node_def> nodes;
  std::vector<line_def> lines;
  std::vector<switch_def> switches;
  std::vector<load_def> loads;
  std::vector<dg_def> dgs;

  std::map<std::string, int> node_index, line_index, switch_index;
  std::vector<int> load_at;              // node -> load index or -1
  std::vector<int> dg_at;                // node -> dg index or -1
  std::vector<std::vector<int>> lines_at;  // node -> incident line indices

  bool base_closed(int l) const { return !lines[l].tie; }
  bool switchable(int l) const { return lines[l].switch_idx >= 0; }
  const switch_def& line_switch(int l) const { return switches[lines[l].switch_idx]; }
  int other_end(int l, int n) const { return lines[l].from == n ? lines[l].to : lines[l].from; }

  int require_node(const std::string& id, const std::string& ctx) const {
    auto it = node_index.find(id);
    if (it == node_index.end())
      throw input_error(ctx + " references unknown node '" + id + "'");
    return it->second;
  }

  static network from_json(const nlohmann::json& j);
  static network load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open network file '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw input_error("network file '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  void build_indices();
  void validate() const;
};

namespace detail {

class union_find {
public:
  explicit union_find(int n) : parent_(n) {
    for (int i = 0; i < n; ++i) parent_[i] = i;
  }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  bool unite(int a, int b) {  // false if already joined (cycle)
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

private:
  std::vector<int> parent_;
};

inline double get_num(const nlohmann::json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

}  // namespace detail

inline void network::build_indices() {
  node_index.clear();
  line_index.clear();
  switch_index.clear();
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (!node_index.emplace(nodes[i].id, static_cast<int>(i)).second)
      throw input_error("duplicate node '" + nodes[i].id + "'");
  }
  for (size_t i = 0; i < switches.size(); ++i) {
    if (!switch_index.emplace(switches[i].id, static_cast<int>(i)).second)
      throw input_error("duplicate switch '" + switches[i].id + "'");
  }
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!line_index.emplace(lines[i].id, static_cast<int>(i)).second)
      throw input_error("duplicate line '" + lines[i].id + "'");
  }
  load_at.assign(nodes.size(), -1);
  for (size_t i = 0; i < loads.size(); ++i) {
    if (load_at[loads[i].node] >= 0)
      throw input_error("node '" + nodes[loads[i].node].id + "' carries two loads");
    load_at[loads[i].node] = static_cast<int>(i);
  }
  dg_at.assign(nodes.size(), -1);
  for (size_t i = 0; i < dgs.size(); ++i) {
    if (dg_at[dgs[i].node] >= 0)
      throw input_error("node '" + nodes[dgs[i].node].id + "' carries two DGs");
    dg_at[dgs[i].node] = static_cast<int>(i);
  }
  lines_at.assign(nodes.size(), {});
  for (size_t i = 0; i < lines.size(); ++i) {
    lines_at[lines[i].from].push_back(static_cast<int>(i));
    lines_at[lines[i].to].push_back(static_cast<int>(i));
  }
}

inline void network::validate() const {
  if (!(v_min < v_max)) throw input_error("voltage limits: v_min must be < v_max");
  if (grid.count < 1) throw input_error("time grid needs at least one step");
  if (base_mva <= 0.0) throw input_error("base_mva must be positive");
  for (const auto& l : lines) {
    if (l.r < 0.0 || l.x < 0.0)
      throw input_error("line '" + l.id + "' has negative impedance");
    if (l.ampacity <= 0.0)
      throw input_error("line '" + l.id + "' needs positive ampacity");
    if (l.tie && l.switch_idx < 0)
      throw input_error("tie line '" + l.id + "' must carry a switch");
    if (l.switch_idx >= 0) {
      const bool sw_tie = switches[l.switch_idx].kind == switch_kind::tie;
      if (sw_tie != l.tie)
        throw input_error("line '" + l.id + "' and switch '" + switches[l.switch_idx].id +
                          "' disagree on tie status");
    }
  }
  for (const auto& s : switches)
    if (s.op_time_min <= 0.0)
      throw input_error("switch '" + s.id + "' needs positive operation time");
  for (const auto& ld : loads) {
    if (ld.importance < 1.0)
      throw input_error("load at node '" + nodes[ld.node].id + "' has importance < 1");
    if (static_cast<int>(ld.p.size()) != grid.count ||
        static_cast<int>(ld.q.size()) != grid.count)
      throw input_error("load at node '" + nodes[ld.node].id +
                        "' profile length differs from time grid");
    for (double v : ld.p)
      if (v < 0.0)
        throw input_error("load at node '" + nodes[ld.node].id + "' has negative demand");
    if (ld.breaker && ld.breaker_op_time_min <= 0.0)
      throw input_error("load at node '" + nodes[ld.node].id + "' needs positive breaker time");
  }
  for (const auto& g : dgs) {
    if (!(g.p_max > 0.0) || !(g.p_max <= g.s_max))
      throw input_error("DG '" + g.id + "' needs 0 < p_max <= s_max");
    if (!g.dispatchable && static_cast<int>(g.profile.size()) != grid.count)
      throw input_error("DG '" + g.id + "' profile length differs from time grid");
  }

  // Base topology (sectionalizers closed, ties open) must be a spanning
  // forest rooted at substations.
  detail::union_find uf(static_cast<int>(nodes.size()));
  for (size_t l = 0; l < lines.size(); ++l) {
    if (!base_closed(static_cast<int>(l))) continue;
    if (!uf.unite(lines[l].from, lines[l].to))
      throw input_error("non-radial base: closing line '" + lines[l].id +
                        "' creates a cycle in the base topology");
  }
  std::map<int, std::string> sub_of_root;
  for (const auto& n : nodes) {
    if (!n.substation) continue;
    const int root = uf.find(node_index.at(n.id));
    auto [it, fresh] = sub_of_root.emplace(root, n.id);
    if (!fresh)
      throw input_error("non-radial base: substations '" + it->second + "' and '" + n.id +
                        "' share a base component");
  }
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].substation) continue;
    if (!sub_of_root.count(uf.find(static_cast<int>(i))))
      throw input_error("non-radial base: node '" + nodes[i].id +
                        "' is not connected to any substation");
  }
}

inline network network::from_json(const nlohmann::json& j) {
  network net;
  try {
    if (detail::get_num(j, "schema_version", 0) != 1)
      throw input_error("network file: unsupported schema_version (need 1)");
    net.base_mva = detail::get_num(j, "base_mva", 1.0);
    net.v_base_kv = detail::get_num(j, "v_base_kv", 11.4);
    if (j.contains("v_limits")) {
      net.v_min = j.at("v_limits").at("min").get<double>();
      net.v_max = j.at("v_limits").at("max").get<double>();
    }
    net.v_slack = detail::get_num(j, "v_slack", 1.0);
    if (j.contains("time_grid")) {
      const auto& tg = j.at("time_grid");
      net.grid.start_hour = detail::get_num(tg, "start_hour", 9.0);
      net.grid.step_hours = detail::get_num(tg, "step_hours", 1.0);
      net.grid.count = static_cast<int>(detail::get_num(tg, "count", 12));
    }
    for (const auto& nj : j.at("nodes")) {
      node_def n;
      n.id = nj.at("id").get<std::string>();
      n.substation = nj.value("substation", false);
      net.nodes.push_back(std::move(n));
    }
    for (const auto& sj : j.value("switches", nlohmann::json::array())) {
      switch_def s;
      s.id = sj.at("id").get<std::string>();
      const std::string kind = sj.at("kind").get<std::string>();
      if (kind == "sectionalizing") s.kind = switch_kind::sectionalizing;
      else if (kind == "tie") s.kind = switch_kind::tie;
      else throw input_error("switch '" + s.id + "': unknown kind '" + kind + "'");
      const std::string act = sj.value("actuation", "manual");
      if (act == "manual") s.act = actuation::manual;
      else if (act == "remote") s.act = actuation::remote;
      else throw input_error("switch '" + s.id + "': unknown actuation '" + act + "'");
      s.op_time_min = detail::get_num(sj, "op_time_min", 30.0);
      net.switches.push_back(std::move(s));
    }
    // indices for nodes/switches exist before lines reference them
    std::map<std::string, int> tmp_nodes, tmp_switches;
    for (size_t i = 0; i < net.nodes.size(); ++i)
      if (!tmp_nodes.emplace(net.nodes[i].id, static_cast<int>(i)).second)
        throw input_error("duplicate node '" + net.nodes[i].id + "'");
    for (size_t i = 0; i < net.switches.size(); ++i)
      if (!tmp_switches.emplace(net.switches[i].id, static_cast<int>(i)).second)
        throw input_error("duplicate switch '" + net.switches[i].id + "'");

    for (const auto& lj : j.at("lines")) {
      line_def l;
      l.id = lj.at("id").get<std::string>();
      const std::string from = lj.at("from").get<std::string>();
      const std::string to = lj.at("to").get<std::string>();
      if (!tmp_nodes.count(from))
        throw input_error("line '" + l.id + "' references unknown node '" + from + "'");
      if (!tmp_nodes.count(to))
        throw input_error("line '" + l.id + "' references unknown node '" + to + "'");
      l.from = tmp_nodes[from];
      l.to = tmp_nodes[to];
      l.r = lj.at("r").get<double>();
      l.x = lj.at("x").get<double>();
      l.ampacity = lj.at("ampacity").get<double>();
      l.tie = lj.value("tie", false);
      if (lj.contains("switch")) {
        const std::string sid = lj.at("switch").get<std::string>();
        if (!tmp_switches.count(sid))
          throw input_error("line '" + l.id + "' references unknown switch '" + sid + "'");
        l.switch_idx = tmp_switches[sid];
      }
      net.lines.push_back(std::move(l));
    }
    for (const auto& dj : j.value("dgs", nlohmann::json::array())) {
      dg_def g;
      g.id = dj.at("id").get<std::string>();
      const std::string nid = dj.at("node").get<std::string>();
      if (!tmp_nodes.count(nid))
        throw input_error("DG '" + g.id + "' references unknown node '" + nid + "'");
      g.node = tmp_nodes[nid];
      const std::string kind = dj.value("kind", "dispatchable");
      g.dispatchable = kind == "dispatchable";
      if (!g.dispatchable && kind != "non_dispatchable")
        throw input_error("DG '" + g.id + "': unknown kind '" + kind + "'");
      g.p_max = dj.at("p_max").get<double>();
      g.s_max = detail::get_num(dj, "s_max", g.p_max);
      if (dj.contains("profile")) g.profile = dj.at("profile").get<std::vector<double>>();
      net.dgs.push_back(std::move(g));
    }
    for (const auto& oj : j.value("loads", nlohmann::json::array())) {
      load_def ld;
      const std::string nid = oj.at("node").get<std::string>();
      if (!tmp_nodes.count(nid))
        throw input_error("load references unknown node '" + nid + "'");
      ld.node = tmp_nodes[nid];
      ld.importance = detail::get_num(oj, "importance", 1.0);
      ld.breaker = oj.value("breaker", false);
      ld.breaker_op_time_min = detail::get_num(oj, "breaker_op_time_min", 0.5);
      ld.p = oj.at("p").get<std::vector<double>>();
      if (oj.contains("q")) ld.q = oj.at("q").get<std::vector<double>>();
      else ld.q.assign(ld.p.size(), 0.0);
      net.loads.push_back(std::move(ld));
    }
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("network file schema violation: ") + e.what());
  }
  net.build_indices();
  net.validate();
  return net;
}

}  // namespace gridrestore::net
