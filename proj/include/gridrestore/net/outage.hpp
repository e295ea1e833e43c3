#pragma once

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridrestore/net/network.hpp"

namespace gridrestore::net {

struct fault_scenario {
  std::vector<std::string> faulted_elements;    // line or substation ids
  std::vector<std::string> isolation_openings;  // line or switch ids
  int window_start = 0;
  int window_count = -1;  // -1: whole grid

  static fault_scenario from_json(const nlohmann::json& j) {
    fault_scenario f;
    try {
      if (detail::get_num(j, "schema_version", 1) != 1)
        throw input_error("scenario file: unsupported schema_version (need 1)");
      if (j.contains("faulted_elements"))
        f.faulted_elements = j.at("faulted_elements").get<std::vector<std::string>>();
      if (j.contains("isolation_openings"))
        f.isolation_openings = j.at("isolation_openings").get<std::vector<std::string>>();
      if (j.contains("restorative_period")) {
        const auto& rp = j.at("restorative_period");
        f.window_start = static_cast<int>(detail::get_num(rp, "first_step", 0));
        f.window_count = static_cast<int>(detail::get_num(rp, "steps", -1));
      }
    } catch (const nlohmann::json::exception& e) {
      throw input_error(std::string("scenario file schema violation: ") + e.what());
    }
    return f;
  }
  static fault_scenario load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw input_error("scenario file '" + path + "': " + e.what());
    }
    return from_json(j);
  }
};

/// De-energized region after fault isolation, with the switch-set partition
/// and the healthy anchor node of every available tie.
struct off_outage_area {
  std::vector<int> area_nodes;   // N*, sorted node indices
  std::vector<int> area_lines;   // W*, sorted line indices (in-scope)
  std::vector<int> ava_ties;     // available tie lines (subset of area_lines)
  std::vector<int> int_ties;     // internal tie lines
  std::vector<int> sectionalizers;  // switchable non-tie in-scope lines
  std::vector<int> unswitched;   // in-scope lines without switches
  std::map<int, int> anchor_of;  // ava tie line -> healthy endpoint node
  std::set<int> dead_lines;      // faulted + isolation-opened lines
  std::vector<bool> healthy;     // node -> energized pre-restoration
  int window_start = 0;
  int window_count = 0;

  bool in_area(int node) const {
    return std::binary_search(area_nodes.begin(), area_nodes.end(), node);
  }
  bool in_scope(int line) const {
    return std::binary_search(area_lines.begin(), area_lines.end(), line);
  }
  std::vector<int> switchable_lines() const {
    std::vector<int> out;
    for (int l : area_lines)
      if (!std::binary_search(unswitched.begin(), unswitched.end(), l)) out.push_back(l);
    return out;
  }
  bool empty() const { return area_nodes.empty(); }
};

/// One binary status per switchable in-scope line (the master's complicating
/// variables). Lines absent from the map keep their base status.
struct configuration {
  std::map<int, bool> closed;  // line index -> energized

  bool line_closed(const network& net, const off_outage_area& area, int l) const {
    if (area.dead_lines.count(l)) return false;
    auto it = closed.find(l);
    if (it != closed.end()) return it->second;
    return net.base_closed(l);
  }
};

inline configuration base_configuration(const network& net, const off_outage_area& area) {
  configuration cfg;
  for (int l : area.switchable_lines()) cfg.closed[l] = net.base_closed(l);
  return cfg;
}

/// Nodes unreachable from every substation once the isolation openings are
/// applied, plus the line scope and tie classification.
inline off_outage_area compute_off_outage(const network& net, const fault_scenario& fault) {
  std::set<int> faulted_lines, faulted_subs;
  for (const auto& el : fault.faulted_elements) {
    if (auto it = net.line_index.find(el); it != net.line_index.end()) {
      faulted_lines.insert(it->second);
    } else if (auto nt = net.node_index.find(el);
               nt != net.node_index.end() && net.nodes[nt->second].substation) {
      faulted_subs.insert(nt->second);
    } else {
      throw input_error("fault references unknown element '" + el + "'");
    }
  }
  std::set<int> opened;
  for (const auto& el : fault.isolation_openings) {
    if (auto it = net.line_index.find(el); it != net.line_index.end()) {
      opened.insert(it->second);
    } else if (auto st = net.switch_index.find(el); st != net.switch_index.end()) {
      bool found = false;
      for (size_t l = 0; l < net.lines.size(); ++l)
        if (net.lines[l].switch_idx == st->second) {
          opened.insert(static_cast<int>(l));
          found = true;
        }
      if (!found) throw input_error("isolation switch '" + el + "' sits on no line");
    } else {
      throw input_error("fault references unknown element '" + el + "'");
    }
  }

  std::set<int> dead = faulted_lines;
  for (int l : opened) dead.insert(l);
  for (size_t l = 0; l < net.lines.size(); ++l)
    if (faulted_subs.count(net.lines[l].from) || faulted_subs.count(net.lines[l].to))
      dead.insert(static_cast<int>(l));

  // reachability from healthy substations over closed lines
  std::vector<bool> reach(net.nodes.size(), false);
  std::deque<int> bfs;
  for (size_t i = 0; i < net.nodes.size(); ++i)
    if (net.nodes[i].substation && !faulted_subs.count(static_cast<int>(i))) {
      reach[i] = true;
      bfs.push_back(static_cast<int>(i));
    }
  while (!bfs.empty()) {
    const int n = bfs.front();
    bfs.pop_front();
    for (int l : net.lines_at[n]) {
      if (dead.count(l) || !net.base_closed(l)) continue;
      const int m = net.other_end(l, n);
      if (!reach[m]) {
        reach[m] = true;
        bfs.push_back(m);
      }
    }
  }
  for (int l : faulted_lines) {
    if (reach[net.lines[l].from] || reach[net.lines[l].to])
      throw input_error("isolation openings leave faulted line '" + net.lines[l].id +
                        "' connected to a substation");
  }

  off_outage_area area;
  area.healthy = reach;
  area.dead_lines = dead;
  area.window_start = fault.window_start;
  area.window_count = fault.window_count < 0 ? net.grid.count - fault.window_start
                                             : fault.window_count;
  if (area.window_start < 0 || area.window_count < 0 ||
      area.window_start + area.window_count > net.grid.count)
    throw input_error("restorative period exceeds the network time grid");

  // N*: unreachable non-substation nodes that still have a live connection
  // (nodes walled in by the isolation belt cannot be restored at all).
  std::set<int> nstar;
  for (size_t i = 0; i < net.nodes.size(); ++i) {
    if (reach[i] || net.nodes[i].substation || faulted_subs.count(static_cast<int>(i)))
      continue;
    bool has_live_line = false;
    for (int l : net.lines_at[i])
      if (!dead.count(l)) has_live_line = true;
    if (has_live_line) nstar.insert(static_cast<int>(i));
  }
  area.area_nodes.assign(nstar.begin(), nstar.end());

  std::set<int> wstar;
  for (size_t li = 0; li < net.lines.size(); ++li) {
    const int l = static_cast<int>(li);
    if (dead.count(l)) continue;
    const auto& ln = net.lines[l];
    const bool f_in = nstar.count(ln.from), t_in = nstar.count(ln.to);
    if (f_in && t_in) {
      wstar.insert(l);
      if (ln.tie) area.int_ties.push_back(l);
      else if (net.switchable(l)) area.sectionalizers.push_back(l);
      else area.unswitched.push_back(l);
    } else if (ln.tie && (f_in || t_in)) {
      const int outside = f_in ? ln.to : ln.from;
      if (reach[outside]) {  // bridges to a healthy feeder
        wstar.insert(l);
        area.ava_ties.push_back(l);
        area.anchor_of[l] = outside;
      }
    }
  }
  area.area_lines.assign(wstar.begin(), wstar.end());
  std::sort(area.ava_ties.begin(), area.ava_ties.end());
  std::sort(area.int_ties.begin(), area.int_ties.end());
  std::sort(area.sectionalizers.begin(), area.sectionalizers.end());
  std::sort(area.unswitched.begin(), area.unswitched.end());
  return area;
}

}  // namespace gridrestore::net
