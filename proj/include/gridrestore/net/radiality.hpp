#pragma once

#include <deque>
#include <sstream>
#include <vector>

#include "gridrestore/net/outage.hpp"

namespace gridrestore::net {

struct radiality_check {
  bool radial = false;
  std::string certificate;          // violating cycle or island, empty if radial
  std::vector<int> offending_nodes; // cycle members or island members
};

/// True iff the closed-line subgraph is a forest in which every component
/// carrying at least one closed line reaches a substation. Components without
/// a substation are stranded (a DG there would run islanded), which the
/// commodity-flow radiality rows exclude, so they fail here too.
inline radiality_check is_radial(const network& net, const off_outage_area& area,
                                 const configuration& cfg) {
  for (int l : area.switchable_lines())
    if (!cfg.closed.count(l))
      throw input_error("configuration misses a status for line '" + net.lines[l].id + "'");

  radiality_check out;
  const int n = static_cast<int>(net.nodes.size());
  std::vector<int> comp(n, -1);
  std::vector<int> parent_node(n, -1), parent_line(n, -1);
  std::vector<std::vector<int>> members;
  std::vector<bool> comp_has_sub;
  std::vector<int> comp_closed_lines;

  for (int start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int c = static_cast<int>(members.size());
    members.push_back({});
    comp_has_sub.push_back(false);
    comp_closed_lines.push_back(0);
    std::deque<int> bfs{start};
    comp[start] = c;
    while (!bfs.empty()) {
      const int u = bfs.front();
      bfs.pop_front();
      members[c].push_back(u);
      if (net.nodes[u].substation) comp_has_sub[c] = true;
      for (int l : net.lines_at[u]) {
        if (!cfg.line_closed(net, area, l)) continue;
        const int v = net.other_end(l, u);
        if (comp[v] < 0) {
          comp[v] = c;
          parent_node[v] = u;
          parent_line[v] = l;
          ++comp_closed_lines[c];
          bfs.push_back(v);
        } else if (parent_line[u] != l) {
          // closed line between two visited nodes: a cycle
          std::vector<int> path_u{u}, path_v{v};
          for (int w = u; w >= 0; w = parent_node[w]) path_u.push_back(w);
          for (int w = v; w >= 0; w = parent_node[w]) path_v.push_back(w);
          std::vector<bool> on_u(n, false);
          for (int w : path_u) on_u[w] = true;
          int meet = -1;
          for (int w : path_v)
            if (on_u[w]) {
              meet = w;
              break;
            }
          std::ostringstream cert;
          cert << "cycle: closing line '" << net.lines[l].id << "' joins nodes '"
               << net.nodes[u].id << "' and '" << net.nodes[v].id
               << "' already connected";
          out.radial = false;
          out.certificate = cert.str();
          for (int w = u; w != meet && w >= 0; w = parent_node[w]) out.offending_nodes.push_back(w);
          for (int w = v; w != meet && w >= 0; w = parent_node[w]) out.offending_nodes.push_back(w);
          if (meet >= 0) out.offending_nodes.push_back(meet);
          return out;
        }
      }
    }
  }

  for (size_t c = 0; c < members.size(); ++c) {
    if (comp_has_sub[c] || comp_closed_lines[c] == 0) continue;
    bool has_dg = false;
    for (int u : members[c])
      if (net.dg_at[u] >= 0) has_dg = true;
    std::ostringstream cert;
    cert << "island: " << members[c].size() << " nodes around '"
         << net.nodes[members[c].front()].id << "' form a closed component with no"
         << " substation path" << (has_dg ? " (hosts a DG)" : "");
    out.radial = false;
    out.certificate = cert.str();
    out.offending_nodes = members[c];
    return out;
  }

  out.radial = true;
  return out;
}

}  // namespace gridrestore::net
