#include "fpp/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fpp {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

// connectivity of the infinite chain, checked on a generous finite window
bool infinite_graph_connected(const PeriodCell& c) {
  const int W = 4 * c.K + 4;  // levels -W..W
  const int levels = 2 * W + 1;
  UnionFind uf(static_cast<std::size_t>(levels) * static_cast<std::size_t>(c.K));
  auto vid = [&](int lvl, int i) { return (lvl + W) * c.K + (i - 1); };
  for (int lvl = -W; lvl <= W; ++lvl) {
    for (auto [i, j] : c.intra) uf.unite(vid(lvl, i), vid(lvl, j));
    if (lvl < W)
      for (auto [i, j] : c.inter) uf.unite(vid(lvl, i), vid(lvl + 1, j));
  }
  // all vertices of levels -1..1 must share one component
  int root = uf.find(vid(0, 1));
  for (int lvl = -1; lvl <= 1; ++lvl)
    for (int i = 1; i <= c.K; ++i)
      if (uf.find(vid(lvl, i)) != root) return false;
  return true;
}

}  // namespace

PeriodCell make_cell(int K, std::vector<std::pair<int, int>> intra,
                     std::vector<std::pair<int, int>> inter) {
  if (K < 1) throw std::invalid_argument("cell: K >= 1 required");
  if (inter.empty()) throw std::invalid_argument("cell: J must be nonempty");
  for (auto& [i, j] : intra) {
    if (i < 1 || i > K || j < 1 || j > K) throw std::invalid_argument("cell: intra index out of range");
    if (i == j) throw std::invalid_argument("cell: self-loop in intra edges");
    if (i > j) std::swap(i, j);
  }
  for (auto& [i, j] : inter)
    if (i < 1 || i > K || j < 1 || j > K) throw std::invalid_argument("cell: J index out of range");
  std::sort(intra.begin(), intra.end());
  std::sort(inter.begin(), inter.end());
  if (std::adjacent_find(intra.begin(), intra.end()) != intra.end())
    throw std::invalid_argument("cell: duplicate intra edge");
  if (std::adjacent_find(inter.begin(), inter.end()) != inter.end())
    throw std::invalid_argument("cell: duplicate J entry");
  PeriodCell c{K, std::move(intra), std::move(inter)};
  if (!infinite_graph_connected(c))
    throw std::invalid_argument("cell: infinite graph is disconnected");
  return c;
}

namespace {

// cross-section coordinates {0..K-1}^{d-1} <-> 1-based index, row-major
int coord_to_index(const std::vector<int>& coord, int K) {
  int idx = 0;
  for (int x : coord) idx = idx * K + x;
  return idx + 1;
}

std::vector<std::vector<int>> all_coords(int K, int dims) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(dims), 0);
  while (true) {
    out.push_back(cur);
    int p = dims - 1;
    while (p >= 0 && ++cur[static_cast<std::size_t>(p)] == K) {
      cur[static_cast<std::size_t>(p)] = 0;
      --p;
    }
    if (p < 0) break;
  }
  return out;
}

PeriodCell build_cross_section(int K, int d, bool wrap) {
  const int dims = d - 1;
  if (dims == 0 || K == 1) {
    return make_cell(1, {}, {{1, 1}});
  }
  auto coords = all_coords(K, dims);
  std::vector<std::pair<int, int>> intra;
  for (const auto& c : coords) {
    int a = coord_to_index(c, K);
    for (int t = 0; t < dims; ++t) {
      auto nb = c;
      if (c[static_cast<std::size_t>(t)] + 1 < K) {
        nb[static_cast<std::size_t>(t)] = c[static_cast<std::size_t>(t)] + 1;
        intra.emplace_back(a, coord_to_index(nb, K));
      } else if (wrap) {  // K >= 3 guaranteed by caller, so no duplicates
        nb[static_cast<std::size_t>(t)] = 0;
        intra.emplace_back(a, coord_to_index(nb, K));
      }
    }
  }
  std::vector<std::pair<int, int>> inter;
  const int n = static_cast<int>(coords.size());
  for (int i = 1; i <= n; ++i) inter.emplace_back(i, i);
  return make_cell(n, std::move(intra), std::move(inter));
}

}  // namespace

PeriodCell build_tube(int K, int d) {
  if (K < 1 || d < 1) throw std::invalid_argument("tube: K >= 1, d >= 1 required");
  return build_cross_section(K, d, false);
}

PeriodCell build_cylinder(int K, int d) {
  if (K < 3) throw std::invalid_argument("cylinder: K >= 3 required");
  if (d < 2) throw std::invalid_argument("cylinder: d >= 2 required");
  return build_cross_section(K, d, true);
}

PeriodCell cell_from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  int K = j.at("K").get<int>();
  std::vector<std::pair<int, int>> intra, inter;
  for (auto& e : j.at("intra_edges")) intra.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  for (auto& e : j.at("J")) inter.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return make_cell(K, std::move(intra), std::move(inter));
}

PeriodCell cell_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cell file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return cell_from_json(ss.str());
}

Window::Window(const PeriodCell& cell, long long lo, long long hi) : cell_(&cell), lo_(lo), hi_(hi) {
  if (hi < lo) throw std::invalid_argument("window: hi < lo");
  n_ = static_cast<std::size_t>(hi - lo + 1) * static_cast<std::size_t>(cell.K);
  adj_.resize(static_cast<std::size_t>(cell.K));
  for (int t = 0; t < static_cast<int>(cell.intra.size()); ++t) {
    auto [i, j] = cell.intra[static_cast<std::size_t>(t)];
    adj_[static_cast<std::size_t>(i - 1)].push_back({j, 0, 0, EdgeRef::Kind::Intra, t});
    adj_[static_cast<std::size_t>(j - 1)].push_back({i, 0, 0, EdgeRef::Kind::Intra, t});
  }
  for (int t = 0; t < static_cast<int>(cell.inter.size()); ++t) {
    auto [i, j] = cell.inter[static_cast<std::size_t>(t)];
    adj_[static_cast<std::size_t>(i - 1)].push_back({j, +1, 0, EdgeRef::Kind::Inter, t});
    adj_[static_cast<std::size_t>(j - 1)].push_back({i, -1, -1, EdgeRef::Kind::Inter, t});
  }
}

std::vector<VertexRef> shortest_cell_path(const PeriodCell& cell, long long n, int span) {
  if (span < 1) throw std::invalid_argument("shortest_cell_path: span >= 1 required");
  Window w(cell, n, n + span);
  const std::size_t N = w.size();
  const int INF = -1;
  // BFS distances to the target level set
  std::vector<int> dist(N, INF);
  std::deque<std::size_t> queue;
  for (int i = 1; i <= cell.K; ++i) {
    auto id = w.id({n + span, i});
    dist[id] = 0;
    queue.push_back(id);
  }
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    w.for_each_incident(w.vertex(cur), [&](VertexRef nb, EdgeRef) {
      auto nid = w.id(nb);
      if (dist[nid] == INF) {
        dist[nid] = dist[cur] + 1;
        queue.push_back(nid);
      }
    });
  }
  // lexicographically smallest among minimum-length paths: greedy walk
  int best = INF;
  int start_index = 0;
  for (int i = 1; i <= cell.K; ++i) {
    int d = dist[w.id({n, i})];
    if (d == INF) continue;
    if (best == INF || d < best || (d == best && i < start_index)) {
      best = d;
      start_index = i;
    }
  }
  if (best == INF)
    throw std::invalid_argument("shortest_cell_path: target level unreachable within block");
  std::vector<VertexRef> path{{n, start_index}};
  while (dist[w.id(path.back())] > 0) {
    VertexRef cur = path.back();
    VertexRef next{};
    bool found = false;
    w.for_each_incident(cur, [&](VertexRef nb, EdgeRef) {
      if (dist[w.id(nb)] == dist[w.id(cur)] - 1 && (!found || nb < next)) {
        next = nb;
        found = true;
      }
    });
    path.push_back(next);
  }
  return path;
}

int disjoint_path_count(const PeriodCell& cell, int span, int i0, int i1) {
  if (span < 1) throw std::invalid_argument("disjoint_path_count: span >= 1");
  if (i0 < 1 || i0 > cell.K || i1 < 1 || i1 > cell.K)
    throw std::invalid_argument("disjoint_path_count: endpoint index out of range");
  const long long lo = -2LL * span, hi = 3LL * span;  // guards on both sides
  Window w(cell, lo, hi);
  const std::size_t N = w.size();
  // residual capacities on directed arcs; unit undirected capacity
  struct Arc {
    std::size_t to;
    int cap;
    std::size_t rev;
  };
  std::vector<std::vector<Arc>> g(N);
  auto add_edge = [&](std::size_t a, std::size_t b) {
    g[a].push_back({b, 1, g[b].size()});
    g[b].push_back({a, 1, g[a].size() - 1});
  };
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (long long lvl = lo; lvl <= hi; ++lvl) {
    for (int i = 1; i <= cell.K; ++i) {
      VertexRef v{lvl, i};
      w.for_each_incident(v, [&](VertexRef nb, EdgeRef) {
        auto a = w.id(v), b = w.id(nb);
        if (a > b) std::swap(a, b);
        if (seen.insert({a, b}).second) add_edge(a, b);
      });
    }
  }
  const std::size_t s = w.id({0, i0}), t = w.id({span, i1});
  if (s == t) throw std::invalid_argument("disjoint_path_count: identical endpoints");
  int flow = 0;
  while (true) {  // Edmonds-Karp
    std::vector<std::pair<std::size_t, std::size_t>> prev(N, {SIZE_MAX, SIZE_MAX});
    std::deque<std::size_t> queue{s};
    prev[s] = {s, SIZE_MAX};
    while (!queue.empty() && prev[t].first == SIZE_MAX) {
      auto cur = queue.front();
      queue.pop_front();
      for (std::size_t k = 0; k < g[cur].size(); ++k) {
        const auto& arc = g[cur][k];
        if (arc.cap > 0 && prev[arc.to].first == SIZE_MAX) {
          prev[arc.to] = {cur, k};
          queue.push_back(arc.to);
        }
      }
    }
    if (prev[t].first == SIZE_MAX) break;
    for (std::size_t v = t; v != s;) {
      auto [u, k] = prev[v];
      g[u][k].cap -= 1;
      g[g[u][k].to][g[u][k].rev].cap += 1;
      v = u;
    }
    ++flow;
  }
  return flow;
}

}  // namespace fpp
