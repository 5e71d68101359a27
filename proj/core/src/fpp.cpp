#include "fpp/fpp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "fpp/regen.hpp"

namespace fpp {

namespace {

void validate_vertices(const PeriodCell& cell, const std::vector<VertexRef>& vs,
                       const char* what) {
  if (vs.empty()) throw std::invalid_argument(std::string(what) + ": empty vertex set");
  for (auto& v : vs)
    if (v.index < 1 || v.index > cell.K)
      throw std::invalid_argument(std::string(what) + ": vertex index out of range");
}

std::string cell_key(const PeriodCell& c) {
  std::ostringstream os;
  os << c.K << ";";
  for (auto [i, j] : c.intra) os << i << "-" << j << ",";
  os << ";";
  for (auto [i, j] : c.inter) os << i << ">" << j << ",";
  return os.str();
}

const RegenParams& cached_params(const Distribution& dist, const PeriodCell& cell, double q) {
  static std::map<std::string, RegenParams> cache;
  static std::mutex mu;
  std::string key = cell_key(cell) + "|" + dist.describe() + "|" + std::to_string(q);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, q > 0 ? choose_params(dist, cell, q) : auto_params(dist, cell)).first;
  return it->second;
}

long long scan_budget(const RegenParams& rp, long long requested) {
  if (requested > 0) return requested;
  double p = std::max(rp.p_block, 1e-12);
  auto b = static_cast<long long>(200.0 / p) * (2 * rp.M + 1);
  return std::clamp<long long>(b, 10'000, 20'000'000);
}

std::optional<long long> scan_block_right(const PeriodCell& cell, const WeightField& f,
                                          const RegenParams& rp, long long from, long long budget) {
  for (long long n = from; n <= from + budget; ++n)
    if (detect_A(cell, f, rp, n)) return n;
  return std::nullopt;
}

std::optional<long long> scan_block_left(const PeriodCell& cell, const WeightField& f,
                                         const RegenParams& rp, long long from, long long budget) {
  for (long long n = from; n >= from - budget; --n)
    if (detect_A(cell, f, rp, n)) return n;
  return std::nullopt;
}

struct BestTarget {
  double T = 0;
  long long N = 0;
  bool found = false;
};

BestTarget best_target(const Window& w, const DijkstraResult& r, const std::vector<VertexRef>& to) {
  BestTarget b;
  for (auto& v : to) {
    auto id = w.id(v);
    if (!r.done[id]) continue;
    if (!b.found || r.T[id] < b.T || (r.T[id] == b.T && r.N[id] < b.N))
      b = {r.T[id], r.N[id], true};
  }
  return b;
}

}  // namespace

DijkstraResult dijkstra(const Window& w, const WeightField& f,
                        const std::vector<VertexRef>& sources,
                        const std::vector<VertexRef>& targets, double stop_beyond) {
  const std::size_t n = w.size();
  DijkstraResult r;
  r.T.assign(n, std::numeric_limits<double>::infinity());
  r.N.assign(n, std::numeric_limits<long long>::max());
  r.parent.assign(n, 0);
  r.done.assign(n, 0);

  struct Item {
    double T;
    long long N;
    std::size_t id;
  };
  auto worse = [](const Item& a, const Item& b) {
    if (a.T != b.T) return a.T > b.T;
    return a.N > b.N;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(worse)> pq(worse);

  for (auto& s : sources) {
    if (!w.contains(s)) throw std::invalid_argument("dijkstra: source outside window");
    auto id = w.id(s);
    if (r.T[id] == 0.0 && r.N[id] == 0) continue;
    r.T[id] = 0.0;
    r.N[id] = 0;
    pq.push({0.0, 0, id});
  }
  std::vector<std::uint8_t> is_target;
  std::size_t targets_left = 0;
  if (!targets.empty()) {
    is_target.assign(n, 0);
    for (auto& t : targets) {
      if (!w.contains(t)) throw std::invalid_argument("dijkstra: target outside window");
      auto id = w.id(t);
      if (!is_target[id]) {
        is_target[id] = 1;
        ++targets_left;
      }
    }
  }

  while (!pq.empty()) {
    auto [T, N, id] = pq.top();
    pq.pop();
    if (r.done[id]) continue;
    if (T > stop_beyond) break;
    r.done[id] = 1;
    if (targets_left && is_target[id] && --targets_left == 0) break;
    VertexRef v = w.vertex(id);
    w.for_each_incident(v, [&](VertexRef nb, EdgeRef e) {
      auto nid = w.id(nb);
      if (r.done[nid]) return;
      double nT = T + f.weight(e);
      long long nN = N + 1;
      if (nT < r.T[nid] || (nT == r.T[nid] && nN < r.N[nid])) {
        r.T[nid] = nT;
        r.N[nid] = nN;
        r.parent[nid] = static_cast<std::uint32_t>(id + 1);
        pq.push({nT, nN, nid});
      }
    });
  }
  return r;
}

TravelTime travel_time(const PeriodCell& cell, const WeightField& f,
                       const std::vector<VertexRef>& from, const std::vector<VertexRef>& to,
                       const CertifyOptions& opts) {
  validate_vertices(cell, from, "travel_time/from");
  validate_vertices(cell, to, "travel_time/to");

  long long qlo = from[0].level, qhi = from[0].level;
  for (auto& v : from) {
    qlo = std::min(qlo, v.level);
    qhi = std::max(qhi, v.level);
  }
  for (auto& v : to) {
    qlo = std::min(qlo, v.level);
    qhi = std::max(qhi, v.level);
  }

  // overlapping sets: zero passage time
  {
    auto a = from, b = to;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<VertexRef> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    if (!common.empty()) return {0.0, 0, qlo, qhi, true, Certificate::Overlap};
  }

  const double m_tau = f.dist().support_bounds().first;

  if (m_tau > 0) {
    // any path leaving [qlo-g, qhi+g] pays >= 2(g+1) m_tau in crossings alone
    for (long long g = 4;; g *= 2) {
      Window w(cell, qlo - g, qhi + g);
      auto r = dijkstra(w, f, from, to);
      auto b = best_target(w, r, to);
      if (b.found && 2.0 * static_cast<double>(g + 1) * m_tau > b.T)
        return {b.T, b.N, w.lo(), w.hi(), true, Certificate::GrowthBound};
      if (g >= opts.max_growth_levels) {
        if (!b.found) throw std::runtime_error("travel_time: targets unreachable at window cap");
        return {b.T, b.N, w.lo(), w.hi(), false, Certificate::None};
      }
    }
  }

  // m_tau == 0: bracket the query between two regeneration blocks
  const RegenParams& rp = cached_params(f.dist(), cell, opts.quantile_hint);
  const long long budget = scan_budget(rp, opts.max_scan_levels);
  auto right = scan_block_right(cell, f, rp, qhi, budget);
  auto left = scan_block_left(cell, f, rp, qlo - rp.span(), budget);
  if (right && left) {
    Window w(cell, *left, *right + rp.span());
    auto r = dijkstra(w, f, from, to);
    auto b = best_target(w, r, to);
    if (!b.found) throw std::runtime_error("travel_time: targets unreachable inside bracket");
    return {b.T, b.N, w.lo(), w.hi(), true, Certificate::RegenBracket};
  }
  // no bracket within budget; report the best over a generous window, uncertified
  long long g = std::max<long long>(1024, 4 * (qhi - qlo + 1));
  Window w(cell, qlo - g, qhi + g);
  auto r = dijkstra(w, f, from, to);
  auto b = best_target(w, r, to);
  if (!b.found) throw std::runtime_error("travel_time: targets unreachable in fallback window");
  return {b.T, b.N, w.lo(), w.hi(), false, Certificate::None};
}

Geodesic geodesic(const PeriodCell& cell, const WeightField& f, VertexRef u, VertexRef v,
                  const CertifyOptions& opts) {
  auto tt = travel_time(cell, f, {u}, {v}, opts);
  return geodesic_in_window(cell, f, u, v, tt.window_lo, tt.window_hi, tt.certified);
}

Geodesic geodesic_in_window(const PeriodCell& cell, const WeightField& f, VertexRef u,
                            VertexRef v, long long window_lo, long long window_hi,
                            bool certified) {
  Window w(cell, window_lo, window_hi);
  // distances to v from everywhere in the window
  auto bwd = dijkstra(w, f, {v});
  auto uid = w.id(u);
  if (!bwd.done[uid]) throw std::runtime_error("geodesic: endpoint unreachable");
  const double total_T = bwd.T[uid];
  const long long total_N = bwd.N[uid];
  const double tol = 1e-9 * (1.0 + std::fabs(total_T));

  // greedy walk u -> v, keeping (T, N) optimality, lexicographically smallest
  Geodesic g;
  g.T = total_T;
  g.N = total_N;
  g.window_lo = window_lo;
  g.window_hi = window_hi;
  g.certified = certified;
  g.vertices.push_back(u);
  double acc = 0;
  long long acc_n = 0;
  while (!(g.vertices.back() == v)) {
    VertexRef cur = g.vertices.back();
    bool found = false;
    VertexRef best{};
    double best_w = 0;
    w.for_each_incident(cur, [&](VertexRef nb, EdgeRef e) {
      auto nid = w.id(nb);
      if (!bwd.done[nid]) return;
      double wt = f.weight(e);
      if (acc + wt + bwd.T[nid] > total_T + tol) return;
      if (acc_n + 1 + bwd.N[nid] != total_N) return;
      if (!found || nb < best) {
        best = nb;
        best_w = wt;
        found = true;
      }
    });
    if (!found) throw std::runtime_error("geodesic: reconstruction failed");
    acc += best_w;
    ++acc_n;
    g.vertices.push_back(best);
  }
  return g;
}

InfectedSet infected_set(const PeriodCell& cell, const WeightField& f,
                         const std::vector<VertexRef>& seeds, double t,
                         const CertifyOptions& opts) {
  validate_vertices(cell, seeds, "infected_set/seeds");
  if (!(t >= 0)) throw std::invalid_argument("infected_set: t >= 0 required");
  long long lo = seeds[0].level, hi = seeds[0].level;
  for (auto& v : seeds) {
    lo = std::min(lo, v.level);
    hi = std::max(hi, v.level);
  }

  auto collect = [&](const Window& w, const DijkstraResult& r, InfectedSet& out) {
    for (std::size_t id = 0; id < w.size(); ++id)
      if (r.done[id] && r.T[id] <= t) out.vertices.push_back(w.vertex(id));
    std::sort(out.vertices.begin(), out.vertices.end());
  };

  const double m_tau = f.dist().support_bounds().first;
  if (m_tau > 0) {
    long long g = static_cast<long long>(t / m_tau) + 1;
    Window w(cell, lo - g, hi + g);
    auto r = dijkstra(w, f, seeds, {}, t);
    InfectedSet out{{}, w.lo(), w.hi(), true};
    collect(w, r, out);
    return out;
  }

  const RegenParams& rp = cached_params(f.dist(), cell, opts.quantile_hint);
  const long long budget = scan_budget(rp, opts.max_scan_levels);
  long long right_from = hi, left_from = lo - rp.span();
  for (int round = 0; round < 64; ++round) {
    auto right = scan_block_right(cell, f, rp, right_from, budget);
    auto left = scan_block_left(cell, f, rp, left_from, budget);
    if (!right || !left) break;
    Window w(cell, *left, *right + rp.span());
    auto r = dijkstra(w, f, seeds, {}, t);
    VertexRef pivot_r{*right + rp.M, rp.pivot.index};
    VertexRef pivot_l{*left + rp.M, rp.pivot.index};
    auto rid = w.id(pivot_r), lid = w.id(pivot_l);
    bool r_blocked = !(r.done[rid] && r.T[rid] <= t);
    bool l_blocked = !(r.done[lid] && r.T[lid] <= t);
    if (r_blocked && l_blocked) {
      InfectedSet out{{}, w.lo(), w.hi(), true};
      collect(w, r, out);
      return out;
    }
    if (!r_blocked) right_from = *right + rp.span() + 1;
    if (!l_blocked) left_from = *left - 1;
  }
  // uncertified fallback
  long long g = std::max<long long>(1024, 4 * (hi - lo + 1));
  Window w(cell, lo - g, hi + g);
  auto r = dijkstra(w, f, seeds, {}, t);
  InfectedSet out{{}, w.lo(), w.hi(), false};
  collect(w, r, out);
  return out;
}

double brute_force_travel_time(const PeriodCell& cell, const WeightField& f, VertexRef u,
                               VertexRef v, long long window_lo, long long window_hi,
                               long long max_steps) {
  Window w(cell, window_lo, window_hi);
  if (!w.contains(u) || !w.contains(v))
    throw std::invalid_argument("brute_force_travel_time: endpoint outside window");
  std::vector<std::uint8_t> vis(w.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  long long steps = 0;
  const auto vid = w.id(v);

  auto dfs = [&](auto&& self, std::size_t id, double acc) -> void {
    if (id == vid) {
      best = std::min(best, acc);
      return;
    }
    vis[id] = 1;
    w.for_each_incident(w.vertex(id), [&](VertexRef nb, EdgeRef e) {
      auto nid = w.id(nb);
      if (vis[nid]) return;
      if (++steps > max_steps)
        throw std::runtime_error("brute_force_travel_time: step guard exceeded");
      double nacc = acc + f.weight(e);
      if (nacc >= best) return;  // weights are nonnegative
      self(self, nid, nacc);
    });
    vis[id] = 0;
  };
  dfs(dfs, w.id(u), 0.0);
  if (std::isinf(best)) throw std::runtime_error("brute_force_travel_time: unreachable");
  return best;
}

}  // namespace fpp
