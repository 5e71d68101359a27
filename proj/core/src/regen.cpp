#include "fpp/regen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "fpp/parallel.hpp"

namespace fpp {

namespace {

int find_intra(const PeriodCell& cell, int i, int j) {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(cell.intra.begin(), cell.intra.end(), std::pair<int, int>{i, j});
  if (it == cell.intra.end() || *it != std::pair<int, int>{i, j})
    throw std::logic_error("regen: intra edge not found");
  return static_cast<int>(it - cell.intra.begin());
}

int find_inter(const PeriodCell& cell, int i, int j) {
  auto it = std::lower_bound(cell.inter.begin(), cell.inter.end(), std::pair<int, int>{i, j});
  if (it == cell.inter.end() || *it != std::pair<int, int>{i, j})
    throw std::logic_error("regen: inter edge not found");
  return static_cast<int>(it - cell.inter.begin());
}

EdgeRef edge_between(const PeriodCell& cell, VertexRef a, VertexRef b) {
  if (a.level == b.level)
    return {a.level, EdgeRef::Kind::Intra, find_intra(cell, a.index, b.index)};
  if (b.level == a.level + 1)
    return {a.level, EdgeRef::Kind::Inter, find_inter(cell, a.index, b.index)};
  if (a.level == b.level + 1)
    return {b.level, EdgeRef::Kind::Inter, find_inter(cell, b.index, a.index)};
  throw std::logic_error("regen: vertices not adjacent by level");
}

// P(tau >= x), including any atom at x
double prob_ge(const Distribution& dist, double x) {
  double p = 1.0 - dist.cdf(x);
  for (auto& [v, pa] : dist.atoms())
    if (v == x) p += pa;
  return p;
}

void finalize_block(RegenParams& rp, const Distribution& dist, const PeriodCell& cell) {
  const int span = rp.span();
  rp.gamma = shortest_cell_path(cell, 0, span);

  std::set<std::uint64_t> fast;
  rp.fast_edges.clear();
  rp.slow_edges.clear();
  auto add_fast = [&](EdgeRef e) {
    if (fast.insert(e.encode()).second) rp.fast_edges.push_back(e);
  };
  for (std::size_t k = 0; k + 1 < rp.gamma.size(); ++k)
    add_fast(edge_between(cell, rp.gamma[k], rp.gamma[k + 1]));
  for (long long lvl : {0LL, static_cast<long long>(span)})
    for (int t = 0; t < cell.L(); ++t) add_fast({lvl, EdgeRef::Kind::Intra, t});

  for (long long lvl = 0; lvl <= span; ++lvl) {
    for (int t = 0; t < cell.L(); ++t) {
      EdgeRef e{lvl, EdgeRef::Kind::Intra, t};
      if (!fast.count(e.encode())) rp.slow_edges.push_back(e);
    }
    if (lvl < span)
      for (int t = 0; t < static_cast<int>(cell.inter.size()); ++t) {
        EdgeRef e{lvl, EdgeRef::Kind::Inter, t};
        if (!fast.count(e.encode())) rp.slow_edges.push_back(e);
      }
  }

  std::size_t p = 0;
  while (p < rp.gamma.size() && rp.gamma[p].level != rp.M) ++p;
  if (p == 0 || p + 1 >= rp.gamma.size()) throw std::logic_error("regen: degenerate fast path");
  rp.pivot = rp.gamma[p];
  rp.pivot_exit = edge_between(cell, rp.gamma[p], rp.gamma[p + 1]);
  rp.pivot_entry = edge_between(cell, rp.gamma[p - 1], rp.gamma[p]);

  rp.p_block = block_probability(dist, rp);
}

}  // namespace

double block_probability(const Distribution& dist, const RegenParams& rp) {
  double p_fast = dist.cdf(rp.t_lo);
  double p_slow = prob_ge(dist, rp.t_hi);
  return std::pow(p_fast, static_cast<double>(rp.fast_edges.size())) *
         std::pow(p_slow, static_cast<double>(rp.slow_edges.size()));
}

namespace {

std::pair<double, double> pick_thresholds(const Distribution& dist, double q) {
  if (!(q > 0 && q < 0.5)) throw std::invalid_argument("choose_params: q in (0, 0.5) required");
  auto [m_tau, M_tau] = dist.support_bounds();
  for (int attempt = 0;; ++attempt) {
    if (attempt > 60) throw std::runtime_error("choose_params: could not separate thresholds");
    double t_lo = dist.inverse_cdf(q);
    double t_hi = dist.inverse_cdf(1.0 - q);
    if (dist.is_discrete()) {
      // quantiles landing on support endpoints move into the adjacent support
      // gap: midpoint normally, a 1/3-2/3 split if both land in the same gap
      const auto& atoms = dist.atoms();
      const std::size_t k = atoms.size();
      bool low_on_end = (t_lo == m_tau);
      bool high_on_end = (t_hi == M_tau);
      if (low_on_end && high_on_end && k == 2) {
        double gap = atoms[1].first - atoms[0].first;
        t_lo = atoms[0].first + gap / 3.0;
        t_hi = atoms[0].first + 2.0 * gap / 3.0;
      } else {
        if (low_on_end) t_lo = 0.5 * (atoms[0].first + atoms[1].first);
        if (high_on_end) t_hi = 0.5 * (atoms[k - 2].first + atoms[k - 1].first);
      }
    }
    if (t_lo < t_hi) return {t_lo, t_hi};
    q *= 0.5;
  }
}

}  // namespace

RegenParams choose_params(const Distribution& dist, const PeriodCell& cell, double q) {
  auto [t_lo, t_hi] = pick_thresholds(dist, q);
  RegenParams rp;
  rp.t_lo = t_lo;
  rp.t_hi = t_hi;
  double ratio = t_lo * static_cast<double>(cell.L()) / (t_hi - t_lo);
  rp.M = static_cast<int>(std::floor(ratio)) + 1;
  finalize_block(rp, dist, cell);
  if (!(rp.p_block > 0)) throw std::runtime_error("choose_params: block event has probability 0");
  return rp;
}

RegenParams choose_params_special(const Distribution& dist, const PeriodCell& cell, double q) {
  auto [m_tau, M_tau] = dist.support_bounds();
  if (!std::isfinite(M_tau))
    throw std::invalid_argument("choose_params_special: bounded support required");
  auto [t_lo, t_hi] = pick_thresholds(dist, q);
  RegenParams rp;
  rp.t_lo = t_lo;
  rp.t_hi = t_hi;
  rp.special_margin = true;
  double ratio =
      (t_lo * static_cast<double>(cell.L()) + (M_tau - m_tau)) / (t_hi - t_lo);
  rp.M = static_cast<int>(std::floor(ratio)) + 1;
  finalize_block(rp, dist, cell);
  if (!(rp.p_block > 0))
    throw std::runtime_error("choose_params_special: block event has probability 0");
  return rp;
}

RegenParams auto_params(const Distribution& dist, const PeriodCell& cell) {
  RegenParams best;
  bool have = false;
  for (int i = 1; i <= 24; ++i) {
    double q = 0.02 * i;
    if (!(q < 0.5)) break;
    RegenParams rp;
    try {
      rp = choose_params(dist, cell, q);
    } catch (const std::exception&) {
      continue;
    }
    if (!have || rp.p_block > best.p_block) {
      best = rp;
      have = true;
    }
  }
  if (!have) return choose_params(dist, cell, 0.25);
  return best;
}

bool detect_A(const PeriodCell& cell, const WeightField& f, const RegenParams& rp, long long n) {
  (void)cell;
  for (const auto& e : rp.fast_edges)
    if (!(f.weight({e.level + n, e.kind, e.idx}) <= rp.t_lo)) return false;
  for (const auto& e : rp.slow_edges)
    if (!(f.weight({e.level + n, e.kind, e.idx}) >= rp.t_hi)) return false;
  return true;
}

WeightField::Overrides force_block(const Distribution& dist, const RegenParams& rp, long long n) {
  double u_fast = 0.5 * dist.cdf(rp.t_lo);
  double u_slow = 1.0 - 0.5 * prob_ge(dist, rp.t_hi);
  double x_fast = dist.inverse_cdf(u_fast);
  double x_slow = dist.inverse_cdf(u_slow);
  if (!(x_fast <= rp.t_lo && x_slow >= rp.t_hi))
    throw std::logic_error("force_block: could not realize block weights");
  WeightField::Overrides ov;
  for (const auto& e : rp.fast_edges) ov[EdgeRef{e.level + n, e.kind, e.idx}.encode()] = x_fast;
  for (const auto& e : rp.slow_edges) ov[EdgeRef{e.level + n, e.kind, e.idx}.encode()] = x_slow;
  return ov;
}

RegenDecomposition decompose(const PeriodCell& cell, const WeightField& f, const RegenParams& rp,
                             long long lo_level, long long hi_level, long long delta,
                             long long rho_I) {
  if (delta < 0 || delta > 2 * rp.M)
    throw std::invalid_argument("decompose: delta outside [0, 2M]");
  RegenDecomposition out;
  out.params = rp;
  out.delta = delta;
  out.rho_I = rho_I;
  const long long step = 2LL * rp.M + 1;
  const long long base = rho_I + delta;
  // first candidate >= lo_level on the lattice base + k * step (k in Z)
  auto floordiv = [](long long a, long long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  long long k0 = floordiv(lo_level - base + step - 1, step);
  for (long long n = base + k0 * step; n + rp.span() <= hi_level; n += step) {
    ++out.candidates_tested;
    if (detect_A(cell, f, rp, n)) {
      out.rho.push_back(n + rp.M);
      out.pivots.push_back({n + rp.M, rp.pivot.index});
    }
  }
  out.p_hat = out.candidates_tested
                  ? static_cast<double>(out.rho.size()) / static_cast<double>(out.candidates_tested)
                  : 0.0;
  if (out.rho.empty())
    throw std::runtime_error("decompose: no regeneration found up to level " +
                             std::to_string(hi_level) + " (tested " +
                             std::to_string(out.candidates_tested) + " candidates)");
  // gap travel times are independent per bracket; computed in parallel and
  // stored by index so the result is identical for any thread count
  out.increments.resize(out.rho.size() - 1);
  parallel_for(out.rho.size() - 1, [&](std::size_t i) {
    std::size_t k = i + 1;
    Window w(cell, out.rho[k - 1] - rp.M, out.rho[k] + rp.M);
    auto r = dijkstra(w, f, {out.pivots[k - 1]}, {out.pivots[k]});
    auto id = w.id(out.pivots[k]);
    if (!r.done[id]) throw std::runtime_error("decompose: pivot unreachable inside bracket");
    out.increments[i] = {out.rho[k] - out.rho[k - 1], r.T[id], r.N[id]};
  });
  return out;
}

std::optional<std::size_t> stopping_index(const RegenDecomposition& d, long long n) {
  auto it = std::lower_bound(d.rho.begin(), d.rho.end(), n + d.params.M);
  if (it == d.rho.end()) return std::nullopt;
  return static_cast<std::size_t>(it - d.rho.begin());
}

SplitCheck verify_splitting(const PeriodCell& cell, const WeightField& f, const RegenParams& rp,
                            long long n, VertexRef u, VertexRef v) {
  if (!(u.level <= n && v.level >= n + rp.span()))
    throw std::invalid_argument("verify_splitting: endpoints must straddle the block");
  SplitCheck out;
  VertexRef pivot{n + rp.M, rp.pivot.index};
  auto g = geodesic(cell, f, u, v);
  out.passes_pivot = std::find(g.vertices.begin(), g.vertices.end(), pivot) != g.vertices.end();
  auto left = travel_time(cell, f, u, pivot);
  auto right = travel_time(cell, f, pivot, v);
  out.lhs = g.T;
  out.rhs = left.T + right.T;
  out.additive = std::fabs(out.lhs - out.rhs) <= 1e-9 * (1.0 + std::fabs(out.lhs));
  return out;
}

}  // namespace fpp
