#include "fpp/estimate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "fpp/parallel.hpp"
#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

namespace fpp {

namespace {

struct RawConstants {
  double mu, sigma2, alpha, sigma_N2, mu_S, mu_tau;
};

RawConstants compute_constants(const std::vector<RegenIncrement>& v) {
  double mS = 0, mT = 0, mN = 0;
  for (const auto& inc : v) {
    mS += static_cast<double>(inc.S);
    mT += inc.tau;
    mN += static_cast<double>(inc.length);
  }
  const double n = static_cast<double>(v.size());
  mS /= n;
  mT /= n;
  mN /= n;
  const double mu = mT / mS;
  const double alpha = mN / mS;
  // variance of the mu-centered (resp. alpha-centered) increment per level
  double vT = 0, vN = 0;
  for (const auto& inc : v) {
    double cT = inc.tau - mu * static_cast<double>(inc.S);
    double cN = static_cast<double>(inc.length) - alpha * static_cast<double>(inc.S);
    vT += cT * cT;
    vN += cN * cN;
  }
  vT /= (n - 1);
  vN /= (n - 1);
  return {mu, vT / mS, alpha, vN / mS, mS, mT};
}

}  // namespace

ConstantsEstimate estimate_constants(const std::vector<RegenIncrement>& increments,
                                     std::uint64_t bootstrap_seed, int resamples) {
  if (increments.size() < 30)
    throw std::invalid_argument("estimate_constants: need at least 30 increments");
  auto base = compute_constants(increments);
  ConstantsEstimate out;
  out.mu = base.mu;
  out.sigma2 = base.sigma2;
  out.alpha = base.alpha;
  out.sigma_N2 = base.sigma_N2;
  out.mu_S = base.mu_S;
  out.mu_tau = base.mu_tau;
  out.increments = increments.size();

  Stream st(bootstrap_seed);
  const std::size_t n = increments.size();
  std::vector<double> bmu, bs2, bal, bsN;
  std::vector<RegenIncrement> sample(n);
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < n; ++i)
      sample[i] = increments[static_cast<std::size_t>(st.next() * static_cast<double>(n))];
    auto c = compute_constants(sample);
    bmu.push_back(c.mu);
    bs2.push_back(c.sigma2);
    bal.push_back(c.alpha);
    bsN.push_back(c.sigma_N2);
  }
  out.se_mu = std::sqrt(sample_variance(bmu));
  out.se_sigma2 = std::sqrt(sample_variance(bs2));
  out.se_alpha = std::sqrt(sample_variance(bal));
  out.se_sigma_N2 = std::sqrt(sample_variance(bsN));
  return out;
}

InfiniteGeodesic build_gamma_star(const PeriodCell& cell, const WeightField& f,
                                  const RegenParams& rp, long long lo_level, long long hi_level) {
  auto d = decompose(cell, f, rp, lo_level, hi_level);
  if (d.rho.size() < 2)
    throw std::runtime_error("build_gamma_star: need at least two regeneration points");
  InfiniteGeodesic out;
  out.params = rp;
  out.rho = d.rho;
  for (std::size_t k = 1; k < d.rho.size(); ++k) {
    auto g = geodesic_in_window(cell, f, d.pivots[k - 1], d.pivots[k], d.rho[k - 1] - rp.M,
                                d.rho[k] + rp.M, true);
    // consecutive block geodesics share the pivot vertex
    std::size_t start = out.vertices.empty() ? 0 : 1;
    out.vertices.insert(out.vertices.end(), g.vertices.begin() + static_cast<long>(start),
                        g.vertices.end());
  }
  return out;
}

VisitFrequencies visit_frequencies(const InfiniteGeodesic& g, const PeriodCell& cell,
                                   const WeightField& f) {
  const auto& rho = g.rho;
  if (rho.size() < 2) throw std::invalid_argument("visit_frequencies: too few blocks");
  const long long lo = rho.front(), hi = rho.back();
  if (hi - lo < 100) throw std::invalid_argument("visit_frequencies: window spans < 100 levels");
  const std::size_t blocks = rho.size() - 1;

  // per-block tallies over levels [rho_k, rho_{k+1})
  std::vector<long long> span(blocks);
  std::vector<std::vector<long long>> vcount(blocks,
                                             std::vector<long long>(static_cast<std::size_t>(cell.K), 0));
  std::vector<double> wsum(blocks, 0.0);
  for (std::size_t k = 0; k < blocks; ++k) span[k] = rho[k + 1] - rho[k];

  auto block_of = [&](long long level) -> std::optional<std::size_t> {
    if (level < lo || level >= hi) return std::nullopt;
    auto it = std::upper_bound(rho.begin(), rho.end(), level);
    return static_cast<std::size_t>(it - rho.begin()) - 1;
  };

  for (const auto& v : g.vertices)
    if (auto b = block_of(v.level)) vcount[*b][static_cast<std::size_t>(v.index - 1)] += 1;
  for (std::size_t i = 0; i + 1 < g.vertices.size(); ++i) {
    // edge between consecutive path vertices; assigned to its (seam) level
    const auto &a = g.vertices[i], &b = g.vertices[i + 1];
    long long elevel = std::min(a.level, b.level);
    if (auto blk = block_of(elevel)) {
      EdgeRef e;
      if (a.level == b.level) {
        int x = std::min(a.index, b.index), y = std::max(a.index, b.index);
        auto it = std::lower_bound(cell.intra.begin(), cell.intra.end(), std::pair<int, int>{x, y});
        e = {elevel, EdgeRef::Kind::Intra, static_cast<int>(it - cell.intra.begin())};
      } else {
        auto [first, second] = a.level < b.level ? std::pair{a.index, b.index}
                                                 : std::pair{b.index, a.index};
        auto it = std::lower_bound(cell.inter.begin(), cell.inter.end(),
                                   std::pair<int, int>{first, second});
        e = {elevel, EdgeRef::Kind::Inter, static_cast<int>(it - cell.inter.begin())};
      }
      wsum[*blk] += f.weight(e);
    }
  }

  // ratio estimators over i.i.d. blocks, standard errors by block bootstrap
  auto ratios = [&](const std::vector<std::size_t>& idx) {
    double S = 0, W = 0;
    std::vector<double> V(static_cast<std::size_t>(cell.K), 0.0);
    long long levels = 0;
    for (auto k : idx) {
      levels += span[k];
      W += wsum[k];
      for (int i = 0; i < cell.K; ++i) V[static_cast<std::size_t>(i)] += static_cast<double>(vcount[k][static_cast<std::size_t>(i)]);
    }
    S = static_cast<double>(levels);
    for (auto& x : V) x /= S;
    return std::pair{V, W / S};
  };

  std::vector<std::size_t> all(blocks);
  for (std::size_t k = 0; k < blocks; ++k) all[k] = k;
  auto [vfreq, muw] = ratios(all);

  VisitFrequencies out;
  out.vertex_freq = vfreq;
  out.mu_hat = muw;
  out.alpha_hat = 0;
  for (double x : vfreq) out.alpha_hat += x;
  out.levels = hi - lo;

  Stream st(hash_combine(f.seed(), 0x76697369746672ULL));
  const int resamples = 200;
  std::vector<std::vector<double>> bv(static_cast<std::size_t>(cell.K));
  std::vector<double> ba, bm;
  std::vector<std::size_t> idx(blocks);
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t k = 0; k < blocks; ++k)
      idx[k] = static_cast<std::size_t>(st.next() * static_cast<double>(blocks));
    auto [V, W] = ratios(idx);
    double a = 0;
    for (double x : V) a += x;
    for (int i = 0; i < cell.K; ++i) bv[static_cast<std::size_t>(i)].push_back(V[static_cast<std::size_t>(i)]);
    ba.push_back(a);
    bm.push_back(W);
  }
  out.vertex_se.resize(static_cast<std::size_t>(cell.K));
  for (int i = 0; i < cell.K; ++i)
    out.vertex_se[static_cast<std::size_t>(i)] = std::sqrt(sample_variance(bv[static_cast<std::size_t>(i)]));
  out.alpha_se = std::sqrt(sample_variance(ba));
  out.mu_se = std::sqrt(sample_variance(bm));
  return out;
}

PointSamples sample_point(const PeriodCell& cell, const Distribution& dist, long long n,
                          int replicas, std::uint64_t seed, long long pad, int index) {
  PointSamples out;
  out.T.resize(static_cast<std::size_t>(replicas));
  out.N.resize(static_cast<std::size_t>(replicas));
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    WeightField f(dist, derive_seed(seed, r));
    Window w(cell, -pad, n + pad);
    VertexRef src{0, index}, dst{n, index};
    auto res = dijkstra(w, f, {src}, {dst});
    auto id = w.id(dst);
    if (!res.done[id]) throw std::runtime_error("sample_point: target unreachable");
    out.T[r] = res.T[id];
    out.N[r] = res.N[id];
  });
  return out;
}

MuVsKStudy mu_vs_K_study(int d, const std::vector<int>& Ks, const Distribution& dist, long long n,
                         int replicas, std::uint64_t seed, long long pad) {
  if (d < 2) throw std::invalid_argument("mu_vs_K_study: d >= 2 required");
  MuVsKStudy out;
  out.n = n;
  std::vector<PeriodCell> cells;
  for (int K : Ks) cells.push_back(build_tube(K, d));
  out.T.assign(Ks.size(), std::vector<double>(static_cast<std::size_t>(replicas), 0.0));
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    // one shared seed per replica: nested tubes see identical weights on
    // common edges, so T is pointwise non-increasing in K
    std::uint64_t s = derive_seed(seed, r);
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
      WeightField f(dist, s);
      Window w(cells[ki], -pad, n + pad);
      VertexRef src{0, 1}, dst{n, 1};
      auto res = dijkstra(w, f, {src}, {dst});
      auto id = w.id(dst);
      if (!res.done[id]) throw std::runtime_error("mu_vs_K_study: target unreachable");
      out.T[ki][r] = res.T[id];
    }
  });
  for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
    std::vector<double> per_level(out.T[ki]);
    for (auto& x : per_level) x /= static_cast<double>(n);
    double m = mean(per_level);
    double se = std::sqrt(sample_variance(per_level) / static_cast<double>(replicas));
    out.rows.push_back({Ks[ki], m, se, m - 1.96 * se, m + 1.96 * se});
  }
  return out;
}

std::vector<ContinuityRow> continuity_study(
    const std::vector<std::pair<std::string, Distribution>>& dists, const PeriodCell& cell,
    long long n, int replicas, std::uint64_t seed, long long pad) {
  std::vector<std::vector<double>> T(dists.size(),
                                     std::vector<double>(static_cast<std::size_t>(replicas), 0.0));
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    // same seed across distributions: the inverse-cdf coupling on shared U_e
    std::uint64_t s = derive_seed(seed, r);
    for (std::size_t di = 0; di < dists.size(); ++di) {
      WeightField f(dists[di].second, s);
      Window w(cell, -pad, n + pad);
      VertexRef src{0, 1}, dst{n, 1};
      auto res = dijkstra(w, f, {src}, {dst});
      auto id = w.id(dst);
      if (!res.done[id]) throw std::runtime_error("continuity_study: target unreachable");
      T[di][r] = res.T[id];
    }
  });
  std::vector<ContinuityRow> out;
  for (std::size_t di = 0; di < dists.size(); ++di) {
    std::vector<double> per_level(T[di]);
    for (auto& x : per_level) x /= static_cast<double>(n);
    out.push_back({dists[di].first, mean(per_level),
                   std::sqrt(sample_variance(per_level) / static_cast<double>(replicas))});
  }
  return out;
}

}  // namespace fpp
