#include "fpp/limits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "fpp/field.hpp"
#include "fpp/fpp.hpp"
#include "fpp/parallel.hpp"
#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

namespace fpp {

namespace {

std::string with_level(const char* base, long long n) {
  std::ostringstream os;
  os << base << "_n" << n;
  return os.str();
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double pos = p * (static_cast<double>(v.size()) - 1);
  std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  double frac = pos - static_cast<double>(i);
  return v[i] * (1 - frac) + v[i + 1] * frac;
}

}  // namespace

LevelSamples sample_levels(const PeriodCell& cell, const Distribution& dist,
                           const std::vector<long long>& levels, int replicas,
                           std::uint64_t seed, long long pad, int index) {
  if (levels.empty()) throw std::invalid_argument("sample_levels: empty level grid");
  LevelSamples out;
  out.levels = levels;
  out.replicas = replicas;
  const long long n_max = *std::max_element(levels.begin(), levels.end());
  out.T.assign(levels.size(), std::vector<double>(static_cast<std::size_t>(replicas), 0.0));
  out.N.assign(levels.size(), std::vector<double>(static_cast<std::size_t>(replicas), 0.0));
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    WeightField f(dist, derive_seed(seed, r));
    Window w(cell, -pad, n_max + pad);
    auto res = dijkstra(w, f, {VertexRef{0, index}});
    for (std::size_t li = 0; li < levels.size(); ++li) {
      auto id = w.id({levels[li], index});
      if (!res.done[id]) throw std::runtime_error("sample_levels: level unreachable");
      out.T[li][r] = res.T[id];
      out.N[li][r] = static_cast<double>(res.N[id]);
    }
  });
  return out;
}

std::vector<Verdict> lln_check(const std::vector<long long>& levels,
                               const std::vector<std::vector<double>>& values, double mu,
                               double tol95) {
  std::vector<Verdict> out;
  std::vector<double> p95s;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    std::vector<double> dev;
    for (double x : values[li]) dev.push_back(std::fabs(x / static_cast<double>(levels[li]) - mu));
    double p95 = percentile(dev, 0.95);
    p95s.push_back(p95);
    // tolerance shrinks like 1/sqrt(n), anchored at the largest level
    double tol = tol95 * std::sqrt(static_cast<double>(levels.back()) /
                                   static_cast<double>(levels[li]));
    out.push_back({with_level("lln_dev95", levels[li]), p95, tol, p95 < tol});
  }
  int violations = 0;
  for (std::size_t li = 1; li < p95s.size(); ++li)
    if (p95s[li] > p95s[li - 1]) ++violations;
  out.push_back({"lln_dev95_monotone", static_cast<double>(violations), 0.5, violations == 0});
  return out;
}

std::vector<Verdict> clt_check(const std::vector<double>& values, long long n, double mu,
                               double sigma2, double max_distance) {
  if (!(sigma2 > 0)) throw std::invalid_argument("clt_check: degenerate sigma");
  std::vector<double> z;
  const double denom = std::sqrt(sigma2 * static_cast<double>(n));
  for (double x : values) z.push_back((x - mu * static_cast<double>(n)) / denom);
  auto ks = ks_test(z, [](double x) { return normal_cdf(x); });
  return {{"clt_ks_distance", ks.statistic, max_distance, ks.statistic < max_distance},
          {"clt_ks_p", ks.p_value, 0.01, ks.p_value > 0.01}};
}

std::vector<Verdict> clt_check_lattice(const std::vector<double>& values, long long n, double mu,
                                       double sigma2, std::uint64_t dither_seed,
                                       double max_distance) {
  if (values.empty()) throw std::invalid_argument("clt_check_lattice: empty sample");
  double base = *std::min_element(values.begin(), values.end());
  long long span = 0;
  for (double v : values) span = std::gcd(span, std::llround(v - base));
  if (span <= 0) span = 1;
  Stream st(dither_seed);
  std::vector<double> dithered(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    dithered[i] = values[i] + (st.next() - 0.5) * static_cast<double>(span);
  const double var_add = static_cast<double>(span * span) / 12.0;
  return clt_check(dithered, n, mu, sigma2 + var_add / static_cast<double>(n), max_distance);
}

std::vector<Verdict> donsker_check(const std::vector<long long>& levels,
                                   const std::vector<std::vector<double>>& values, long long n,
                                   double mu, double sigma2, std::uint64_t bootstrap_seed,
                                   double se_sigma2) {
  if (!(sigma2 > 0)) throw std::invalid_argument("donsker_check: degenerate sigma");
  // relative plug-in uncertainty: an error in sigma2 scales Var(path(t)) by
  // the same factor, contributing t * rel_se to the tolerance in quadrature
  const double rel_se = se_sigma2 / sigma2;
  const std::size_t R = values.at(0).size();
  const double denom = std::sqrt(sigma2 * static_cast<double>(n));
  // rescaled path values per level
  std::vector<std::vector<double>> path(levels.size(), std::vector<double>(R));
  std::vector<double> ts(levels.size());
  for (std::size_t li = 0; li < levels.size(); ++li) {
    ts[li] = static_cast<double>(levels[li]) / static_cast<double>(n);
    for (std::size_t r = 0; r < R; ++r)
      path[li][r] = (values[li][r] - mu * static_cast<double>(levels[li])) / denom;
  }

  Stream st(bootstrap_seed);
  auto boot_se = [&](const std::function<double(const std::vector<std::size_t>&)>& stat) {
    std::vector<double> vals;
    std::vector<std::size_t> idx(R);
    for (int b = 0; b < 200; ++b) {
      for (std::size_t i = 0; i < R; ++i)
        idx[i] = static_cast<std::size_t>(st.next() * static_cast<double>(R));
      vals.push_back(stat(idx));
    }
    return std::sqrt(sample_variance(vals));
  };

  std::vector<Verdict> out;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    double v = sample_variance(path[li]);
    double se = boot_se([&](const std::vector<std::size_t>& idx) {
      std::vector<double> s;
      s.reserve(R);
      for (auto i : idx) s.push_back(path[li][i]);
      return sample_variance(s);
    });
    double err = std::fabs(v - ts[li]);
    double tol = 3 * std::sqrt(se * se + ts[li] * rel_se * ts[li] * rel_se);
    out.push_back({with_level("donsker_var", levels[li]), err, tol, err <= tol});
  }

  // covariance of the pair closest to (0.3 n, 0.7 n)
  auto nearest = [&](double t) {
    std::size_t best = 0;
    for (std::size_t li = 1; li < ts.size(); ++li)
      if (std::fabs(ts[li] - t) < std::fabs(ts[best] - t)) best = li;
    return best;
  };
  std::size_t a = nearest(0.3), b = nearest(0.7);
  if (a != b) {
    auto cov_of = [&](const std::vector<double>& x, const std::vector<double>& y) {
      double mx = mean(x), my = mean(y), s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
      return s / static_cast<double>(x.size() - 1);
    };
    double c = cov_of(path[a], path[b]);
    double se = boot_se([&](const std::vector<std::size_t>& idx) {
      std::vector<double> x, y;
      x.reserve(R);
      y.reserve(R);
      for (auto i : idx) {
        x.push_back(path[a][i]);
        y.push_back(path[b][i]);
      }
      return cov_of(x, y);
    });
    double target = std::min(ts[a], ts[b]);
    double err = std::fabs(c - target);
    double tol = 3 * std::sqrt(se * se + target * rel_se * target * rel_se);
    out.push_back({"donsker_cov", err, tol, err <= tol});
  }
  return out;
}

std::vector<Verdict> drift_check(const std::vector<long long>& levels,
                                 const std::vector<std::vector<double>>& values, double mu,
                                 double se_mu, double sigma2, double se_sigma2,
                                 std::uint64_t bootstrap_seed) {
  const std::size_t R = values.at(0).size();
  std::vector<Verdict> out;

  // adjacent (n, n+1) pairs: per-replica increments should average mu
  for (std::size_t li = 0; li + 1 < levels.size(); ++li) {
    if (levels[li + 1] != levels[li] + 1 || levels[li] < 500) continue;
    std::vector<double> diff(R);
    for (std::size_t r = 0; r < R; ++r) diff[r] = values[li + 1][r] - values[li][r];
    double m = mean(diff);
    double se = std::sqrt(sample_variance(diff) / static_cast<double>(R) + se_mu * se_mu);
    double err = std::fabs(m - mu);
    out.push_back({with_level("drift_increment", levels[li]), err, 3 * se, err <= 3 * se});
  }

  // flattening between the two largest "anchor" levels (the first of each
  // adjacent pair, or bare levels)
  std::vector<std::size_t> anchors;
  for (std::size_t li = 0; li < levels.size(); ++li)
    if (li == 0 || levels[li] != levels[li - 1] + 1) anchors.push_back(li);
  if (anchors.size() >= 2) {
    std::size_t a = anchors[anchors.size() - 2], b = anchors.back();
    const double dn = static_cast<double>(levels[b] - levels[a]);
    std::vector<double> diff(R);
    for (std::size_t r = 0; r < R; ++r) diff[r] = values[b][r] - values[a][r];
    double mdrift = mean(diff) - mu * dn;
    double se_m = std::sqrt(sample_variance(diff) / static_cast<double>(R) +
                            dn * dn * se_mu * se_mu);
    out.push_back(
        {"drift_mean_flat", std::fabs(mdrift), 3 * se_m, std::fabs(mdrift) <= 3 * se_m});

    double vdrift = sample_variance(values[b]) - sample_variance(values[a]) - sigma2 * dn;
    Stream st(bootstrap_seed);
    std::vector<double> boots;
    std::vector<std::size_t> idx(R);
    for (int bb = 0; bb < 200; ++bb) {
      for (std::size_t i = 0; i < R; ++i)
        idx[i] = static_cast<std::size_t>(st.next() * static_cast<double>(R));
      std::vector<double> xa, xb;
      xa.reserve(R);
      xb.reserve(R);
      for (auto i : idx) {
        xa.push_back(values[a][i]);
        xb.push_back(values[b][i]);
      }
      boots.push_back(sample_variance(xb) - sample_variance(xa));
    }
    double se_v = std::sqrt(sample_variance(boots) + dn * dn * se_sigma2 * se_sigma2);
    out.push_back(
        {"drift_var_flat", std::fabs(vdrift), 3 * se_v, std::fabs(vdrift) <= 3 * se_v});
  }
  return out;
}

std::vector<Verdict> lil_check(const std::vector<long long>& levels,
                               const std::vector<std::vector<double>>& values, double mu,
                               double sigma2, double eps, double min_fraction) {
  if (!(sigma2 > 0)) throw std::invalid_argument("lil_check: degenerate sigma");
  const std::size_t R = values.at(0).size();
  std::size_t inside = 0;
  for (std::size_t r = 0; r < R; ++r) {
    double hi = -1e300, lo = 1e300;
    for (std::size_t li = 0; li < levels.size(); ++li) {
      double n = static_cast<double>(levels[li]);
      double norm = std::sqrt(2.0 * sigma2 * n * std::log(std::max(std::log(n), 1.01)));
      double z = (values[li][r] - mu * n) / norm;
      hi = std::max(hi, z);
      lo = std::min(lo, z);
    }
    if (hi <= 1.0 + eps && lo >= -1.0 - eps) ++inside;
  }
  double frac = static_cast<double>(inside) / static_cast<double>(R);
  return {{"lil_envelope_fraction", frac, min_fraction, frac >= min_fraction}};
}

}  // namespace fpp
