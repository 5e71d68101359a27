#include "fpp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpp {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs >= 2 samples");
  double m = mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("normal_quantile: p in (0,1)");
  // bisection is plenty here; only used for thresholds
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// series for P(a,x), x < a+1
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a,x), x >= a+1 (modified Lentz)
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0 || x < 0) throw std::invalid_argument("gamma_p domain");
  if (x == 0) return 0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (a <= 0 || x < 0) throw std::invalid_argument("gamma_q domain");
  if (x == 0) return 1;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_sf(double x, int df) {
  if (df <= 0) throw std::invalid_argument("chi2_sf df");
  if (x <= 0) return 1;
  return gamma_q(0.5 * df, 0.5 * x);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0) return 1;
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  return {d, kolmogorov_q(lam)};
}

KsResult ks_test2(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_test2: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  double ne = na * nb / (na + nb);
  double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  return {d, kolmogorov_q(lam)};
}

Chi2Result chi2_geometric_gof(const std::vector<long long>& values, double p_hat) {
  if (values.size() < 20) throw std::invalid_argument("chi2_geometric_gof: too few samples");
  if (!(p_hat > 0 && p_hat < 1)) throw std::invalid_argument("chi2_geometric_gof: p_hat in (0,1)");
  const double n = static_cast<double>(values.size());
  // choose the last unpooled bin so that the pooled tail expectation is >= 5
  long long kmax = 1;
  while (n * std::pow(1.0 - p_hat, static_cast<double>(kmax)) >= 5.0 && kmax < 10000) ++kmax;
  // bins: {1}, {2}, ..., {kmax-1}, {>= kmax}; require at least 3 bins
  kmax = std::max<long long>(kmax, 3);
  std::vector<double> observed(static_cast<std::size_t>(kmax), 0.0);
  for (long long v : values) {
    if (v < 1) throw std::invalid_argument("chi2_geometric_gof: values must be >= 1");
    std::size_t bin = static_cast<std::size_t>(std::min(v, kmax) - 1);
    observed[bin] += 1.0;
  }
  double stat = 0;
  for (std::size_t b = 0; b < observed.size(); ++b) {
    double expd;
    if (b + 1 < observed.size()) {
      expd = n * p_hat * std::pow(1.0 - p_hat, static_cast<double>(b));
    } else {
      expd = n * std::pow(1.0 - p_hat, static_cast<double>(b));  // pooled tail
    }
    if (expd < 1e-12) continue;
    stat += (observed[b] - expd) * (observed[b] - expd) / expd;
  }
  int df = static_cast<int>(observed.size()) - 2;  // p estimated from data
  return {stat, df, chi2_sf(stat, df)};
}

double lag1_autocorrelation(const std::vector<double>& v) {
  if (v.size() < 3) throw std::invalid_argument("lag1_autocorrelation: too few samples");
  double m = mean(v), num = 0, den = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    den += (v[i] - m) * (v[i] - m);
    if (i + 1 < v.size()) num += (v[i] - m) * (v[i + 1] - m);
  }
  return den > 0 ? num / den : 0.0;
}

double bootstrap_se(const std::vector<double>& v,
                    const std::function<double(const std::vector<double>&)>& stat,
                    int resamples, Stream& rng) {
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  std::vector<double> resample(v.size());
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < v.size(); ++i)
      resample[i] = v[static_cast<std::size_t>(rng.next() * static_cast<double>(v.size()))];
    stats[static_cast<std::size_t>(r)] = stat(resample);
  }
  return std::sqrt(sample_variance(stats));
}

double normal_deviate(Stream& rng) {
  double u1 = rng.next(), u2 = rng.next();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace fpp
