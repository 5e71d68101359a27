#include <cmath>
#include <vector>

#include <doctest.h>

#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

using namespace fpp;

// reference values frozen from an independent implementation (scipy 1.x)

TEST_CASE("normal cdf and quantile match the frozen oracle") {
  CHECK(normal_cdf(1.2345) == doctest::Approx(0.8914916766373298).epsilon(1e-10));
  CHECK(normal_cdf(-0.7) == doctest::Approx(0.24196365222307303).epsilon(1e-10));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-8));
  CHECK(normal_quantile(0.01) == doctest::Approx(-2.3263478740408408).epsilon(1e-8));
  for (double p : {0.001, 0.05, 0.31, 0.5, 0.77, 0.999})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
}

TEST_CASE("incomplete gamma and chi-square tails match the frozen oracle") {
  CHECK(gamma_p(2.5, 1.3) == doctest::Approx(0.23863473215498604).epsilon(1e-9));
  CHECK(gamma_q(0.7, 2.2) == doctest::Approx(0.061115600402502).epsilon(1e-9));
  CHECK(gamma_p(3.0, 1.0) + gamma_q(3.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chi2_sf(3.5, 2) == doctest::Approx(0.1737739434504451).epsilon(1e-9));
  CHECK(chi2_sf(12.7, 7) == doctest::Approx(0.07976405917700828).epsilon(1e-9));
}

TEST_CASE("kolmogorov tail matches the frozen oracle") {
  CHECK(kolmogorov_q(0.8) == doctest::Approx(0.5441424115741981).epsilon(1e-9));
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-9));
}

TEST_CASE("mean and sample variance") {
  std::vector<double> v{1, 2, 3, 4};
  CHECK(mean(v) == doctest::Approx(2.5));
  CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("one-sample KS accepts its own null and rejects a shifted one") {
  Stream rng(42);
  std::vector<double> s;
  for (int i = 0; i < 4000; ++i) s.push_back(rng.next());
  auto id = [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); };
  auto r = ks_test(s, id);
  CHECK(r.p_value > 0.01);
  auto shifted = [](double x) { return x < 0 ? 0.0 : (x > 1.2 ? 1.0 : x / 1.2); };
  CHECK(ks_test(s, shifted).p_value < 1e-6);
}

TEST_CASE("one-sample KS p-values are calibrated under the null") {
  // 400 meta-replicas at nominal 1%: expected 4 rejections, sd ~ 2
  int rejections = 0;
  auto id = [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); };
  for (int m = 0; m < 400; ++m) {
    Stream rng(1000 + static_cast<std::uint64_t>(m));
    std::vector<double> s;
    for (int i = 0; i < 200; ++i) s.push_back(rng.next());
    if (ks_test(s, id).p_value < 0.01) ++rejections;
  }
  CHECK(rejections <= 12);
}

TEST_CASE("two-sample KS distinguishes equal and unequal samples") {
  Stream a(7), b(8);
  std::vector<double> x, y, z;
  for (int i = 0; i < 3000; ++i) {
    x.push_back(a.next());
    y.push_back(b.next());
    z.push_back(0.5 * b.next());
  }
  CHECK(ks_test2(x, y).p_value > 0.01);
  CHECK(ks_test2(x, z).p_value < 1e-6);
}

TEST_CASE("chi-square geometric GOF accepts geometric data, rejects non-geometric") {
  Stream rng(11);
  std::vector<long long> geo;
  const double p = 0.3;
  for (int i = 0; i < 5000; ++i)
    geo.push_back(static_cast<long long>(std::floor(std::log(rng.next()) / std::log1p(-p))) + 1);
  double p_hat = 1.0 / mean([&] {
                   std::vector<double> v(geo.begin(), geo.end());
                   return v;
                 }());
  auto r = chi2_geometric_gof(geo, p_hat);
  CHECK(r.p_value > 0.01);

  std::vector<long long> flat;  // uniform on {1..10} is far from geometric
  for (int i = 0; i < 5000; ++i) flat.push_back(1 + static_cast<long long>(rng.next() * 10));
  double p2 = 1.0 / mean([&] {
                std::vector<double> v(flat.begin(), flat.end());
                return v;
              }());
  CHECK(chi2_geometric_gof(flat, p2).p_value < 1e-6);
}

TEST_CASE("lag-1 autocorrelation detects i.i.d. vs persistent series") {
  Stream rng(5);
  std::vector<double> iid, ar;
  double prev = 0;
  for (int i = 0; i < 20000; ++i) {
    iid.push_back(rng.next());
    prev = 0.8 * prev + normal_deviate(rng);
    ar.push_back(prev);
  }
  CHECK(std::fabs(lag1_autocorrelation(iid)) < 0.03);
  CHECK(lag1_autocorrelation(ar) > 0.7);
}

TEST_CASE("bootstrap SE of the mean matches the analytic rate") {
  Stream rng(9);
  std::vector<double> v;
  for (int i = 0; i < 2000; ++i) v.push_back(rng.next());
  Stream brng(10);
  double se = bootstrap_se(v, [](const std::vector<double>& s) { return mean(s); }, 400, brng);
  double analytic = std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
  CHECK(se == doctest::Approx(analytic).epsilon(0.15));
}
