#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "fpp/rng.hpp"

namespace fpp {

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // unbiased (n-1)

double normal_cdf(double z);
double normal_quantile(double p);  // inverse of normal_cdf

// regularized incomplete gamma functions, P(a,x) + Q(a,x) = 1
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chi2_sf(double x, int df);  // upper tail of chi-square

// Kolmogorov distribution tail Q_KS(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)
double kolmogorov_q(double lambda);

struct KsResult {
  double statistic;  // sup |F_n - F|
  double p_value;    // asymptotic with Stephens' small-sample correction
};

// one-sample KS against a cdf; samples need not be sorted
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
// two-sample KS
KsResult ks_test2(std::vector<double> a, std::vector<double> b);

struct Chi2Result {
  double statistic;
  int df;
  double p_value;
};

// GOF of nonnegative-integer counts vs geometric on {1,2,...} with success
// probability p (P(X=k) = p(1-p)^{k-1}); p estimated from data => df = bins-2.
// Tail bins pooled to expected count >= 5.
Chi2Result chi2_geometric_gof(const std::vector<long long>& values, double p_hat);

double lag1_autocorrelation(const std::vector<double>& v);

// bootstrap standard error of a statistic of an i.i.d. sample
double bootstrap_se(const std::vector<double>& v,
                    const std::function<double(const std::vector<double>&)>& stat,
                    int resamples, Stream& rng);

// standard normal deviate (Box-Muller on two stream values)
double normal_deviate(Stream& rng);

}  // namespace fpp
