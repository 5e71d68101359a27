#pragma once
#include <cstdint>
#include <vector>

#include "fpp/dist.hpp"
#include "fpp/graph.hpp"
#include "fpp/io.hpp"

namespace fpp {

// per-replica samples of T(I, v_{n,i}) and geodesic length N(I, v_{n,i}) at a
// grid of levels, from one windowed sweep per replica; seeds derived per index
struct LevelSamples {
  std::vector<long long> levels;
  std::vector<std::vector<double>> T;      // [level][replica]
  std::vector<std::vector<double>> N;      // [level][replica] (lengths as doubles)
  int replicas = 0;
};

LevelSamples sample_levels(const PeriodCell& cell, const Distribution& dist,
                           const std::vector<long long>& levels, int replicas,
                           std::uint64_t seed, long long pad = 50, int index = 1);

// law of large numbers: per-level max and 95th-percentile deviation |X/n - mu|
std::vector<Verdict> lln_check(const std::vector<long long>& levels,
                               const std::vector<std::vector<double>>& values, double mu,
                               double tol95 = 0.02);

// central limit theorem: KS of (X - mu n) / (sigma sqrt(n)) against N(0,1)
std::vector<Verdict> clt_check(const std::vector<double>& values, long long n, double mu,
                               double sigma2, double max_distance = 0.02);

// CLT check for lattice-valued data (e.g. geodesic edge counts, which live on
// a fixed-parity integer lattice): the empirical CDF of raw lattice data has
// jumps of order span/(sigma sqrt(n)) that miscalibrate the KS test, so the
// samples are dithered by uniform(-span/2, span/2) noise (span detected as the
// gcd of the offsets) and the null variance adjusted by span^2/12. The
// dithered test is exactly calibrated for the lattice-discretized null.
std::vector<Verdict> clt_check_lattice(const std::vector<double>& values, long long n, double mu,
                                       double sigma2, std::uint64_t dither_seed,
                                       double max_distance = 0.02);

// Brownian marginals of the rescaled trajectory: Var(path(t)) ~ t and
// Cov(path(s), path(t)) ~ min(s,t); levels must contain floor(n t) entries.
// se_sigma2 (plug-in uncertainty of sigma2) widens the variance/covariance
// tolerances: an error in sigma2 rescales every marginal by the same factor.
std::vector<Verdict> donsker_check(const std::vector<long long>& levels,
                                   const std::vector<std::vector<double>>& values, long long n,
                                   double mu, double sigma2, std::uint64_t bootstrap_seed = 2,
                                   double se_sigma2 = 0);

// mean and variance drift: E[X_n] - mu n and Var(X_n) - sigma2 n flatten
// between the two largest grid levels; consecutive-level mean increments match
// mu. Levels must come in adjacent pairs (n, n+1) for the increment check.
std::vector<Verdict> drift_check(const std::vector<long long>& levels,
                                 const std::vector<std::vector<double>>& values, double mu,
                                 double se_mu, double sigma2, double se_sigma2,
                                 std::uint64_t bootstrap_seed = 3);

// law of the iterated logarithm envelope: running extremes of
// (X_n - mu n)/(sigma sqrt(2 n log log n)) over the level grid stay within
// [-1-eps, 1+eps] for most replicas; a qualitative sanity envelope
std::vector<Verdict> lil_check(const std::vector<long long>& levels,
                               const std::vector<std::vector<double>>& values, double mu,
                               double sigma2, double eps = 0.5, double min_fraction = 0.9);

}  // namespace fpp
