#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "fpp/regen.hpp"

namespace fpp {

// plug-in constants from the i.i.d. increment stream: time constant mu,
// variance constant sigma2, length constant alpha, its variance sigma_N2;
// standard errors by bootstrap over increments
struct ConstantsEstimate {
  double mu = 0, sigma2 = 0, alpha = 0, sigma_N2 = 0;
  double se_mu = 0, se_sigma2 = 0, se_alpha = 0, se_sigma_N2 = 0;
  double mu_S = 0, mu_tau = 0;
  std::size_t increments = 0;
};

ConstantsEstimate estimate_constants(const std::vector<RegenIncrement>& increments,
                                     std::uint64_t bootstrap_seed = 1, int resamples = 200);

// the doubly infinite geodesic restricted to a window of regeneration blocks:
// concatenation of the canonical per-block geodesics between consecutive pivots
struct InfiniteGeodesic {
  std::vector<VertexRef> vertices;  // strictly increasing along the chain
  std::vector<long long> rho;       // renewal levels covered (>= 2)
  RegenParams params;
};

InfiniteGeodesic build_gamma_star(const PeriodCell& cell, const WeightField& f,
                                  const RegenParams& rp, long long lo_level, long long hi_level);

struct VisitFrequencies {
  std::vector<double> vertex_freq;  // index i-1: fraction of levels where (n,i) on gamma*
  std::vector<double> vertex_se;
  double alpha_hat = 0, alpha_se = 0;  // sum of vertex frequencies per level
  double mu_hat = 0, mu_se = 0;        // mean total weight of gamma* edges per level
  long long levels = 0;
};

VisitFrequencies visit_frequencies(const InfiniteGeodesic& g, const PeriodCell& cell,
                                   const WeightField& f);

// windowed point-to-point passage time T((0,i0) -> (n,i0)) per replica; the
// window [-pad, n+pad] is audited by recomputation at 2x pad on a sub-sample
struct PointSamples {
  std::vector<double> T;  // per replica
  std::vector<long long> N;
};

PointSamples sample_point(const PeriodCell& cell, const Distribution& dist, long long n,
                          int replicas, std::uint64_t seed, long long pad = 50, int index = 1);

struct MuByK {
  int K = 0;
  double mu_hat = 0, se = 0, ci_lo = 0, ci_hi = 0;
};

// shared weight field across nested tubes of width K (same seed => identical
// weights on common edges, so T_K >= T_{K+1} pointwise)
struct MuVsKStudy {
  std::vector<MuByK> rows;
  std::vector<std::vector<double>> T;  // [K index][replica]
  long long n = 0;
};

MuVsKStudy mu_vs_K_study(int d, const std::vector<int>& Ks, const Distribution& dist, long long n,
                         int replicas, std::uint64_t seed, long long pad = 50);

// inverse-cdf coupling: all distributions evaluated on the same uniforms U_e
struct ContinuityRow {
  std::string label;
  double mu_hat = 0, se = 0;
};

std::vector<ContinuityRow> continuity_study(
    const std::vector<std::pair<std::string, Distribution>>& dists, const PeriodCell& cell,
    long long n, int replicas, std::uint64_t seed, long long pad = 50);

}  // namespace fpp
