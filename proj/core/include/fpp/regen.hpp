#pragma once
#include <optional>
#include <vector>

#include "fpp/field.hpp"
#include "fpp/fpp.hpp"
#include "fpp/graph.hpp"

namespace fpp {

// Parameters of the regeneration block construction. A block at level n spans
// levels [n, n+2M]. gamma is the canonical fast path from level n to level
// n+2M (minimum edge count, lexicographic tie-break), relative to block level
// 0. The block event A_n asks every edge of gamma, every intra edge at levels
// n and n+2M to be <= t_lo, and every remaining edge strictly between the
// block boundaries to be >= t_hi.
struct RegenParams {
  double t_lo = 0, t_hi = 0;
  int M = 1;

  // block structure, relative to a block at level 0
  std::vector<VertexRef> gamma;        // path level 0 -> level 2M
  std::vector<EdgeRef> fast_edges;     // E-hat: gamma edges + intra at 0 and 2M
  std::vector<EdgeRef> slow_edges;     // block edges \ E-hat
  VertexRef pivot{0, 1};               // v-hat: first gamma vertex at level M
  EdgeRef pivot_exit{};                // gamma edge leaving the pivot (forward)
  EdgeRef pivot_entry{};               // gamma edge entering the pivot (backward)
  bool special_margin = false;         // see choose_params_special
  double p_block = 0;                  // closed-form P(A_n)

  int span() const { return 2 * M; }  // levels covered: [n, n+2M]
};

// spec quantile rule: t_lo = F^{-1}(q), t_hi = F^{-1}(1-q), with quantiles
// landing on support endpoints moved into the adjacent support gap;
// M = floor(t_lo * L / (t_hi - t_lo)) + 1
RegenParams choose_params(const Distribution& dist, const PeriodCell& cell, double q = 0.25);
// maximize the closed-form block probability over a quantile grid
RegenParams auto_params(const Distribution& dist, const PeriodCell& cell);

// Stronger margin (t_hi - t_lo) M > t_lo L + (M_tau - m_tau): the block forces
// geodesics through the pivot exit/entry edge no matter what weight that edge
// itself carries. Requires bounded support. Used by the discrete coupling,
// whose special-edge values range over all atoms.
RegenParams choose_params_special(const Distribution& dist, const PeriodCell& cell,
                                  double q = 0.25);

// does A_n hold in this field realization?
bool detect_A(const PeriodCell& cell, const WeightField& f, const RegenParams& rp, long long n);

// exact P(A_n) under the product measure
double block_probability(const Distribution& dist, const RegenParams& rp);

// overrides forcing A_n to hold (weights at distribution-feasible values);
// used for constructed instances and conditional sampling
WeightField::Overrides force_block(const Distribution& dist, const RegenParams& rp, long long n);

// i.i.d. increment between consecutive renewal points: level gap S, passage
// time tau = T(v-hat_{rho_{k-1}}, v-hat_{rho_k}), canonical geodesic length
struct RegenIncrement {
  long long S = 0;
  double tau = 0;
  long long length = 0;
};

// Regeneration scan: candidate levels n_k = rho_I + delta + k(2M+1) whose
// block [n, n+2M] fits inside [lo_level, hi_level] (k may be negative);
// renewal points rho = n + M at each accepted block. Increment passage times
// are computed by windowed search between consecutive pivots; the window
// [rho_{k-1} - M, rho_k + M] is certified by the two bracketing blocks.
struct RegenDecomposition {
  RegenParams params;
  long long rho_I = 0, delta = 0;
  std::vector<long long> rho;              // increasing pivot levels
  std::vector<VertexRef> pivots;           // v-hat at each rho
  std::vector<RegenIncrement> increments;  // between consecutive rho
  double p_hat = 0;                        // empirical block frequency
  long long candidates_tested = 0;
};

RegenDecomposition decompose(const PeriodCell& cell, const WeightField& f, const RegenParams& rp,
                             long long lo_level, long long hi_level, long long delta = 0,
                             long long rho_I = 0);

// nu(n) = index of the first renewal point at or beyond n + M
std::optional<std::size_t> stopping_index(const RegenDecomposition& d, long long n);

// Splitting check: for a block at level n with A_n, every canonical geodesic
// between u (level <= n) and v (level >= n+2M) passes the pivot, and
// T(u,v) = T(u, pivot) + T(pivot, v).
struct SplitCheck {
  bool passes_pivot = false;
  bool additive = false;
  double lhs = 0, rhs = 0;
};

SplitCheck verify_splitting(const PeriodCell& cell, const WeightField& f, const RegenParams& rp,
                            long long n, VertexRef u, VertexRef v);

}  // namespace fpp
