#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "fpp/dist.hpp"
#include "fpp/field.hpp"
#include "fpp/fpp.hpp"
#include "fpp/regen.hpp"

namespace fpp {

// --- delay random walks -----------------------------------------------------

// Continuous case: distribution with a density floor c on [a,b]. The step size
// delta divides T_delay exactly (T_delay = m0 * delta); each step either draws
// identical values from the residual distribution or perturbs by +-delta. The
// difference D_n = T_delay + sum(tau'_k - tau_k) lives on delta * Z; its
// multiplier is tracked in exact integer arithmetic.
struct ContinuousDelayWalk {
  double T_delay = 0, delta = 0;
  long long m0 = 0;
  std::vector<long long> multipliers;  // after each step; starts implicitly at m0
  std::vector<double> tau, tau_prime;
  long long N_c = -1;  // first step index with multiplier 0; 0 if m0 == 0
  bool completed = false;
};

ContinuousDelayWalk couple_delayed_continuous(const Distribution& dist, double T_delay,
                                              std::uint64_t seed,
                                              long long max_steps = 50'000'000,
                                              long long post_steps = 0);

// Discrete case: certificate (n_j, n'_j) over the atoms with
// sum n_j = sum n'_j and sum n_j t_j = sum n'_j t_j + T_delay, reduced so at
// most one of n_j, n'_j is positive per atom.
struct DiscreteCertificate {
  std::vector<long long> n, n_prime;  // aligned with dist.atoms()
};

bool certificate_valid(const Distribution& dist, const DiscreteCertificate& cert, double T_delay,
                       double tol = 1e-9);
// realize T_delay by exchanging counts between two atoms, when possible
std::optional<DiscreteCertificate> derive_certificate(const Distribution& dist, double T_delay);

struct DiscreteDelayWalk {
  DiscreteCertificate cert;
  std::vector<std::vector<long long>> Z;  // deficit vector after each step
  std::vector<double> tau, tau_prime;
  long long N_c = -1;
  bool completed = false;
};

DiscreteDelayWalk couple_delayed_discrete(const Distribution& dist,
                                          const DiscreteCertificate& cert, std::uint64_t seed,
                                          long long max_steps = 50'000'000,
                                          long long post_steps = 0);

// --- infection couplings ----------------------------------------------------

// EventDriven: block occurrences and walk steps are simulated from their exact
// laws without materializing travel times (the genuine coupling time law at
// full scale). Explicit: both weight fields are built and post-coupling
// travel-time equality is verified level by level; with force_blocks the
// early lattice blocks are conditioned to be regenerative (exact conditional
// sampling of the product field), which keeps the verification window finite.
enum class CouplingMode { EventDriven, Explicit };

struct CouplingOptions {
  CouplingMode mode = CouplingMode::Explicit;
  bool force_blocks = false;
  long long verify_levels = 50;
  long long max_walk_steps = 50'000'000;
  long long max_blocks = 2'000'000;
  int marginal_sample = 100'000;  // edges per field for the KS marginal check
};

struct CouplingReport {
  bool completed = false;
  long long N_c_level = -1;  // fields and infections coincide beyond this level
  double N_c_time = -1;      // T(I, pivot at N_c_level); Explicit mode only
  long long verified_levels = 0;
  bool equality_ok = false;  // Explicit mode: post-coupling equality verified
  double marginal_ks_p = 0;  // min KS p-value of the two field marginals
  double initial_delay = 0;
  long long walk_steps = 0;
  long long blocks_consumed = 0;  // lattice blocks until the walk completed
  std::vector<long long> walk_trajectory;  // continuous: delta multipliers;
                                           // discrete: total remaining deficit
};

CouplingReport couple_infections_continuous(const PeriodCell& cell, const Distribution& dist,
                                            const std::vector<VertexRef>& I,
                                            const std::vector<VertexRef>& I_prime,
                                            std::uint64_t seed,
                                            const CouplingOptions& opts = {});

CouplingReport couple_infections_discrete(const PeriodCell& cell, const Distribution& dist,
                                          const std::vector<VertexRef>& I,
                                          const std::vector<VertexRef>& I_prime,
                                          std::uint64_t seed, const CouplingOptions& opts = {});

// --- branching counterexample ----------------------------------------------

// Infection front on the infinite binary tree with exponential passage times:
// the frontier size F_t is a pure birth process, F_t e^{-lambda t} -> W with
// E[W] = F_0 = 3 and Var(W) > 0, so no zero-one law holds there.
struct TreeDemoResult {
  double lambda_hat = 0;
  double mean_W = 0, se_W = 0;
  double var_W = 0, var_W_ci_lo = 0, var_W_ci_hi = 0;
  int replicas = 0;
  std::vector<std::pair<double, double>> log_mean_front;  // (t, log mean F_t)
};

TreeDemoResult tree_branching_demo(double rate, double t_max, int replicas, std::uint64_t seed,
                                   long long population_guard = 1'000'000);

}  // namespace fpp
