#include <stdexcept>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <doctest.h>

#include "fpp/coupling.hpp"
#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

using namespace fpp;

TEST_CASE("continuous delay walk: zero delay is immediate") {
  auto w = couple_delayed_continuous(Distribution::uniform(0, 1), 0.0, 1, 1000, 5);
  CHECK(w.completed);
  CHECK(w.N_c == 0);
  for (std::size_t k = 0; k < w.tau.size(); ++k) CHECK(w.tau[k] == w.tau_prime[k]);
}

TEST_CASE("continuous delay walk: step size pin") {
  // [a,b] = [0,1], T = 0.75: m0 = ceil(2*0.75/1) = 2, delta = 0.375
  auto w = couple_delayed_continuous(Distribution::uniform(0, 1), 0.75, 2, 100000);
  CHECK(w.m0 == 2);
  CHECK(w.delta == doctest::Approx(0.375));
}

TEST_CASE("continuous delay walk: 1e4 runs satisfy the exact identity") {
  auto dist = Distribution::uniform(0, 1);
  const double T = 0.5;
  // the multiplier walk's hitting time has a heavy tail; rare runs may
  // legitimately exceed the step cap and are skipped
  int completed = 0;
  for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
    auto w = couple_delayed_continuous(dist, T, hash_combine(1234, seed), 2'000'000, 3);
    if (!w.completed) continue;
    ++completed;
    CHECK(w.N_c >= w.m0);

    // D_n stays on the delta lattice: per-step difference in {-delta, 0, +delta}
    long long mult = w.m0;
    double running = T;
    for (std::size_t k = 0; k < w.tau.size(); ++k) {
      double d = w.tau_prime[k] - w.tau[k];
      CHECK(std::fabs(d) <= w.delta + 1e-12);
      bool lattice = std::fabs(d) < 1e-12 || std::fabs(std::fabs(d) - w.delta) < 1e-12;
      CHECK(lattice);
      running += d;
      mult += d > 1e-12 ? 1 : (d < -1e-12 ? -1 : 0);
      CHECK(mult == w.multipliers[k]);
      CHECK(running ==
            doctest::Approx(static_cast<double>(mult) * w.delta).epsilon(1e-9));
    }
    // at N_c the difference has hit 0 and stays there
    CHECK(w.multipliers[static_cast<std::size_t>(w.N_c) - 1] == 0);
    for (std::size_t k = static_cast<std::size_t>(w.N_c); k < w.tau.size(); ++k)
      CHECK(w.tau[k] == w.tau_prime[k]);
  }
  CHECK(completed >= 9950);
}

TEST_CASE("continuous delay walk marginals follow the input law") {
  auto dist = Distribution::uniform(0, 1);
  std::vector<double> tau, tau_p;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto w = couple_delayed_continuous(dist, 0.5, hash_combine(88, seed), 1'000'000);
    for (std::size_t k = 0; k < std::min<std::size_t>(w.tau.size(), 40); ++k) {
      tau.push_back(w.tau[k]);
      tau_p.push_back(w.tau_prime[k]);
    }
  }
  auto cdf = [&](double x) { return dist.cdf(x); };
  CHECK(ks_test(tau, cdf).p_value > 0.001);
  CHECK(ks_test(tau_p, cdf).p_value > 0.001);
}

TEST_CASE("discrete certificates") {
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  // spend one 2 against one 1: T_delay = 1, equal counts
  DiscreteCertificate c{{0, 1}, {1, 0}};
  CHECK(certificate_valid(d, c, 1.0));
  CHECK(!certificate_valid(d, c, 2.0));
  // not reduced: both entries positive on the same atom
  CHECK(!certificate_valid(d, DiscreteCertificate{{1, 1}, {1, 0}}, 1.0));

  auto got = derive_certificate(d, 3.0);
  REQUIRE(got.has_value());
  CHECK(got->n == std::vector<long long>{0, 3});
  CHECK(got->n_prime == std::vector<long long>{3, 0});
  CHECK(certificate_valid(d, *got, 3.0));

  auto zero = derive_certificate(d, 0.0);
  REQUIRE(zero.has_value());
  CHECK(certificate_valid(d, *zero, 0.0));

  // gap 1 cannot produce 0.5
  CHECK(!derive_certificate(d, 0.5).has_value());
}

TEST_CASE("odd-count parity relation is a valid certificate") {
  // atoms 1 and 1.5: three 1s balance two 1.5s; net count 1 is odd
  auto d = Distribution::discrete({{1, 0.5}, {1.5, 0.5}});
  DiscreteCertificate c{{3, 0}, {0, 2}};
  CHECK(certificate_valid(d, c, 0.0));
  // but the delay walk itself requires equal counts
  CHECK_THROWS_AS(couple_delayed_discrete(d, c, 1), std::invalid_argument);
}

TEST_CASE("discrete delay walk: zero certificate is immediate") {
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  DiscreteCertificate c{{0, 0}, {0, 0}};
  auto w = couple_delayed_discrete(d, c, 3, 1000, 5);
  CHECK(w.completed);
  CHECK(w.N_c == 0);
  for (std::size_t k = 0; k < w.tau.size(); ++k) CHECK(w.tau[k] == w.tau_prime[k]);
}

TEST_CASE("discrete delay walk: 1e4 runs satisfy exact invariants") {
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  DiscreteCertificate c{{0, 1}, {1, 0}};  // T_delay = 1
  // the hitting time of the deficit walk has a heavy tail, so a small number
  // of runs may legitimately exceed the step cap; they are skipped below
  int completed = 0;
  for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
    auto w = couple_delayed_discrete(d, c, hash_combine(77, seed), 2'000'000, 2);
    if (!w.completed) continue;
    ++completed;
    REQUIRE(w.Z.size() == w.tau.size());
    long long sum_tau = 0, sum_tau_p = 0;
    for (std::size_t k = 0; k < w.tau.size(); ++k) {
      // deficits always sum to zero
      long long s = 0;
      for (long long z : w.Z[k]) s += z;
      CHECK(s == 0);
      sum_tau += static_cast<long long>(w.tau[k]);
      sum_tau_p += static_cast<long long>(w.tau_prime[k]);
      if (static_cast<long long>(k) + 1 == w.N_c) {
        // exact integer identity at the coupling time: the first process has
        // accumulated exactly T_delay more than the delayed one
        CHECK(sum_tau == sum_tau_p + 1);
      }
    }
    for (std::size_t k = static_cast<std::size_t>(w.N_c); k < w.tau.size(); ++k)
      CHECK(w.tau[k] == w.tau_prime[k]);
  }
  CHECK(completed >= 9950);
}

TEST_CASE("infection coupling: identical seeds are trivial") {
  auto cell = build_tube(3, 2);
  std::vector<VertexRef> I{{0, 1}, {2, 3}};
  auto r = couple_infections_continuous(cell, Distribution::uniform(0, 1), I, I, 5, {});
  CHECK(r.completed);
  CHECK(r.N_c_level == 0);
  CHECK(r.equality_ok);
  CHECK(r.walk_steps == 0);
}

TEST_CASE("infection coupling input validation") {
  auto cell = build_tube(3, 2);
  std::vector<VertexRef> I{{0, 1}}, Ip{{1, 2}};
  CHECK_THROWS(couple_infections_continuous(cell, Distribution::discrete({{1, 0.5}, {2, 0.5}}),
                                            I, Ip, 1, {}));
  CHECK_THROWS(couple_infections_discrete(cell, Distribution::uniform(0, 1), I, Ip, 1, {}));
  CHECK_THROWS(couple_infections_continuous(cell, Distribution::uniform(0, 1), {}, Ip, 1, {}));
}

TEST_CASE("explicit continuous coupling verifies end-to-end equality") {
  auto cell = build_tube(3, 2);
  std::vector<VertexRef> I{{0, 1}}, Ip{{1, 2}};
  CouplingOptions o;
  o.mode = CouplingMode::Explicit;
  o.force_blocks = true;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto r = couple_infections_continuous(cell, Distribution::uniform(0, 1), I, Ip,
                                          hash_combine(31, seed), o);
    CHECK(r.completed);
    CHECK(r.equality_ok);
    CHECK(r.verified_levels >= 50);
    CHECK(r.N_c_time > 0);
    CHECK(r.marginal_ks_p > 1e-4);
  }
}

TEST_CASE("explicit discrete coupling is exact") {
  auto cell = build_tube(2, 2);
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  std::vector<VertexRef> I{{0, 1}}, Ip{{2, 1}};  // even distance: condition-b instance
  CouplingOptions o;
  o.mode = CouplingMode::Explicit;
  o.force_blocks = true;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto r = couple_infections_discrete(cell, d, I, Ip, hash_combine(37, seed), o);
    CHECK(r.completed);
    CHECK(r.equality_ok);
  }
}

TEST_CASE("event-driven coupling completes with the exact block law") {
  auto cell = build_tube(3, 2);
  std::vector<VertexRef> I{{0, 1}}, Ip{{1, 2}};
  CouplingOptions o;
  o.mode = CouplingMode::EventDriven;
  o.max_walk_steps = 4'000'000'000LL;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto r = couple_infections_continuous(cell, Distribution::uniform(0, 1), I, Ip,
                                          hash_combine(41, seed), o);
    CHECK(r.completed);
    CHECK(r.N_c_level > 0);
    CHECK(r.blocks_consumed >= r.walk_steps);
    CHECK(r.marginal_ks_p > 1e-4);
  }
}

TEST_CASE("tree front grows at the Malthusian rate with random limit") {
  auto res = tree_branching_demo(1.0, 7.0, 800, 2025);
  CHECK(res.replicas == 800);
  CHECK(std::fabs(res.mean_W - 3.0) <= 3 * res.se_W);
  CHECK(res.var_W_ci_lo > 0);
  CHECK(res.lambda_hat == doctest::Approx(1.0).epsilon(0.05));
  REQUIRE(res.log_mean_front.size() >= 2);
  CHECK(res.log_mean_front.front().second < res.log_mean_front.back().second);
}
