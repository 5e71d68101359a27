#include <stdexcept>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "fpp/fpp.hpp"
#include "fpp/regen.hpp"
#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

using namespace fpp;

TEST_CASE("parameter rule pins") {
  auto t32 = build_tube(3, 2);  // L = 2
  // quantiles at 1 and 2 with L = 2: M = floor(1*2/1) + 1 = 3
  auto rp = choose_params(Distribution::uniform(0.5, 2.5), t32, 0.25);
  CHECK(rp.t_lo == doctest::Approx(1.0));
  CHECK(rp.t_hi == doctest::Approx(2.0));
  CHECK(rp.M == 3);

  auto rp2 = choose_params(Distribution::uniform(0, 1), t32, 0.25);
  CHECK(rp2.t_lo == doctest::Approx(0.25));
  CHECK(rp2.t_hi == doctest::Approx(0.75));
  CHECK(rp2.M == 2);  // floor(0.25*2/0.5) + 1
}

TEST_CASE("discrete thresholds move into the support gap") {
  auto t22 = build_tube(2, 2);
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  auto rp = choose_params(d, t22, 0.25);
  CHECK(rp.t_lo > 1.0);
  CHECK(rp.t_hi < 2.0);
  CHECK(rp.t_lo < rp.t_hi);
  CHECK(d.cdf(rp.t_lo) == doctest::Approx(0.5));
  CHECK(1.0 - d.cdf(rp.t_hi) == doctest::Approx(0.5));
}

TEST_CASE("special margin parameters on the two-atom tube") {
  auto t22 = build_tube(2, 2);
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  auto rp = choose_params_special(d, t22);
  CHECK(rp.special_margin);
  CHECK(rp.t_lo == doctest::Approx(1.0 + 1.0 / 3.0));
  CHECK(rp.t_hi == doctest::Approx(1.0 + 2.0 / 3.0));
  CHECK(rp.M == 8);
  // margin inequality: (t_hi - t_lo) M > t_lo L + (M_tau - m_tau)
  CHECK((rp.t_hi - rp.t_lo) * rp.M > rp.t_lo * t22.L() + (2.0 - 1.0));
}

TEST_CASE("auto parameters beat the default quantile on the exponential tube") {
  auto t22 = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto def = choose_params(dist, t22);
  auto opt = auto_params(dist, t22);
  CHECK(opt.p_block >= def.p_block);
  CHECK(opt.M == 1);
  CHECK(opt.p_block > 1e-3);
  CHECK(opt.p_block == doctest::Approx(block_probability(dist, opt)).epsilon(1e-12));
}

TEST_CASE("block structure invariants") {
  for (auto cell : {build_tube(2, 2), build_tube(3, 2), build_cylinder(4, 2)}) {
    auto rp = choose_params(Distribution::uniform(0, 1), cell, 0.2);
    // gamma runs from level 0 to level 2M with minimal edge count
    CHECK(rp.gamma.front().level == 0);
    CHECK(rp.gamma.back().level == 2 * rp.M);
    CHECK(rp.pivot.level == rp.M);
    // fast and slow partition the block edge set
    std::size_t block_edges = static_cast<std::size_t>(cell.L()) *
                                  static_cast<std::size_t>(2 * rp.M + 1) +
                              cell.inter.size() * static_cast<std::size_t>(2 * rp.M);
    CHECK(rp.fast_edges.size() + rp.slow_edges.size() == block_edges);
  }
  auto t32 = build_tube(3, 2);
  auto rp = auto_params(Distribution::uniform(0, 1), t32);
  CHECK(rp.M == 1);
  CHECK(rp.fast_edges.size() == 6);
  CHECK(rp.slow_edges.size() == 6);
}

TEST_CASE("detect_A boundary semantics") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::uniform(0, 1);
  auto rp = choose_params(dist, cell, 0.25);
  WeightField::Overrides ov;
  for (const auto& e : rp.fast_edges) ov[e.encode()] = rp.t_lo;  // inclusive boundary
  for (const auto& e : rp.slow_edges) ov[e.encode()] = rp.t_hi;
  WeightField f(dist, 1, ov);
  CHECK(detect_A(cell, f, rp, 0));

  auto bad = ov;
  bad[rp.fast_edges[0].encode()] = rp.t_hi;  // one fast edge too slow
  CHECK(!detect_A(cell, WeightField(dist, 1, bad), rp, 0));

  auto bad2 = ov;
  bad2[rp.slow_edges[0].encode()] = rp.t_lo;  // one slow edge too fast
  CHECK(!detect_A(cell, WeightField(dist, 1, bad2), rp, 0));
}

TEST_CASE("force_block realizes the event") {
  auto cell = build_tube(3, 2);
  auto dist = Distribution::exponential(1);
  auto rp = choose_params(dist, cell, 0.2);
  WeightField f(dist, 55, force_block(dist, rp, 12));
  CHECK(detect_A(cell, f, rp, 12));
  CHECK(!detect_A(cell, f, rp, 12 + 2 * rp.M + 1));  // neighbours unaffected (whp)
}

TEST_CASE("empirical block frequency matches the closed form") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = auto_params(dist, cell);
  const long long step = 2 * rp.M + 1;
  const long long levels = 400'000;
  WeightField f(dist, 4242);
  long long hits = 0, tries = 0;
  for (long long n = 0; n + rp.span() < levels; n += step) {
    ++tries;
    if (detect_A(cell, f, rp, n)) ++hits;
  }
  double p = static_cast<double>(hits) / static_cast<double>(tries);
  double se = std::sqrt(rp.p_block * (1 - rp.p_block) / static_cast<double>(tries));
  CHECK(std::fabs(p - rp.p_block) <= 3 * se);
}

TEST_CASE("decompose on a constructed instance") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = choose_params(dist, cell);
  const long long step = 2 * rp.M + 1;
  auto ov = force_block(dist, rp, 0);
  for (auto& [k, v] : force_block(dist, rp, 2 * step)) ov[k] = v;
  // break the middle candidate deterministically: one of its gamma edges slow
  EdgeRef mid{rp.pivot_exit.level + step, rp.pivot_exit.kind, rp.pivot_exit.idx};
  ov[mid.encode()] = rp.t_hi + 1.0;
  WeightField f(dist, 300, ov);
  auto d = decompose(cell, f, rp, 0, 2 * step + rp.span());
  REQUIRE(d.rho.size() == 2);
  CHECK(d.increments.size() == 1);
  CHECK(d.increments[0].S == 2 * step);
  CHECK(d.rho[0] == rp.M);
}

TEST_CASE("stopping index") {
  RegenDecomposition d;
  d.params.M = 1;
  d.rho = {5, 10, 15};
  auto nu = stopping_index(d, 9);  // first rho >= 10
  REQUIRE(nu.has_value());
  CHECK(*nu == 1);
  auto zero = stopping_index(d, 3);  // n + M = 4 <= rho_0
  REQUIRE(zero.has_value());
  CHECK(*zero == 0);
  CHECK(!stopping_index(d, 99).has_value());
}

TEST_CASE("regeneration stream properties on the exponential tube") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = auto_params(dist, cell);
  const long long step = 2 * rp.M + 1;
  WeightField f(dist, 910);
  auto d = decompose(cell, f, rp, 0, 600'000);
  REQUIRE(d.increments.size() >= 50);

  // gaps are positive multiples of 2M+1
  for (const auto& inc : d.increments) {
    CHECK(inc.S > 0);
    CHECK(inc.S % step == 0);
    CHECK(inc.tau > 0);
    CHECK(inc.length > 0);
  }

  // p_hat agrees with the closed form
  double se = std::sqrt(rp.p_block * (1 - rp.p_block) /
                        static_cast<double>(d.candidates_tested));
  CHECK(std::fabs(d.p_hat - rp.p_block) <= 4 * se);

  // geometric gap law
  std::vector<long long> gaps;
  for (const auto& inc : d.increments) gaps.push_back(inc.S / step);
  CHECK(chi2_geometric_gof(gaps, d.p_hat).p_value > 0.01);

  // increments look i.i.d.: small lag-1 correlation, stationary halves
  std::vector<double> taus;
  for (const auto& inc : d.increments) taus.push_back(inc.tau);
  CHECK(std::fabs(lag1_autocorrelation(taus)) < 4.0 / std::sqrt(static_cast<double>(taus.size())));
  std::vector<double> first(taus.begin(), taus.begin() + static_cast<long>(taus.size() / 2));
  std::vector<double> second(taus.begin() + static_cast<long>(taus.size() / 2), taus.end());
  CHECK(ks_test2(first, second).p_value > 0.001);
}

TEST_CASE("reconstruction identity: pivot-to-pivot time telescopes") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = auto_params(dist, cell);
  WeightField f(dist, 501);
  auto d = decompose(cell, f, rp, 0, 60'000);
  REQUIRE(d.increments.size() >= 3);
  std::size_t take = std::min<std::size_t>(d.increments.size(), 6);
  double sum = 0;
  for (std::size_t k = 0; k < take; ++k) sum += d.increments[k].tau;
  auto direct = travel_time(cell, f, d.pivots[0], d.pivots[take]);
  REQUIRE(direct.certified);
  CHECK(direct.T == doctest::Approx(sum).epsilon(1e-9));
}

TEST_CASE("increment windows are stable under extension") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = auto_params(dist, cell);
  WeightField f(dist, 733);
  auto d = decompose(cell, f, rp, 0, 120'000);
  REQUIRE(d.increments.size() >= 5);
  const long long pad = 5 * (2 * rp.M + 1);
  for (std::size_t k = 1; k <= 5; ++k) {
    Window w(cell, d.rho[k - 1] - rp.M - pad, d.rho[k] + rp.M + pad);
    auto r = dijkstra(w, f, {d.pivots[k - 1]}, {d.pivots[k]});
    CHECK(r.T[w.id(d.pivots[k])] ==
          doctest::Approx(d.increments[k - 1].tau).epsilon(1e-12));
  }
}

TEST_CASE("splitting holds on certified blocks and can fail without them") {
  auto cell = build_tube(2, 2);
  auto dist = Distribution::exponential(1);
  auto rp = auto_params(dist, cell);

  // constructed instance: forced block, endpoints straddling it
  {
    WeightField f(dist, 8080, force_block(dist, rp, 10));
    auto sc = verify_splitting(cell, f, rp, 10, {4, 1}, {10 + rp.span() + 4, 2});
    CHECK(sc.passes_pivot);
    CHECK(sc.additive);
  }

  // random certified instances
  int done = 0;
  for (std::uint64_t seed = 0; done < 40 && seed < 400; ++seed) {
    WeightField f(dist, hash_combine(21, seed));
    RegenDecomposition d;
    try {
      d = decompose(cell, f, rp, 0, 40'000);
    } catch (const std::runtime_error&) {
      continue;
    }
    if (d.rho.empty()) continue;
    long long n = d.rho[0] - rp.M;
    auto sc = verify_splitting(cell, f, rp, n, {n - 6, 1}, {n + rp.span() + 6, 2});
    CHECK(sc.passes_pivot);
    CHECK(sc.additive);
    ++done;
  }
  CHECK(done == 40);

  // negative control: blocks without the event sometimes violate splitting
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    WeightField f(Distribution::uniform(0, 1), hash_combine(22, seed));
    auto rpu = choose_params(Distribution::uniform(0, 1), cell, 0.25);
    if (detect_A(cell, f, rpu, 5)) continue;
    auto sc = verify_splitting(cell, f, rpu, 5, {0, 1}, {5 + rpu.span() + 5, 2});
    if (!sc.passes_pivot || !sc.additive) ++violations;
  }
  CHECK(violations > 0);
}
