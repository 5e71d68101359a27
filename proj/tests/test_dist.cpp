#include <stdexcept>
#include <cmath>

#include <doctest.h>

#include "fpp/dist.hpp"

using namespace fpp;

TEST_CASE("inverse cdf pins") {
  CHECK(Distribution::uniform(0, 1).inverse_cdf(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  auto d = Distribution::discrete({{1, 0.5}, {2, 0.5}});
  CHECK(d.inverse_cdf(0.5) == 1.0);   // inf convention at the jump
  CHECK(d.inverse_cdf(0.51) == 2.0);
  CHECK(Distribution::exponential(1).inverse_cdf(1 - std::exp(-1.0)) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cdf and inverse are consistent") {
  for (auto d : {Distribution::exponential(2), Distribution::uniform(0.5, 3)})
    for (double u : {0.01, 0.2, 0.5, 0.83, 0.999})
      CHECK(d.cdf(d.inverse_cdf(u)) == doctest::Approx(u).epsilon(1e-9));
  auto disc = Distribution::discrete({{0.5, 0.2}, {1, 0.3}, {4, 0.5}});
  CHECK(disc.cdf(0.4) == doctest::Approx(0.0));
  CHECK(disc.cdf(0.5) == doctest::Approx(0.2));
  CHECK(disc.cdf(3.9) == doctest::Approx(0.5));
  CHECK(disc.cdf(4) == doctest::Approx(1.0));
}

TEST_CASE("support bounds") {
  CHECK(Distribution::uniform(2, 5).support_bounds() == std::pair<double, double>{2, 5});
  auto e = Distribution::exponential(3).support_bounds();
  CHECK(e.first == 0);
  CHECK(std::isinf(e.second));
  CHECK(Distribution::discrete({{1, 0.5}, {1.6, 0.5}}).support_bounds() ==
        std::pair<double, double>{1.0, 1.6});
}

TEST_CASE("means") {
  CHECK(Distribution::exponential(2).mean() == doctest::Approx(0.5));
  CHECK(Distribution::uniform(1, 3).mean() == doctest::Approx(2.0));
  CHECK(Distribution::discrete({{1, 0.25}, {3, 0.75}}).mean() == doctest::Approx(2.5));
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(Distribution::uniform(-1, 2), std::invalid_argument);  // negative support
  CHECK_THROWS_AS(Distribution::exponential(0), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::discrete({{1, 0.7}, {2, 0.7}}), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::discrete({{1, 1.0}}), std::invalid_argument);  // degenerate
  CHECK_THROWS_AS(Distribution::uniform(2, 2), std::invalid_argument);         // degenerate
}

TEST_CASE("kind predicates") {
  CHECK(Distribution::discrete({{1, 0.5}, {2, 0.5}}).is_discrete());
  CHECK(!Distribution::uniform(0, 1).is_discrete());
  CHECK(Distribution::uniform(0, 1).has_density_component());
  CHECK(Distribution::exponential(1).has_density_component());
  CHECK(!Distribution::discrete({{1, 0.5}, {2, 0.5}}).has_density_component());
}

TEST_CASE("density floors") {
  auto u = Distribution::uniform(0, 2).density_floor();
  REQUIRE(u.valid);
  CHECK(u.a == 0);
  CHECK(u.b == 2);
  CHECK(u.c == doctest::Approx(0.5));
  auto e = Distribution::exponential(1).density_floor();
  REQUIRE(e.valid);
  CHECK(e.c == doctest::Approx(std::exp(-1.0)));
  CHECK(!Distribution::discrete({{1, 0.5}, {2, 0.5}}).density_floor().valid);
}

TEST_CASE("truncation") {
  auto t = Distribution::truncated_below(Distribution::uniform(0, 1), 0.5);
  CHECK(t.cdf(0.25) == doctest::Approx(0.5));
  CHECK(t.cdf(0.5) == doctest::Approx(1.0));
  CHECK(t.inverse_cdf(0.5) == doctest::Approx(0.25));
  CHECK(t.support_bounds().second == doctest::Approx(0.5));
  auto fl = t.density_floor();
  REQUIRE(fl.valid);
  CHECK(fl.c == doctest::Approx(2.0));
}

TEST_CASE("mixture") {
  auto m = Distribution::mixture(
      {{Distribution::uniform(0, 1), 0.5}, {Distribution::uniform(2, 3), 0.5}});
  CHECK(m.cdf(1.5) == doctest::Approx(0.5));
  CHECK(m.mean() == doctest::Approx(1.5));
  CHECK(m.inverse_cdf(0.25) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(m.inverse_cdf(0.75) == doctest::Approx(2.5).epsilon(1e-8));
  CHECK(m.has_density_component());
}

TEST_CASE("spec string parsing") {
  CHECK(Distribution::parse("exp:1").kind() == Distribution::Kind::Exponential);
  auto u = Distribution::parse("uniform:0,1");
  CHECK(u.uniform_a() == 0);
  CHECK(u.uniform_b() == 1);
  auto d = Distribution::parse("discrete:1=0.5,2=0.5");
  REQUIRE(d.atoms().size() == 2);
  CHECK(d.atoms()[0].first == 1.0);
  CHECK_THROWS_AS(Distribution::parse("cauchy:0,1"), std::invalid_argument);
}

TEST_CASE("JSON parsing") {
  auto d = Distribution::from_json(R"({"type":"uniform","a":1,"b":2})");
  CHECK(d.mean() == doctest::Approx(1.5));
  auto m = Distribution::from_json(
      R"({"type":"mixture","components":[
          {"dist":{"type":"uniform","a":0,"b":1},"weight":0.25},
          {"dist":{"type":"exponential","rate":1},"weight":0.75}]})");
  CHECK(m.kind() == Distribution::Kind::Mixture);
  CHECK(m.mean() == doctest::Approx(0.25 * 0.5 + 0.75 * 1.0));
}
