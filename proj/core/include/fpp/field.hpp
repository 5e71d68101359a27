#pragma once
#include <cstdint>
#include <unordered_map>
#include <utility>

#include "fpp/dist.hpp"
#include "fpp/graph.hpp"
#include "fpp/rng.hpp"

namespace fpp {

// Deterministic seeded realization of the i.i.d. edge-weight field. weight(e)
// is a pure function of (master_seed, EdgeRef encoding); the override table is
// frozen at construction (used by couplings and constructed test instances).
class WeightField {
 public:
  using Overrides = std::unordered_map<std::uint64_t, double>;

  WeightField(Distribution dist, std::uint64_t master_seed, Overrides overrides = {})
      : dist_(std::move(dist)), seed_(master_seed), overrides_(std::move(overrides)) {}

  double uniform_at(const EdgeRef& e) const { return u01(hash_combine(seed_, e.encode())); }

  double weight(const EdgeRef& e) const {
    if (!overrides_.empty()) {
      auto it = overrides_.find(e.encode());
      if (it != overrides_.end()) return it->second;
    }
    return dist_.inverse_cdf(uniform_at(e));
  }

  const Distribution& dist() const { return dist_; }
  std::uint64_t seed() const { return seed_; }
  const Overrides& overrides() const { return overrides_; }

  WeightField with_overrides(Overrides extra) const {
    Overrides merged = overrides_;
    for (auto& [k, v] : extra) merged[k] = v;
    return WeightField(dist_, seed_, std::move(merged));
  }
  // same uniforms U_e, different marginal: the inverse-cdf coupling
  WeightField with_distribution(Distribution d) const {
    return WeightField(std::move(d), seed_, overrides_);
  }

 private:
  Distribution dist_;
  std::uint64_t seed_;
  Overrides overrides_;
};

}  // namespace fpp
