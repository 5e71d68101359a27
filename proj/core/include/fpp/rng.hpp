#pragma once
#include <cstdint>

namespace fpp {

// splitmix64 finalizer: stateless, strong avalanche
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t key) {
  return mix64(mix64(seed ^ 0xA0761D6478BD642Full) ^ mix64(key));
}

// uniform deviate in the open interval (0,1)
inline double u01(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// deterministic per-replica seed derivation
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return hash_combine(master, 0x5851F42D4C957F2Dull + index);
}

// counter-based stream: the i-th value is a pure function of (seed, i)
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : seed_(seed) {}
  double next() { return u01(hash_combine(seed_, ctr_++)); }
  std::uint64_t next_u64() { return hash_combine(seed_, ctr_++); }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t ctr_ = 0;
};

}  // namespace fpp
