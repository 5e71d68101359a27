#pragma once
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace fpp {

// Nonnegative passage-time distribution. Must not be concentrated at a single
// point: every regeneration-dependent operation needs m < M on the support.
class Distribution {
 public:
  enum class Kind { Exponential, Uniform, Discrete, Mixture, Truncated };

  static Distribution exponential(double rate);
  static Distribution uniform(double a, double b);
  // atoms: (value, probability); values distinct and >= 0, probs sum to 1
  static Distribution discrete(std::vector<std::pair<double, double>> atoms);
  static Distribution mixture(std::vector<std::pair<Distribution, double>> components);
  // inner conditioned on tau <= cap; requires P(tau <= cap) > 0
  static Distribution truncated_below(Distribution inner, double cap);

  // spec string / config JSON, e.g. "exp:1", "uniform:0,1", "discrete:1=0.5,2=0.5"
  static Distribution parse(const std::string& spec);
  static Distribution from_json(const std::string& json_text);

  Kind kind() const { return kind_; }
  double cdf(double x) const;
  // density of the absolutely continuous part (throws for purely discrete)
  double density(double x) const;
  // F^{-1}(u) = inf{x : F(x) >= u}, right-continuous convention
  double inverse_cdf(double u) const;
  // essential support bounds (m_tau, M_tau); M_tau may be +inf
  std::pair<double, double> support_bounds() const;
  double mean() const;

  bool is_discrete() const;  // P(Lambda) = 1
  bool has_density_component() const;
  // atoms of the distribution (empty for purely continuous)
  const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }
  // an interval [a,b] with a density lower bound c > 0, if one exists
  // analytically; returns {a, b, c}
  struct DensityFloor {
    double a, b, c;
    bool valid;
  };
  DensityFloor density_floor() const;

  double rate() const { return rate_; }
  double uniform_a() const { return a_; }
  double uniform_b() const { return b_; }
  const std::vector<std::pair<Distribution, double>>& components() const { return components_; }

  std::string describe() const;

 private:
  Distribution() = default;
  Kind kind_ = Kind::Uniform;
  double rate_ = 0;
  double a_ = 0, b_ = 1;
  double cap_ = 0, cap_mass_ = 0;                         // truncation point, F_inner(cap)
  std::vector<std::pair<double, double>> atoms_;          // sorted by value
  std::vector<std::pair<Distribution, double>> components_;  // mixture; truncation inner at [0]
};

}  // namespace fpp
