#include "fpp/dist.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fpp {

namespace {
constexpr double kProbTol = 1e-12;
}

Distribution Distribution::exponential(double rate) {
  if (!(rate > 0)) throw std::invalid_argument("exponential: rate > 0 required");
  Distribution d;
  d.kind_ = Kind::Exponential;
  d.rate_ = rate;
  return d;
}

Distribution Distribution::uniform(double a, double b) {
  if (!(a >= 0) || !(b > a)) throw std::invalid_argument("uniform: need 0 <= a < b");
  Distribution d;
  d.kind_ = Kind::Uniform;
  d.a_ = a;
  d.b_ = b;
  return d;
}

Distribution Distribution::discrete(std::vector<std::pair<double, double>> atoms) {
  if (atoms.empty()) throw std::invalid_argument("discrete: no atoms");
  std::sort(atoms.begin(), atoms.end());
  double total = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i].first >= 0)) throw std::invalid_argument("discrete: negative atom");
    if (!(atoms[i].second > 0)) throw std::invalid_argument("discrete: atom probability <= 0");
    if (i > 0 && atoms[i].first == atoms[i - 1].first)
      throw std::invalid_argument("discrete: duplicate atom value");
    total += atoms[i].second;
  }
  if (std::fabs(total - 1.0) > kProbTol)
    throw std::invalid_argument("discrete: probabilities must sum to 1");
  if (atoms.size() == 1)
    throw std::invalid_argument("distribution concentrated at a single point");
  Distribution d;
  d.kind_ = Kind::Discrete;
  d.atoms_ = std::move(atoms);
  return d;
}

Distribution Distribution::mixture(std::vector<std::pair<Distribution, double>> components) {
  if (components.empty()) throw std::invalid_argument("mixture: no components");
  double total = 0;
  for (auto& [c, w] : components) {
    (void)c;
    if (!(w > 0)) throw std::invalid_argument("mixture: weight <= 0");
    total += w;
  }
  if (std::fabs(total - 1.0) > kProbTol)
    throw std::invalid_argument("mixture: weights must sum to 1");
  Distribution d;
  d.kind_ = Kind::Mixture;
  d.components_ = std::move(components);
  // collect atoms from discrete components (for coupling logic)
  for (auto& [c, w] : d.components_) {
    for (auto& [v, p] : c.atoms()) {
      auto it = std::find_if(d.atoms_.begin(), d.atoms_.end(),
                             [&](const auto& a) { return a.first == v; });
      if (it == d.atoms_.end())
        d.atoms_.emplace_back(v, w * p);
      else
        it->second += w * p;
    }
  }
  std::sort(d.atoms_.begin(), d.atoms_.end());
  auto [m, M] = d.support_bounds();
  if (m >= M) throw std::invalid_argument("distribution concentrated at a single point");
  return d;
}

Distribution Distribution::truncated_below(Distribution inner, double cap) {
  double mass = inner.cdf(cap);
  if (!(mass > 0)) throw std::invalid_argument("truncated_below: cap below the support");
  Distribution d;
  d.kind_ = Kind::Truncated;
  d.cap_ = cap;
  d.cap_mass_ = mass;
  for (auto& [v, p] : inner.atoms())
    if (v <= cap) d.atoms_.emplace_back(v, p / mass);
  d.components_.emplace_back(std::move(inner), 1.0);
  auto [m, M] = d.support_bounds();
  if (!(m < M)) throw std::invalid_argument("distribution concentrated at a single point");
  return d;
}

double Distribution::cdf(double x) const {
  switch (kind_) {
    case Kind::Exponential:
      return x <= 0 ? 0.0 : 1.0 - std::exp(-rate_ * x);
    case Kind::Uniform:
      if (x <= a_) return 0;
      if (x >= b_) return 1;
      return (x - a_) / (b_ - a_);
    case Kind::Discrete: {
      double s = 0;
      for (auto& [v, p] : atoms_)
        if (v <= x) s += p;
      return s;
    }
    case Kind::Mixture: {
      double s = 0;
      for (auto& [c, w] : components_) s += w * c.cdf(x);
      return s;
    }
    case Kind::Truncated:
      if (x >= cap_) return 1.0;
      return components_[0].first.cdf(x) / cap_mass_;
  }
  return 0;
}

double Distribution::density(double x) const {
  switch (kind_) {
    case Kind::Exponential:
      return x < 0 ? 0.0 : rate_ * std::exp(-rate_ * x);
    case Kind::Uniform:
      return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
    case Kind::Discrete:
      throw std::logic_error("density: purely discrete distribution");
    case Kind::Mixture: {
      double s = 0;
      for (auto& [c, w] : components_)
        if (c.has_density_component()) s += w * c.density(x);
      return s;
    }
    case Kind::Truncated:
      return x <= cap_ ? components_[0].first.density(x) / cap_mass_ : 0.0;
  }
  return 0;
}

double Distribution::inverse_cdf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("inverse_cdf: u outside [0,1]");
  switch (kind_) {
    case Kind::Exponential:
      if (u >= 1.0) return std::numeric_limits<double>::infinity();
      return -std::log(1.0 - u) / rate_;
    case Kind::Uniform:
      return a_ + u * (b_ - a_);
    case Kind::Discrete: {
      double cum = 0;
      for (auto& [v, p] : atoms_) {
        cum += p;
        if (cum >= u) return v;
      }
      return atoms_.back().first;
    }
    case Kind::Mixture: {
      auto [lo0, hi0] = support_bounds();
      if (u <= 0.0) return lo0;
      // fast path: component supports already ordered and disjoint, so the
      // quantile function splits exactly along cumulative component weights
      bool disjoint = true;
      for (std::size_t i = 0; i + 1 < components_.size() && disjoint; ++i)
        if (components_[i].first.support_bounds().second >
            components_[i + 1].first.support_bounds().first)
          disjoint = false;
      if (disjoint) {
        double cum = 0;
        for (auto& [c, w] : components_) {
          if (u <= cum + w) return c.inverse_cdf(std::min(1.0, std::max(0.0, (u - cum) / w)));
          cum += w;
        }
        return components_.back().first.inverse_cdf(1.0);
      }
      double lo = lo0, hi = std::isinf(hi0) ? 1.0 : hi0;
      if (std::isinf(hi0))
        while (cdf(hi) < u) hi *= 2;
      // inf{x : F(x) >= u} by bisection on the monotone cdf
      for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf(mid) >= u ? hi : lo) = mid;
      }
      return hi;
    }
    case Kind::Truncated:
      return components_[0].first.inverse_cdf(u * cap_mass_);
  }
  return 0;
}

std::pair<double, double> Distribution::support_bounds() const {
  switch (kind_) {
    case Kind::Exponential:
      return {0.0, std::numeric_limits<double>::infinity()};
    case Kind::Uniform:
      return {a_, b_};
    case Kind::Discrete:
      return {atoms_.front().first, atoms_.back().first};
    case Kind::Mixture: {
      double lo = std::numeric_limits<double>::infinity(), hi = 0;
      for (auto& [c, w] : components_) {
        (void)w;
        auto [a, b] = c.support_bounds();
        lo = std::min(lo, a);
        hi = std::max(hi, b);
      }
      return {lo, hi};
    }
    case Kind::Truncated: {
      auto [a, b] = components_[0].first.support_bounds();
      return {a, std::min(b, cap_)};
    }
  }
  return {0, 0};
}

double Distribution::mean() const {
  switch (kind_) {
    case Kind::Exponential:
      return 1.0 / rate_;
    case Kind::Uniform:
      return 0.5 * (a_ + b_);
    case Kind::Discrete: {
      double s = 0;
      for (auto& [v, p] : atoms_) s += v * p;
      return s;
    }
    case Kind::Mixture: {
      double s = 0;
      for (auto& [c, w] : components_) s += w * c.mean();
      return s;
    }
    case Kind::Truncated: {
      // numerically: E[X | X <= cap] via quantile integration
      double s = 0;
      const int grid = 20000;
      for (int i = 0; i < grid; ++i) s += inverse_cdf((i + 0.5) / grid);
      return s / grid;
    }
  }
  return 0;
}

bool Distribution::is_discrete() const {
  if (kind_ == Kind::Discrete) return true;
  if (kind_ != Kind::Mixture && kind_ != Kind::Truncated) return false;
  for (auto& [c, w] : components_) {
    (void)w;
    if (!c.is_discrete()) return false;
  }
  return true;
}

bool Distribution::has_density_component() const {
  switch (kind_) {
    case Kind::Exponential:
    case Kind::Uniform:
      return true;
    case Kind::Discrete:
      return false;
    case Kind::Mixture:
    case Kind::Truncated:
      for (auto& [c, w] : components_) {
        (void)w;
        if (c.has_density_component()) return true;
      }
      return false;
  }
  return false;
}

Distribution::DensityFloor Distribution::density_floor() const {
  switch (kind_) {
    case Kind::Uniform:
      return {a_, b_, 1.0 / (b_ - a_), true};
    case Kind::Exponential: {
      // density rate*exp(-rate x) >= rate*exp(-1) on [0, 1/rate]
      return {0.0, 1.0 / rate_, rate_ * std::exp(-1.0), true};
    }
    case Kind::Discrete:
      return {0, 0, 0, false};
    case Kind::Mixture: {
      DensityFloor best{0, 0, 0, false};
      for (auto& [c, w] : components_) {
        auto f = c.density_floor();
        if (!f.valid) continue;
        f.c *= w;
        if (!best.valid || f.c * (f.b - f.a) > best.c * (best.b - best.a)) best = f;
      }
      return best;
    }
    case Kind::Truncated: {
      auto f = components_[0].first.density_floor();
      if (!f.valid) return {0, 0, 0, false};
      f.b = std::min(f.b, cap_);
      if (!(f.b > f.a)) return {0, 0, 0, false};
      f.c /= cap_mass_;
      return f;
    }
  }
  return {0, 0, 0, false};
}

std::string Distribution::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Exponential:
      os << "exp:" << rate_;
      break;
    case Kind::Uniform:
      os << "uniform:" << a_ << "," << b_;
      break;
    case Kind::Discrete: {
      os << "discrete:";
      for (std::size_t i = 0; i < atoms_.size(); ++i)
        os << (i ? "," : "") << atoms_[i].first << "=" << atoms_[i].second;
      break;
    }
    case Kind::Mixture: {
      os << "mixture[";
      for (std::size_t i = 0; i < components_.size(); ++i)
        os << (i ? ";" : "") << components_[i].second << "*" << components_[i].first.describe();
      os << "]";
      break;
    }
    case Kind::Truncated:
      os << "trunc[" << cap_ << ";" << components_[0].first.describe() << "]";
      break;
  }
  return os.str();
}

namespace {

std::vector<double> parse_numbers(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

Distribution Distribution::parse(const std::string& spec) {
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "exp" || head == "exponential") {
    return exponential(rest.empty() ? 1.0 : std::stod(rest));
  }
  if (head == "uniform") {
    auto v = parse_numbers(rest, ',');
    if (v.size() != 2) throw std::invalid_argument("uniform spec: uniform:a,b");
    return uniform(v[0], v[1]);
  }
  if (head == "discrete") {
    std::vector<std::pair<double, double>> atoms;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("discrete spec: v=p,...");
      atoms.emplace_back(std::stod(item.substr(0, eq)), std::stod(item.substr(eq + 1)));
    }
    return discrete(std::move(atoms));
  }
  throw std::invalid_argument("unknown distribution spec: " + spec);
}

Distribution Distribution::from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  std::string type = j.at("type").get<std::string>();
  if (type == "exponential") return exponential(j.at("rate").get<double>());
  if (type == "uniform") return uniform(j.at("a").get<double>(), j.at("b").get<double>());
  if (type == "discrete") {
    std::vector<std::pair<double, double>> atoms;
    for (auto& a : j.at("atoms")) atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    return discrete(std::move(atoms));
  }
  if (type == "mixture") {
    std::vector<std::pair<Distribution, double>> comps;
    for (auto& c : j.at("components"))
      comps.emplace_back(from_json(c.at("dist").dump()), c.at("weight").get<double>());
    return mixture(std::move(comps));
  }
  throw std::invalid_argument("unknown distribution type: " + type);
}

}  // namespace fpp
