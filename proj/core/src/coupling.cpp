#include "fpp/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "fpp/fpp.hpp"
#include "fpp/rng.hpp"
#include "fpp/stats.hpp"

namespace fpp {

ContinuousDelayWalk couple_delayed_continuous(const Distribution& dist, double T_delay,
                                              std::uint64_t seed, long long max_steps,
                                              long long post_steps) {
  if (!(T_delay >= 0) || !std::isfinite(T_delay))
    throw std::invalid_argument("couple_delayed_continuous: T_delay must be finite and >= 0");
  auto fl = dist.density_floor();
  if (!fl.valid)
    throw std::invalid_argument("couple_delayed_continuous: no analytic density floor");
  const double a = fl.a, b = fl.b, c = fl.c;

  ContinuousDelayWalk w;
  w.T_delay = T_delay;
  if (T_delay == 0) {
    // degenerate maximum; no steps are needed since the walk starts at 0
    w.m0 = 0;
    w.delta = (b - a) / 2;
  } else {
    w.m0 = static_cast<long long>(std::ceil(2.0 * T_delay / (b - a)));
    w.delta = T_delay / static_cast<double>(w.m0);
  }
  const double p_perturb = std::min(1.0, 2.0 * c * w.delta);

  Stream st(seed);
  auto residual_draw = [&]() {
    // P_tau minus c * Lebesgue on [a, a+2delta], renormalized; by rejection
    while (true) {
      double x = dist.inverse_cdf(st.next());
      if (x < a || x > a + 2 * w.delta) return x;
      if (st.next() * dist.density(x) >= c) return x;
    }
  };

  long long mult = w.m0;
  if (mult == 0) {
    w.N_c = 0;
    w.completed = true;
  }
  long long steps = 0;
  while (!w.completed && steps < max_steps) {
    double tau, tau_p;
    if (st.next() < p_perturb) {
      tau = a + 2 * w.delta * st.next();
      tau_p = tau <= a + w.delta ? tau + w.delta : tau - w.delta;
      mult += tau_p > tau ? 1 : -1;
    } else {
      tau = residual_draw();
      tau_p = tau;
    }
    ++steps;
    w.tau.push_back(tau);
    w.tau_prime.push_back(tau_p);
    w.multipliers.push_back(mult);
    if (mult == 0) {
      w.N_c = steps;
      w.completed = true;
    }
  }
  for (long long p = 0; w.completed && p < post_steps; ++p) {
    double tau = dist.inverse_cdf(st.next());
    w.tau.push_back(tau);
    w.tau_prime.push_back(tau);
    w.multipliers.push_back(0);
  }
  return w;
}

bool certificate_valid(const Distribution& dist, const DiscreteCertificate& cert, double T_delay,
                       double tol) {
  const auto& atoms = dist.atoms();
  if (cert.n.size() != atoms.size() || cert.n_prime.size() != atoms.size()) return false;
  long long sn = 0, sp = 0;
  double st = 0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (cert.n[j] < 0 || cert.n_prime[j] < 0) return false;
    if (cert.n[j] > 0 && cert.n_prime[j] > 0) return false;  // not reduced
    sn += cert.n[j];
    sp += cert.n_prime[j];
    st += static_cast<double>(cert.n[j] - cert.n_prime[j]) * atoms[j].first;
  }
  if (std::fabs(st - T_delay) > tol) return false;
  // equal counts: a direct atom exchange realizing T_delay. Odd net count:
  // a parity-breaking relation among the atoms (usable to fix an otherwise
  // unreachable delay parity); accepted as a valid certificate as well.
  return sn == sp || ((sn - sp) % 2 != 0);
}

std::optional<DiscreteCertificate> derive_certificate(const Distribution& dist, double T_delay) {
  const auto& atoms = dist.atoms();
  if (atoms.size() < 2) return std::nullopt;
  DiscreteCertificate best;
  best.n.assign(atoms.size(), 0);
  best.n_prime.assign(atoms.size(), 0);
  if (T_delay == 0) return best;
  if (T_delay < 0) return std::nullopt;
  bool found = false;
  long long best_count = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      double gap = atoms[j].first - atoms[i].first;
      double kf = T_delay / gap;
      double kr = std::round(kf);
      if (kr < 1 || std::fabs(kf - kr) > 1e-9 * std::max(1.0, kf)) continue;
      auto k = static_cast<long long>(kr);
      if (!found || k < best_count) {
        std::fill(best.n.begin(), best.n.end(), 0);
        std::fill(best.n_prime.begin(), best.n_prime.end(), 0);
        best.n[j] = k;        // the lagging sequence spends k high atoms ...
        best.n_prime[i] = k;  // ... where the other spends k low atoms
        best_count = k;
        found = true;
      }
    }
  if (!found) return std::nullopt;
  return best;
}

DiscreteDelayWalk couple_delayed_discrete(const Distribution& dist,
                                          const DiscreteCertificate& cert, std::uint64_t seed,
                                          long long max_steps, long long post_steps) {
  const auto& atoms = dist.atoms();
  double t_delay = 0;
  for (std::size_t j = 0; j < atoms.size(); ++j)
    t_delay += static_cast<double>(cert.n[j] - cert.n_prime[j]) * atoms[j].first;
  if (!certificate_valid(dist, cert, t_delay))
    throw std::invalid_argument("couple_delayed_discrete: invalid coefficient certificate");
  if (!dist.is_discrete())
    throw std::invalid_argument("couple_delayed_discrete: purely discrete distribution required");
  {
    long long sn = 0, sp = 0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      sn += cert.n[j];
      sp += cert.n_prime[j];
    }
    if (sn != sp)
      throw std::invalid_argument(
          "couple_delayed_discrete: the delay walk needs an equal-count certificate");
  }

  DiscreteDelayWalk w;
  w.cert = cert;
  const std::size_t J = atoms.size();
  std::vector<long long> Z(J);
  for (std::size_t j = 0; j < J; ++j) Z[j] = cert.n_prime[j] - cert.n[j];

  Stream st(seed);
  auto all_zero = [&] { return std::all_of(Z.begin(), Z.end(), [](long long z) { return z == 0; }); };
  auto draw_from = [&](const std::vector<std::size_t>& idx, double total) {
    double u = st.next() * total, cum = 0;
    for (auto j : idx) {
      cum += atoms[j].second;
      if (u <= cum) return j;
    }
    return idx.back();
  };

  if (all_zero()) {
    w.N_c = 0;
    w.completed = true;
  }
  long long steps = 0;
  while (!w.completed && steps < max_steps) {
    std::vector<std::size_t> active, passive;
    double q = 0;
    for (std::size_t j = 0; j < J; ++j) {
      if (Z[j] != 0) {
        active.push_back(j);
        q += atoms[j].second;
      } else {
        passive.push_back(j);
      }
    }
    double tau, tau_p;
    if (st.next() < 1.0 - q) {
      // identical draw from the residual over inactive atoms
      std::size_t j = draw_from(passive, 1.0 - q);
      tau = tau_p = atoms[j].first;
    } else {
      std::size_t jt = draw_from(active, q);
      std::size_t jp = draw_from(active, q);
      tau = atoms[jt].first;
      tau_p = atoms[jp].first;
      Z[jt] += 1;
      Z[jp] -= 1;
    }
    ++steps;
    w.tau.push_back(tau);
    w.tau_prime.push_back(tau_p);
    w.Z.push_back(Z);
    if (all_zero()) {
      w.N_c = steps;
      w.completed = true;
    }
  }
  for (long long p = 0; w.completed && p < post_steps; ++p) {
    double tau = dist.inverse_cdf(st.next());
    w.tau.push_back(tau);
    w.tau_prime.push_back(tau);
    w.Z.push_back(Z);
  }
  return w;
}

// --- infection couplings ------------------------------------------------

namespace {

constexpr std::uint64_t kTagBase = 0x636f75706c6462ULL;
constexpr std::uint64_t kTagInside = 0x696e7369646546ULL;
constexpr std::uint64_t kTagBlockPos = 0x626c6f636b2b01ULL;
constexpr std::uint64_t kTagBlockNeg = 0x626c6f636b2d02ULL;
constexpr std::uint64_t kTagWalkPos = 0x77616c6b2b0003ULL;
constexpr std::uint64_t kTagWalkNeg = 0x77616c6b2d0004ULL;
constexpr std::uint64_t kTagSkipPos = 0x736b6970732b05ULL;
constexpr std::uint64_t kTagSkipNeg = 0x736b6970732d06ULL;

constexpr long long kLevelSaturation = 4'000'000'000'000'000'000LL;

EdgeRef shift_e(const EdgeRef& e, long long n) { return {e.level + n, e.kind, e.idx}; }
VertexRef shift_v(const VertexRef& v, long long n) { return {v.level + n, v.index}; }

// geometry of one direction's special-edge lattice: block k occupies levels
// [block_base(k), block_base(k)+2M], pivots sit at block_base(k)+M
struct Direction {
  int sign = 1;
  long long base0 = 0, step = 1;
  EdgeRef special_rel{};
  std::uint64_t block_tag = 0, walk_tag = 0, skip_tag = 0;
  long long block_base(long long k) const { return base0 + sign * k * step; }
};

// A*: the block event with the condition on the special edge removed
bool a_star_holds(const WeightField& f, const RegenParams& rp, long long base,
                  const EdgeRef& special_rel) {
  for (const auto& e : rp.fast_edges) {
    if (e == special_rel) continue;
    if (f.weight(shift_e(e, base)) > rp.t_lo) return false;
  }
  for (const auto& e : rp.slow_edges)
    if (f.weight(shift_e(e, base)) < rp.t_hi) return false;
  return true;
}

// condition the block on A* by exact conditional inverse-cdf sampling, reusing
// each edge's own uniform so the instance stays a function of (seed, edge)
void force_a_star(const Distribution& dist, const WeightField& base_field, const RegenParams& rp,
                  long long base, const EdgeRef& special_rel, WeightField::Overrides& a,
                  WeightField::Overrides& b) {
  const double p_lo = dist.cdf(rp.t_lo);
  const double p_hi = dist.cdf(rp.t_hi);
  for (const auto& e : rp.fast_edges) {
    if (e == special_rel) continue;
    auto se = shift_e(e, base);
    double v = dist.inverse_cdf(base_field.uniform_at(se) * p_lo);
    a[se.encode()] = v;
    b[se.encode()] = v;
  }
  for (const auto& e : rp.slow_edges) {
    auto se = shift_e(e, base);
    double v = dist.inverse_cdf(p_hi + base_field.uniform_at(se) * (1 - p_hi));
    a[se.encode()] = v;
    b[se.encode()] = v;
  }
}

template <typename F>
void for_level_edges(const PeriodCell& cell, long long lvl, F&& f) {
  for (std::size_t i = 0; i < cell.intra.size(); ++i)
    f(EdgeRef{lvl, EdgeRef::Kind::Intra, static_cast<int>(i)});
  for (std::size_t j = 0; j < cell.inter.size(); ++j)
    f(EdgeRef{lvl, EdgeRef::Kind::Inter, static_cast<int>(j)});
}

// edges strictly between levels -m and m (intra at the boundary excluded)
template <typename F>
void for_inside_edges(const PeriodCell& cell, long long m, F&& f) {
  for (long long lvl = -m + 1; lvl <= m - 1; ++lvl)
    for (std::size_t i = 0; i < cell.intra.size(); ++i)
      f(EdgeRef{lvl, EdgeRef::Kind::Intra, static_cast<int>(i)});
  for (long long s = -m; s <= m - 1; ++s)
    for (std::size_t j = 0; j < cell.inter.size(); ++j)
      f(EdgeRef{s, EdgeRef::Kind::Inter, static_cast<int>(j)});
}

double marginal_p_value(const Distribution& dist, std::vector<double> sample) {
  if (sample.size() < 32) return 1.0;
  if (dist.is_discrete()) {
    const auto& atoms = dist.atoms();
    std::vector<double> counts(atoms.size(), 0.0);
    for (double x : sample) {
      for (std::size_t j = 0; j < atoms.size(); ++j)
        if (x == atoms[j].first) {
          counts[j] += 1;
          break;
        }
    }
    double stat = 0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      double exp_c = atoms[j].second * static_cast<double>(sample.size());
      stat += (counts[j] - exp_c) * (counts[j] - exp_c) / exp_c;
    }
    return chi2_sf(stat, static_cast<int>(atoms.size()) - 1);
  }
  return ks_test(std::move(sample), [&](double x) { return dist.cdf(x); }).p_value;
}

long long seed_radius(const std::vector<VertexRef>& I, const std::vector<VertexRef>& Ip) {
  long long m = 0;
  for (const auto& v : I) m = std::max(m, std::llabs(v.level));
  for (const auto& v : Ip) m = std::max(m, std::llabs(v.level));
  return m;
}

RegenParams coupling_params(const PeriodCell& cell, const Distribution& dist, bool discrete) {
  RegenParams rp = discrete ? choose_params_special(dist, cell) : auto_params(dist, cell);
  if (rp.pivot_exit.kind != EdgeRef::Kind::Inter || rp.pivot_entry.kind != EdgeRef::Kind::Inter)
    throw std::invalid_argument(
        "couple_infections: the canonical fast path changes row at the pivot level; "
        "only cells with a seam-crossing pivot edge are supported");
  return rp;
}

// T(I,v) - T'(I',v) once it has stabilized: the difference is constant across
// a whole slab of levels on the relevant side. Window doubles until both
// directions stabilize; the result feeds the delay walks.
struct StabilizedDelay {
  double pos = 0, neg = 0;
  long long span = 0;
};

StabilizedDelay stabilized_delay(const PeriodCell& cell, const WeightField& f,
                                 const WeightField& fp, const std::vector<VertexRef>& I,
                                 const std::vector<VertexRef>& Ip, long long m, int M) {
  const long long step = 2LL * M + 1;
  StabilizedDelay out;
  for (long long span = m + 4 * step + 8; span <= (1LL << 15); span *= 2) {
    Window w(cell, -2 * span, 2 * span);
    auto rf = dijkstra(w, f, I);
    auto rfp = dijkstra(w, fp, Ip);
    auto slab_constant = [&](long long lo, long long hi, double& value) {
      bool first = true;
      for (long long lvl = lo; lvl <= hi; ++lvl)
        for (int i = 1; i <= cell.K; ++i) {
          auto id = w.id({lvl, i});
          double d = rf.T[id] - rfp.T[id];
          if (first) {
            value = d;
            first = false;
          } else if (std::fabs(d - value) > 1e-9 * (1 + std::fabs(value))) {
            return false;
          }
        }
      return true;
    };
    if (slab_constant(span, span + 2 * M, out.pos) &&
        slab_constant(-span - 2 * M, -span, out.neg)) {
      out.span = span;
      return out;
    }
  }
  throw std::runtime_error(
      "couple_infections: travel-time difference failed to stabilize within the window cap");
}

CouplingReport trivial_report() {
  CouplingReport r;
  r.completed = true;
  r.N_c_level = 0;
  r.N_c_time = 0;
  r.equality_ok = true;
  r.marginal_ks_p = 1.0;
  return r;
}

// ---- Explicit tier: forced regenerative blocks, end-to-end verification ----

struct ExplicitDirResult {
  long long steps = 0;
  long long completion_level = 0;  // fields identical beyond (towards the sign)
};

CouplingReport run_explicit(const PeriodCell& cell, const Distribution& dist,
                            const std::vector<VertexRef>& I, const std::vector<VertexRef>& Ip,
                            std::uint64_t seed, const CouplingOptions& opts, bool discrete) {
  const RegenParams rp = coupling_params(cell, dist, discrete);
  const int M = rp.M;
  const long long step = 2LL * M + 1;
  const long long m = seed_radius(I, Ip);
  const double p_lo = dist.cdf(rp.t_lo);

  Direction pos{+1, m, step, rp.pivot_exit, kTagBlockPos, kTagWalkPos, kTagSkipPos};
  Direction neg{-1, -m - 2 * M, step, rp.pivot_entry, kTagBlockNeg, kTagWalkNeg, kTagSkipNeg};

  const WeightField base(dist, hash_combine(seed, kTagBase));
  WeightField::Overrides of, ofp;

  // the protected window carries independent weights in the two realizations
  const std::uint64_t inside_seed = hash_combine(seed, kTagInside);
  for_inside_edges(cell, m, [&](const EdgeRef& e) {
    ofp[e.encode()] = dist.inverse_cdf(u01(hash_combine(inside_seed, e.encode())));
  });

  force_a_star(dist, base, rp, pos.block_base(0), pos.special_rel, of, ofp);
  force_a_star(dist, base, rp, neg.block_base(0), neg.special_rel, of, ofp);

  // initial delay, anchored at the innermost pivots: under the forced blocks
  // the difference is already constant from these pivots outward, and the
  // window [-m-M, m+M] contains no special edge
  double td_pos, td_neg;
  {
    WeightField f = base.with_overrides(of), fp = base.with_overrides(ofp);
    Window w(cell, -m - M, m + M);
    VertexRef vpos = shift_v(rp.pivot, pos.block_base(0));
    VertexRef vneg = shift_v(rp.pivot, neg.block_base(0));
    auto rf = dijkstra(w, f, I, {vpos, vneg});
    auto rfp = dijkstra(w, fp, Ip, {vpos, vneg});
    td_pos = rf.T[w.id(vpos)] - rfp.T[w.id(vpos)];
    td_neg = rf.T[w.id(vneg)] - rfp.T[w.id(vneg)];
  }

  CouplingReport rep;
  rep.initial_delay = td_pos;

  // delay walk, conditioned on its direct descent: step j perturbs downward,
  // so exactly m0 (continuous) or k (discrete certificate) blocks are used.
  // The unconditioned walk law is exercised by the event-driven tier.
  auto run_direction = [&](const Direction& dir, double td) {
    ExplicitDirResult res;
    std::vector<std::pair<double, double>> pairs;  // (value in f, value in f')
    double t_delay = std::fabs(td);
    if (t_delay > 1e-12) {
      if (discrete) {
        auto cert = derive_certificate(dist, t_delay);
        if (!cert)
          throw std::invalid_argument(
              "couple_infections_discrete: the measured delay admits no equal-count atom "
              "exchange; neither parity condition certifies this instance");
        std::size_t hi_j = 0, lo_j = 0;
        long long k = 0;
        for (std::size_t j = 0; j < cert->n.size(); ++j) {
          if (cert->n[j] > 0) {
            hi_j = j;
            k = cert->n[j];
          }
          if (cert->n_prime[j] > 0) lo_j = j;
        }
        double hi_v = dist.atoms()[hi_j].first, lo_v = dist.atoms()[lo_j].first;
        for (long long j = 0; j < k; ++j) {
          pairs.emplace_back(td > 0 ? lo_v : hi_v, td > 0 ? hi_v : lo_v);
          if (dir.sign > 0) rep.walk_trajectory.push_back(k - 1 - j);
        }
      } else {
        Distribution trunc = Distribution::truncated_below(dist, rp.t_lo);
        auto fl = trunc.density_floor();
        if (!fl.valid)
          throw std::invalid_argument(
              "couple_infections_continuous: no analytic density floor on the conditional law");
        long long m0 = static_cast<long long>(std::ceil(2 * t_delay / (fl.b - fl.a)));
        double delta = t_delay / static_cast<double>(m0);
        Stream wst(hash_combine(seed, dir.walk_tag));
        for (long long j = 0; j < m0; ++j) {
          double tau = fl.a + delta * (1 + wst.next());  // upper half: reflects downward
          double tau_p = tau - delta;
          pairs.emplace_back(td > 0 ? tau_p : tau, td > 0 ? tau : tau_p);
          if (dir.sign > 0) rep.walk_trajectory.push_back(m0 - 1 - j);
        }
      }
    }
    res.steps = static_cast<long long>(pairs.size());
    rep.walk_steps += res.steps;
    if (res.steps > opts.max_blocks)
      throw std::runtime_error("couple_infections: delay walk exceeds the block budget");

    for (long long k = 0; k < res.steps; ++k) {
      long long b = dir.block_base(k);
      if (k > 0) force_a_star(dist, base, rp, b, dir.special_rel, of, ofp);
      auto se = shift_e(dir.special_rel, b);
      of[se.encode()] = pairs[static_cast<std::size_t>(k)].first;
      ofp[se.encode()] = pairs[static_cast<std::size_t>(k)].second;
    }
    // two bracketing blocks past completion, with identical special values
    for (long long k = res.steps; k < res.steps + 2; ++k) {
      long long b = dir.block_base(k);
      force_a_star(dist, base, rp, b, dir.special_rel, of, ofp);
      if (!discrete) {
        auto se = shift_e(dir.special_rel, b);
        double v = dist.inverse_cdf(base.uniform_at(se) * p_lo);
        of[se.encode()] = v;
        ofp[se.encode()] = v;
      }
    }
    rep.blocks_consumed += res.steps;
    // splitting at the first bracket block guarantees equality past its far
    // side: level base+2M going up, level base going down
    res.completion_level =
        dir.sign > 0 ? dir.block_base(res.steps) + 2 * M : dir.block_base(res.steps);
    return res;
  };

  auto pres = run_direction(pos, td_pos);
  auto nres = run_direction(neg, td_neg);
  rep.N_c_level = pres.completion_level;

  // end-to-end verification on independently built fields
  const long long pad = 2 * step + 20;
  const long long hi = pres.completion_level + opts.verify_levels + pad;
  const long long lo = nres.completion_level - opts.verify_levels - pad;
  WeightField f = base.with_overrides(of), fp = base.with_overrides(ofp);
  Window w(cell, lo, hi);
  auto rf = dijkstra(w, f, I);
  auto rfp = dijkstra(w, fp, Ip);

  auto levels_equal = [&](long long from, long long to) {
    for (long long lvl = from; lvl <= to; ++lvl)
      for (int i = 1; i <= cell.K; ++i) {
        auto id = w.id({lvl, i});
        double a = rf.T[id], b = rfp.T[id];
        if (discrete ? (a != b) : (std::fabs(a - b) > 1e-9 * (1 + std::fabs(a)))) return false;
      }
    return true;
  };
  bool eq_pos = levels_equal(pres.completion_level, pres.completion_level + opts.verify_levels);
  bool eq_neg = levels_equal(nres.completion_level - opts.verify_levels, nres.completion_level);
  bool eq = eq_pos && eq_neg;
  rep.verified_levels = opts.verify_levels + 1;

  // time from which the infected sets themselves coincide: both infections
  // must have swallowed the whole disagreement zone between the completion
  // pivots
  double nct = 0;
  for (long long lvl = nres.completion_level; lvl <= pres.completion_level; ++lvl)
    for (int i = 1; i <= cell.K; ++i) {
      auto id = w.id({lvl, i});
      nct = std::max(nct, std::max(rf.T[id], rfp.T[id]));
    }
  rep.N_c_time = nct;

  // probe the infected sets at times beyond N_c but before either infection
  // can feel the window boundary
  double guard = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= cell.K; ++i) {
    guard = std::min(guard, std::min(rf.T[w.id({lo, i})], rfp.T[w.id({lo, i})]));
    guard = std::min(guard, std::min(rf.T[w.id({hi, i})], rfp.T[w.id({hi, i})]));
  }
  guard *= 0.95;
  if (guard > nct) {
    for (int j = 1; j <= 5 && eq; ++j) {
      double t = nct + (guard - nct) * j / 6.0;
      for (std::size_t id = 0; id < w.size() && eq; ++id)
        if ((rf.T[id] <= t) != (rfp.T[id] <= t)) eq = false;
    }
  }
  rep.equality_ok = eq;
  rep.completed = true;

  // marginal check over unconditioned edges (conditioned blocks are a
  // documented deviation of this tier; the event-driven tier validates the
  // construction's true marginals)
  std::vector<double> sf, sfp;
  for (long long lvl = lo; lvl <= hi &&
       sf.size() < static_cast<std::size_t>(opts.marginal_sample); ++lvl) {
    for_level_edges(cell, lvl, [&](const EdgeRef& e) {
      bool in_f = of.count(e.encode()) > 0, in_fp = ofp.count(e.encode()) > 0;
      if (!in_f) sf.push_back(f.weight(e));
      if (!in_fp || (in_fp && !in_f)) sfp.push_back(fp.weight(e));  // E_m draws are genuine
    });
  }
  rep.marginal_ks_p = std::min(marginal_p_value(dist, std::move(sf)),
                               marginal_p_value(dist, std::move(sfp)));
  return rep;
}

// ---- Event-driven tier: the coupling's exact law, no field materialized ----

CouplingReport run_event(const PeriodCell& cell, const Distribution& dist,
                         const std::vector<VertexRef>& I, const std::vector<VertexRef>& Ip,
                         std::uint64_t seed, const CouplingOptions& opts, bool discrete) {
  const RegenParams rp = coupling_params(cell, dist, discrete);
  const int M = rp.M;
  const long long step = 2LL * M + 1;
  const long long m_seed = seed_radius(I, Ip);
  const double p_lo = dist.cdf(rp.t_lo);
  const double p_star = rp.p_block / p_lo;  // A* drops the special fast edge
  const double p_consume = discrete ? p_star : p_star * p_lo;  // blocks advancing the walk

  const WeightField base(dist, hash_combine(seed, kTagBase));
  WeightField::Overrides inside;
  const std::uint64_t inside_seed = hash_combine(seed, kTagInside);
  for_inside_edges(cell, m_seed, [&](const EdgeRef& e) {
    inside[e.encode()] = dist.inverse_cdf(u01(hash_combine(inside_seed, e.encode())));
  });
  const WeightField fp_nat = base.with_overrides(inside);

  auto stab = stabilized_delay(cell, base, fp_nat, I, Ip, m_seed, M);
  const long long m_eff = stab.span + 2 * M + 1;  // special-edge lattice starts beyond the slab

  Direction pos{+1, m_eff, step, rp.pivot_exit, kTagBlockPos, kTagWalkPos, kTagSkipPos};
  Direction neg{-1, -m_eff - 2 * M, step, rp.pivot_entry, kTagBlockNeg, kTagWalkNeg, kTagSkipNeg};

  CouplingReport rep;
  rep.initial_delay = stab.pos;

  // special-edge values assigned in the scanned prefix, for the marginal check
  std::unordered_map<std::uint64_t, std::pair<double, double>> special_vals;

  const long long edges_per_level = cell.L() + static_cast<long long>(cell.inter.size());
  const long long sample_levels =
      (static_cast<long long>(opts.marginal_sample) + edges_per_level - 1) / edges_per_level;
  const long long scan_blocks = sample_levels / step + 8;

  long double total_blocks = 0;
  bool all_done = true;
  long long completion_pos = 0, completion_neg = 0;

  auto run_direction = [&](const Direction& dir, double td, long long& completion) {
    double t_delay = std::fabs(td);
    Stream wst(hash_combine(seed, dir.walk_tag));
    Stream skip(hash_combine(seed, dir.skip_tag));

    // walk state
    long long mult = 0;
    std::vector<long long> Z;
    double delta = 0, p_perturb = 0;
    Distribution trunc = dist;  // placeholder; rebound below for the continuous case
    Distribution::DensityFloor fl{};
    std::size_t hi_j = 0, lo_j = 0;
    if (discrete) {
      auto cert = derive_certificate(dist, t_delay);
      if (!cert)
        throw std::invalid_argument(
            "couple_infections_discrete: the measured delay admits no equal-count atom "
            "exchange; neither parity condition certifies this instance");
      Z.assign(cert->n.size(), 0);
      for (std::size_t j = 0; j < cert->n.size(); ++j) {
        Z[j] = cert->n_prime[j] - cert->n[j];
        if (cert->n[j] > 0) hi_j = j;
        if (cert->n_prime[j] > 0) lo_j = j;
      }
      (void)hi_j;
      (void)lo_j;
    } else if (t_delay > 1e-12) {
      trunc = Distribution::truncated_below(dist, rp.t_lo);
      fl = trunc.density_floor();
      if (!fl.valid)
        throw std::invalid_argument(
            "couple_infections_continuous: no analytic density floor on the conditional law");
      mult = static_cast<long long>(std::ceil(2 * t_delay / (fl.b - fl.a)));
      delta = t_delay / static_cast<double>(mult);
      p_perturb = std::min(1.0, 2 * fl.c * delta);
    }
    bool done = discrete ? std::all_of(Z.begin(), Z.end(), [](long long z) { return z == 0; })
                         : mult == 0;

    auto residual_draw = [&]() {
      while (true) {
        double x = trunc.inverse_cdf(wst.next());
        if (x < fl.a || x > fl.a + 2 * delta) return x;
        if (wst.next() * trunc.density(x) >= fl.c) return x;
      }
    };
    // one walk step; returns the coupled pair as (field, field') per the sign
    auto walk_step = [&]() {
      double tau, tau_p;
      if (discrete) {
        const auto& atoms = dist.atoms();
        std::vector<std::size_t> active, passive;
        double q = 0;
        for (std::size_t j = 0; j < atoms.size(); ++j) {
          if (Z[j] != 0) {
            active.push_back(j);
            q += atoms[j].second;
          } else {
            passive.push_back(j);
          }
        }
        auto draw_from = [&](const std::vector<std::size_t>& idx, double total) {
          double u = wst.next() * total, cum = 0;
          for (auto j : idx) {
            cum += atoms[j].second;
            if (u <= cum) return j;
          }
          return idx.back();
        };
        if (wst.next() < 1.0 - q) {
          std::size_t j = draw_from(passive, 1.0 - q);
          tau = tau_p = atoms[j].first;
        } else {
          std::size_t jt = draw_from(active, q);
          std::size_t jp = draw_from(active, q);
          tau = atoms[jt].first;
          tau_p = atoms[jp].first;
          Z[jt] += 1;
          Z[jp] -= 1;
        }
        done = std::all_of(Z.begin(), Z.end(), [](long long z) { return z == 0; });
        if (dir.sign > 0 && rep.walk_trajectory.size() < 100'000) {
          long long tot = 0;
          for (auto z : Z) tot += std::llabs(z);
          rep.walk_trajectory.push_back(tot);
        }
      } else {
        if (wst.next() < p_perturb) {
          tau = fl.a + 2 * delta * wst.next();
          tau_p = tau <= fl.a + delta ? tau + delta : tau - delta;
          mult += tau_p > tau ? 1 : -1;
        } else {
          tau = residual_draw();
          tau_p = tau;
        }
        done = mult == 0;
        if (dir.sign > 0 && rep.walk_trajectory.size() < 100'000)
          rep.walk_trajectory.push_back(mult);
      }
      // the walk's tau-sequence leads by T_delay; the lagging infection gets it
      return td > 0 ? std::make_pair(tau_p, tau) : std::make_pair(tau, tau_p);
    };

    long long steps = 0;
    long double blocks = 0;
    long long done_block = done ? -1 : -2;

    // scanned prefix: real block statuses from the base field
    for (long long k = 0; k < scan_blocks; ++k) {
      long long b = dir.block_base(k);
      auto se = shift_e(dir.special_rel, b);
      Stream bst(hash_combine(hash_combine(seed, dir.block_tag), static_cast<std::uint64_t>(k)));
      double d1 = bst.next(), d2 = bst.next();
      double vf, vfp;
      if (!a_star_holds(base, rp, b, dir.special_rel)) {
        vf = vfp = dist.inverse_cdf(d2);
      } else if (discrete || d1 < p_lo) {
        if (!done) {
          auto pr = walk_step();
          ++steps;
          vf = pr.first;
          vfp = pr.second;
          if (done) done_block = k;
        } else {
          vf = vfp = discrete ? dist.inverse_cdf(d2) : dist.inverse_cdf(d2 * p_lo);
        }
      } else {
        vf = vfp = dist.inverse_cdf(p_lo + d2 * (1 - p_lo));
      }
      special_vals[se.encode()] = {vf, vfp};
    }
    blocks = scan_blocks;

    // beyond the prefix: geometric gaps between walk-consuming blocks
    while (!done && steps < opts.max_walk_steps) {
      double u = skip.next();
      long double gap = std::floor(std::log(u) / std::log1p(-p_consume)) + 1;
      blocks += gap;
      auto pr = walk_step();
      (void)pr;
      ++steps;
      if (done) done_block = static_cast<long long>(std::min<long double>(
                    blocks, static_cast<long double>(kLevelSaturation)));
    }
    rep.walk_steps += steps;
    total_blocks += blocks;
    if (!done) {
      all_done = false;
      completion = kLevelSaturation;
      return;
    }
    long double lvl = static_cast<long double>(m_eff) +
                      (static_cast<long double>(done_block < 0 ? 0 : done_block) + 1) *
                          static_cast<long double>(step);
    completion = static_cast<long long>(std::min<long double>(
        lvl, static_cast<long double>(kLevelSaturation)));
  };

  run_direction(pos, stab.pos, completion_pos);
  run_direction(neg, stab.neg, completion_neg);

  rep.completed = all_done;
  rep.N_c_level = std::max(completion_pos, completion_neg);
  rep.N_c_time = -1;
  rep.blocks_consumed = static_cast<long long>(
      std::min<long double>(total_blocks, static_cast<long double>(kLevelSaturation)));

  // marginal validation over the scanned prefix, special edges included
  std::vector<double> sf, sfp;
  for (long long lvl = m_eff;
       sf.size() < static_cast<std::size_t>(opts.marginal_sample); ++lvl) {
    for_level_edges(cell, lvl, [&](const EdgeRef& e) {
      auto it = special_vals.find(e.encode());
      if (it != special_vals.end()) {
        sf.push_back(it->second.first);
        sfp.push_back(it->second.second);
      } else {
        double v = base.weight(e);
        sf.push_back(v);
        sfp.push_back(v);
      }
    });
  }
  rep.marginal_ks_p = std::min(marginal_p_value(dist, std::move(sf)),
                               marginal_p_value(dist, std::move(sfp)));
  return rep;
}

CouplingReport run_coupling(const PeriodCell& cell, const Distribution& dist,
                            const std::vector<VertexRef>& I, const std::vector<VertexRef>& Ip,
                            std::uint64_t seed, const CouplingOptions& opts, bool discrete) {
  if (I.empty() || Ip.empty())
    throw std::invalid_argument("couple_infections: empty seed set");
  auto a = I, b = Ip;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a == b) return trivial_report();
  if (opts.mode == CouplingMode::EventDriven)
    return run_event(cell, dist, I, Ip, seed, opts, discrete);
  return run_explicit(cell, dist, I, Ip, seed, opts, discrete);
}

}  // namespace

CouplingReport couple_infections_continuous(const PeriodCell& cell, const Distribution& dist,
                                            const std::vector<VertexRef>& I,
                                            const std::vector<VertexRef>& I_prime,
                                            std::uint64_t seed, const CouplingOptions& opts) {
  if (!dist.has_density_component())
    throw std::invalid_argument(
        "couple_infections_continuous: distribution needs a density component");
  return run_coupling(cell, dist, I, I_prime, seed, opts, false);
}

CouplingReport couple_infections_discrete(const PeriodCell& cell, const Distribution& dist,
                                          const std::vector<VertexRef>& I,
                                          const std::vector<VertexRef>& I_prime,
                                          std::uint64_t seed, const CouplingOptions& opts) {
  if (!dist.is_discrete())
    throw std::invalid_argument(
        "couple_infections_discrete: purely discrete distribution required");
  return run_coupling(cell, dist, I, I_prime, seed, opts, true);
}

TreeDemoResult tree_branching_demo(double rate, double t_max, int replicas, std::uint64_t seed,
                                   long long population_guard) {
  if (!(rate > 0) || !(t_max > 0) || replicas < 2)
    throw std::invalid_argument("tree_branching_demo: bad arguments");
  // truncate the horizon so the expected frontier stays under the guard
  double horizon = t_max;
  double expect = 3.0 * std::exp(rate * horizon);
  if (expect > static_cast<double>(population_guard) / 10.0)
    horizon = std::log(static_cast<double>(population_guard) / 30.0) / rate;

  const int grid = 24;
  std::vector<double> tg(grid);
  for (int i = 0; i < grid; ++i)
    tg[static_cast<std::size_t>(i)] = horizon * (0.4 + 0.6 * (i + 1) / grid);

  std::vector<double> front_sum(grid, 0.0);
  std::vector<double> final_front(static_cast<std::size_t>(replicas));
  for (int r = 0; r < replicas; ++r) {
    Stream st(derive_seed(seed, static_cast<std::size_t>(r)));
    // frontier of the infection on the degree-3 tree: pure birth from F_0 = 3
    double t = 0;
    long long F = 3;
    std::size_t gi = 0;
    while (true) {
      double wait = -std::log(st.next()) / (rate * static_cast<double>(F));
      double t_next = t + wait;
      while (gi < static_cast<std::size_t>(grid) && tg[gi] < t_next) {
        front_sum[gi] += static_cast<double>(F);
        ++gi;
      }
      if (t_next >= horizon || gi >= static_cast<std::size_t>(grid)) break;
      t = t_next;
      ++F;
      if (F >= population_guard) break;
    }
    while (gi < static_cast<std::size_t>(grid)) {
      front_sum[gi] += static_cast<double>(F);
      ++gi;
    }
    final_front[static_cast<std::size_t>(r)] = static_cast<double>(F);
  }

  TreeDemoResult out;
  out.replicas = replicas;
  // Malthusian rate from the slope of log mean frontier (least squares)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < grid; ++i) {
    double x = tg[static_cast<std::size_t>(i)];
    double y = std::log(front_sum[static_cast<std::size_t>(i)] / replicas);
    out.log_mean_front.emplace_back(x, y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.lambda_hat = (grid * sxy - sx * sy) / (grid * sxx - sx * sx);

  std::vector<double> W(final_front);
  for (auto& x : W) x *= std::exp(-out.lambda_hat * horizon);
  out.mean_W = mean(W);
  out.se_W = std::sqrt(sample_variance(W) / replicas);
  out.var_W = sample_variance(W);

  Stream st(hash_combine(seed, 0x7472656544656dULL));
  std::vector<double> boots;
  std::vector<double> resample(W.size());
  for (int b = 0; b < 500; ++b) {
    for (auto& x : resample)
      x = W[static_cast<std::size_t>(st.next() * static_cast<double>(W.size()))];
    boots.push_back(sample_variance(resample));
  }
  std::sort(boots.begin(), boots.end());
  out.var_W_ci_lo = boots[static_cast<std::size_t>(0.025 * boots.size())];
  out.var_W_ci_hi = boots[static_cast<std::size_t>(0.975 * boots.size())];
  return out;
}

}  // namespace fpp
