#pragma once
#include <cstdint>
#include <limits>
#include <vector>

#include "fpp/field.hpp"
#include "fpp/graph.hpp"

namespace fpp {

// Windowed lexicographic Dijkstra: distances minimize (T, N), i.e. passage
// time first, edge count second. parent records one optimal predecessor
// (id + 1; 0 = source/unreached).
struct DijkstraResult {
  std::vector<double> T;
  std::vector<long long> N;
  std::vector<std::uint32_t> parent;
  std::vector<std::uint8_t> done;
  bool reached(std::size_t id) const { return done[id] != 0; }
};

// sources all start at (0, 0); expansion stops once every target is finalized
// (if targets nonempty) or once popped T exceeds stop_beyond
DijkstraResult dijkstra(const Window& w, const WeightField& f,
                        const std::vector<VertexRef>& sources,
                        const std::vector<VertexRef>& targets = {},
                        double stop_beyond = std::numeric_limits<double>::infinity());

enum class Certificate {
  Overlap,        // source and target sets intersect: T = 0
  GrowthBound,    // m_tau > 0: any path leaving the window is too expensive
  RegenBracket,   // regeneration blocks found on both sides of the query
  None,           // window cap reached without certification
};

struct TravelTime {
  double T = 0;
  long long N = 0;
  long long window_lo = 0, window_hi = 0;
  bool certified = false;
  Certificate certificate = Certificate::None;
};

struct CertifyOptions {
  // regeneration bracket scan budget per side, in levels; <=0 means choose
  // automatically from the estimated block probability
  long long max_scan_levels = 0;
  // growth-bound window cap (levels beyond the query span)
  long long max_growth_levels = 1 << 22;
  double quantile_hint = 0;  // 0 = optimize the block parameters automatically
};

// T(U, V) between vertex sets, with a certified finite window whenever one is
// attainable within budget
TravelTime travel_time(const PeriodCell& cell, const WeightField& f,
                       const std::vector<VertexRef>& from, const std::vector<VertexRef>& to,
                       const CertifyOptions& opts = {});

inline TravelTime travel_time(const PeriodCell& cell, const WeightField& f, VertexRef u,
                              VertexRef v, const CertifyOptions& opts = {}) {
  return travel_time(cell, f, std::vector<VertexRef>{u}, std::vector<VertexRef>{v}, opts);
}

// canonical geodesic: minimal T, then minimal edge count, then lexicographically
// smallest vertex sequence; unique for a fixed field
struct Geodesic {
  std::vector<VertexRef> vertices;
  double T = 0;
  long long N = 0;
  long long window_lo = 0, window_hi = 0;
  bool certified = false;
};

Geodesic geodesic(const PeriodCell& cell, const WeightField& f, VertexRef u, VertexRef v,
                  const CertifyOptions& opts = {});

// canonical geodesic restricted to a caller-certified window
Geodesic geodesic_in_window(const PeriodCell& cell, const WeightField& f, VertexRef u,
                            VertexRef v, long long window_lo, long long window_hi,
                            bool certified = false);

// B_t: all vertices within passage time t of the seed set I
struct InfectedSet {
  std::vector<VertexRef> vertices;  // sorted
  long long window_lo = 0, window_hi = 0;
  bool certified = false;
};

InfectedSet infected_set(const PeriodCell& cell, const WeightField& f,
                         const std::vector<VertexRef>& seeds, double t,
                         const CertifyOptions& opts = {});

// exhaustive simple-path enumeration within [window_lo, window_hi]; test
// oracle only. Throws if the search exceeds the step guard.
double brute_force_travel_time(const PeriodCell& cell, const WeightField& f, VertexRef u,
                               VertexRef v, long long window_lo, long long window_hi,
                               long long max_steps = 100'000'000);

}  // namespace fpp
