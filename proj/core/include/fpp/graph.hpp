#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fpp {

// vertex v_{n,i}: level n in Z, index i in [1, K]
struct VertexRef {
  long long level = 0;
  int index = 1;
  friend bool operator==(const VertexRef&, const VertexRef&) = default;
  friend auto operator<=>(const VertexRef& a, const VertexRef& b) {
    if (auto c = a.level <=> b.level; c != 0) return c;
    return a.index <=> b.index;
  }
};

// canonical edge identity; admits a stable integer encoding (RNG stream key)
struct EdgeRef {
  enum class Kind : int { Intra = 0, Inter = 1 };
  long long level = 0;  // intra: its level; inter: the seam level -> level+1
  Kind kind = Kind::Intra;
  int idx = 0;  // position in the cell's intra / inter list

  std::uint64_t encode() const {
    std::uint64_t zz = (static_cast<std::uint64_t>(level) << 1) ^
                       static_cast<std::uint64_t>(level >> 63);
    return (zz << 22) | (static_cast<std::uint64_t>(kind) << 21) |
           static_cast<std::uint64_t>(idx);
  }
  friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
};

// The repeated cell: K vertices per level, intra edges E_{G_n}, and the
// inter-level connection set J (ordered pairs: index at level n, index at n+1).
struct PeriodCell {
  int K = 1;
  std::vector<std::pair<int, int>> intra;  // unordered pairs, stored i < j, sorted
  std::vector<std::pair<int, int>> inter;  // J, sorted

  int L() const { return static_cast<int>(intra.size()); }

  std::pair<VertexRef, VertexRef> endpoints(const EdgeRef& e) const {
    if (e.kind == EdgeRef::Kind::Intra) {
      auto [i, j] = intra[static_cast<std::size_t>(e.idx)];
      return {{e.level, i}, {e.level, j}};
    }
    auto [i, j] = inter[static_cast<std::size_t>(e.idx)];
    return {{e.level, i}, {e.level + 1, j}};
  }
};

// validates invariants (index ranges, no self-loops/duplicates, connected
// infinite graph); throws std::invalid_argument
PeriodCell make_cell(int K, std::vector<std::pair<int, int>> intra,
                     std::vector<std::pair<int, int>> inter);

// Z x {0..K-1}^{d-1} nearest-neighbour graph
PeriodCell build_tube(int K, int d);
// Z x Z_K^{d-1} nearest-neighbour graph (torus cross-section); K >= 3
PeriodCell build_cylinder(int K, int d);

// JSON document {"K":..., "intra_edges":[[i,j],...], "J":[[i,j],...]}, 1-based
PeriodCell cell_from_json(const std::string& json_text);
PeriodCell cell_from_file(const std::string& path);

// minimum-edge-count path from level n to level n+span, restricted to the
// block [n, n+span]; deterministic lexicographic tie-break
std::vector<VertexRef> shortest_cell_path(const PeriodCell& cell, long long n, int span);

// maximum number of pairwise edge-disjoint paths between (0,i0) and (span,i1),
// by unit-capacity max-flow on the window spanning the vertices plus guards
int disjoint_path_count(const PeriodCell& cell, int span, int i0 = 1, int i1 = 1);

// vertex indexing over the finite window of levels [lo, hi]
class Window {
 public:
  Window(const PeriodCell& cell, long long lo, long long hi);
  long long lo() const { return lo_; }
  long long hi() const { return hi_; }
  const PeriodCell& cell() const { return *cell_; }
  std::size_t size() const { return n_; }
  bool contains(const VertexRef& v) const {
    return v.level >= lo_ && v.level <= hi_ && v.index >= 1 && v.index <= cell_->K;
  }
  std::size_t id(const VertexRef& v) const {
    return static_cast<std::size_t>(v.level - lo_) * static_cast<std::size_t>(cell_->K) +
           static_cast<std::size_t>(v.index - 1);
  }
  VertexRef vertex(std::size_t id) const {
    long long k = static_cast<long long>(cell_->K);
    return {lo_ + static_cast<long long>(id) / k, static_cast<int>(id % static_cast<std::size_t>(k)) + 1};
  }

  // enumerate edges incident to v that stay inside the window
  template <typename F>
  void for_each_incident(const VertexRef& v, F&& f) const {
    for (const auto& a : adj_[static_cast<std::size_t>(v.index - 1)]) {
      long long nl = v.level + a.dlevel;
      if (nl < lo_ || nl > hi_) continue;
      f(VertexRef{nl, a.nbr_index},
        EdgeRef{v.level + a.edge_dlevel, a.kind, a.idx});
    }
  }

 private:
  struct Adj {
    int nbr_index;
    int dlevel;       // 0 intra, +1/-1 inter
    int edge_dlevel;  // seam level offset: 0 except -1 for backward inter
    EdgeRef::Kind kind;
    int idx;
  };
  const PeriodCell* cell_;
  long long lo_, hi_;
  std::size_t n_;
  std::vector<std::vector<Adj>> adj_;  // by index-1
};

}  // namespace fpp
