#include "anderson/topology.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>

#include "anderson/error.hpp"
#include "anderson/rng.hpp"

namespace anderson {

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::lattice: return "lattice";
    case TopologyKind::bethe: return "bethe";
    case TopologyKind::delone: return "delone";
  }
  return "?";
}

std::string to_string(Boundary boundary) {
  return boundary == Boundary::open ? "open" : "periodic";
}

namespace {

std::vector<std::size_t> make_strides(const std::vector<int>& sides) {
  std::vector<std::size_t> strides(sides.size());
  std::size_t s = 1;
  for (std::size_t k = sides.size(); k-- > 0;) {
    strides[k] = s;
    s *= static_cast<std::size_t>(sides[k]);
  }
  return strides;
}

void validate_sides(const std::vector<int>& sides) {
  if (sides.empty()) throw ValidationError("lattice: at least one dimension is required");
  for (int s : sides) {
    if (s < 1) throw ValidationError("lattice: every side must be >= 1, got " + std::to_string(s));
  }
}

}  // namespace

Topology Topology::lattice(std::vector<int> sides, Boundary boundary) {
  validate_sides(sides);
  if (boundary == Boundary::periodic) {
    for (int s : sides) {
      if (s < 3) {
        throw ValidationError("lattice: periodic boundary needs every side >= 3 (got " +
                              std::to_string(s) + "); smaller wraps create loops or double edges");
      }
    }
  }
  Topology t;
  t.kind_ = TopologyKind::lattice;
  t.sides_ = std::move(sides);
  t.strides_ = make_strides(t.sides_);
  t.boundary_ = boundary;

  std::size_t n = 1;
  for (int s : t.sides_) n *= static_cast<std::size_t>(s);
  t.neighbors_.assign(n, {});
  const int d = t.dimension();
  for (VertexId v = 0; v < n; ++v) {
    auto c = t.coordinates(v);
    auto& nb = t.neighbors_[v];
    for (int k = 0; k < d; ++k) {
      const int side = t.sides_[k];
      for (int step : {-1, +1}) {
        int ck = c[k] + step;
        if (ck < 0 || ck >= side) {
          if (boundary == Boundary::open) continue;
          ck = (ck + side) % side;
        }
        nb.push_back(v + (static_cast<std::ptrdiff_t>(ck) - c[k]) *
                             static_cast<std::ptrdiff_t>(t.strides_[k]));
      }
    }
    std::sort(nb.begin(), nb.end());
  }
  t.mask_.assign(n, true);
  t.finalize();
  return t;
}

Topology Topology::bethe(int branching, int depth, std::size_t vertex_cap) {
  if (branching < 2) throw ValidationError("bethe: branching K must be >= 2");
  if (depth < 0) throw ValidationError("bethe: depth must be >= 0");
  std::size_t n = 0;
  std::size_t level = 1;
  for (int j = 0; j <= depth; ++j) {
    n += level;
    if (n > vertex_cap) {
      throw BudgetError("bethe: K=" + std::to_string(branching) + ", depth=" +
                        std::to_string(depth) + " exceeds the vertex cap " +
                        std::to_string(vertex_cap));
    }
    level *= static_cast<std::size_t>(branching);
  }
  Topology t;
  t.kind_ = TopologyKind::bethe;
  t.branching_ = branching;
  t.depth_ = depth;
  t.neighbors_.assign(n, {});
  const std::size_t k = static_cast<std::size_t>(branching);
  for (VertexId v = 1; v < n; ++v) {
    const VertexId p = (v - 1) / k;
    t.neighbors_[v].push_back(p);
    t.neighbors_[p].push_back(v);
  }
  for (auto& nb : t.neighbors_) std::sort(nb.begin(), nb.end());
  t.mask_.assign(n, true);
  t.finalize();
  return t;
}

Topology Topology::delone(std::vector<int> sides, int radius, std::uint64_t seed) {
  validate_sides(sides);
  if (radius < 0) throw ValidationError("delone: R must be >= 0");
  for (int s : sides) {
    if (radius > s) {
      throw ValidationError("delone: R=" + std::to_string(radius) + " exceeds side " +
                            std::to_string(s));
    }
  }
  Topology t = lattice(sides, Boundary::open);
  t.kind_ = TopologyKind::delone;
  t.radius_ = radius;
  t.seed_ = seed;

  // Cells of side R+1: any window of side 2R+1 inside the domain contains a
  // whole (possibly edge-truncated) cell, hence an active site.
  const int cell = radius + 1;
  const int d = t.dimension();
  std::vector<int> cells_per_axis(d);
  std::size_t cell_count = 1;
  for (int k = 0; k < d; ++k) {
    cells_per_axis[k] = (t.sides_[k] + cell - 1) / cell;
    cell_count *= static_cast<std::size_t>(cells_per_axis[k]);
  }
  t.mask_.assign(t.vertex_count(), false);
  std::vector<int> coord(d);
  for (std::size_t c = 0; c < cell_count; ++c) {
    std::size_t rest = c;
    CounterStream stream(hash_keys(seed, 0x64656c6f6e65ULL, c));
    for (int k = d; k-- > 0;) {
      const int idx = static_cast<int>(rest % cells_per_axis[k]);
      rest /= cells_per_axis[k];
      const int lo = idx * cell;
      const int width = std::min(cell, t.sides_[k] - lo);
      coord[k] = lo;
      coord[k] += static_cast<int>(stream.below(static_cast<std::uint64_t>(width)));
    }
    t.mask_[t.vertex_at(coord)] = true;
  }
  return t;
}

void Topology::finalize() {
  max_degree_ = 0;
  for (const auto& nb : neighbors_) max_degree_ = std::max(max_degree_, nb.size());
}

std::size_t Topology::degree_bound() const noexcept {
  if (kind_ == TopologyKind::bethe) return static_cast<std::size_t>(branching_) + 1;
  return 2 * sides_.size();
}

bool Topology::adjacent(VertexId x, VertexId y) const {
  const auto& nb = neighbors_[x];
  return std::binary_search(nb.begin(), nb.end(), y);
}

std::vector<int> Topology::coordinates(VertexId v) const {
  if (kind_ == TopologyKind::bethe) throw ValidationError("coordinates: tree vertices have no lattice coordinates");
  std::vector<int> c(sides_.size());
  for (std::size_t k = 0; k < sides_.size(); ++k) {
    c[k] = static_cast<int>((v / strides_[k]) % static_cast<std::size_t>(sides_[k]));
  }
  return c;
}

VertexId Topology::vertex_at(std::span<const int> coords) const {
  if (coords.size() != sides_.size()) throw ValidationError("vertex_at: coordinate dimension mismatch");
  VertexId v = 0;
  for (std::size_t k = 0; k < sides_.size(); ++k) {
    if (coords[k] < 0 || coords[k] >= sides_[k]) throw ValidationError("vertex_at: coordinate out of range");
    v += static_cast<std::size_t>(coords[k]) * strides_[k];
  }
  return v;
}

int Topology::depth_of(VertexId v) const {
  int depth = 0;
  const std::size_t k = static_cast<std::size_t>(branching_);
  while (v > 0) {
    v = (v - 1) / k;
    ++depth;
  }
  return depth;
}

VertexId Topology::parent(VertexId v) const {
  if (v == 0) throw ValidationError("parent: the root has no parent");
  return (v - 1) / static_cast<std::size_t>(branching_);
}

std::vector<VertexId> Topology::children(VertexId v) const {
  std::vector<VertexId> out;
  const std::size_t k = static_cast<std::size_t>(branching_);
  for (std::size_t j = 1; j <= k; ++j) {
    const VertexId c = k * v + j;
    if (c < vertex_count()) out.push_back(c);
  }
  return out;
}

void Topology::set_mask(std::vector<bool> mask) {
  if (mask.size() != vertex_count()) throw ValidationError("set_mask: size mismatch");
  mask_ = std::move(mask);
}

std::size_t Topology::distance(VertexId x, VertexId y) const {
  if (kind_ == TopologyKind::bethe) {
    const std::size_t k = static_cast<std::size_t>(branching_);
    int dx = depth_of(x);
    int dy = depth_of(y);
    std::size_t steps = 0;
    while (dx > dy) { x = (x - 1) / k; --dx; ++steps; }
    while (dy > dx) { y = (y - 1) / k; --dy; ++steps; }
    while (x != y) {
      x = (x - 1) / k;
      y = (y - 1) / k;
      steps += 2;
    }
    return steps;
  }
  const auto cx = coordinates(x);
  const auto cy = coordinates(y);
  std::size_t sup = 0;
  std::size_t l1 = 0;
  for (std::size_t k = 0; k < cx.size(); ++k) {
    std::size_t diff = static_cast<std::size_t>(std::abs(cx[k] - cy[k]));
    if (boundary_ == Boundary::periodic) {
      diff = std::min(diff, static_cast<std::size_t>(sides_[k]) - diff);
    }
    sup = std::max(sup, diff);
    l1 += diff;
  }
  // Breadth-first length on the open nearest-neighbour grid is the l1 norm.
  return kind_ == TopologyKind::delone ? l1 : sup;
}

std::size_t Topology::box_distance(VertexId x, VertexId y) const {
  if (kind_ != TopologyKind::delone) return distance(x, y);
  const auto cx = coordinates(x);
  const auto cy = coordinates(y);
  std::size_t sup = 0;
  for (std::size_t k = 0; k < cx.size(); ++k) {
    sup = std::max(sup, static_cast<std::size_t>(std::abs(cx[k] - cy[k])));
  }
  return sup;
}

std::vector<Edge> Topology::edges() const {
  std::vector<Edge> out;
  for (VertexId u = 0; u < vertex_count(); ++u) {
    for (VertexId v : neighbors_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Region::Region(std::vector<VertexId> vs) : vertices(std::move(vs)) {
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
}

bool Region::contains(VertexId v) const {
  return std::binary_search(vertices.begin(), vertices.end(), v);
}

std::vector<bool> Region::indicator(std::size_t n) const {
  std::vector<bool> in(n, false);
  for (VertexId v : vertices) {
    if (v >= n) throw ValidationError("region: vertex " + std::to_string(v) + " out of range");
    in[v] = true;
  }
  return in;
}

Region Region::complement(std::size_t n) const {
  const auto in = indicator(n);
  std::vector<VertexId> out;
  for (VertexId v = 0; v < n; ++v) {
    if (!in[v]) out.push_back(v);
  }
  return Region(std::move(out));
}

Region box_region(const Topology& topology, VertexId center, int side) {
  if (side < 1) throw ValidationError("box_region: side must be >= 1");
  if (center >= topology.vertex_count()) throw ValidationError("box_region: center out of range");
  const std::size_t radius = static_cast<std::size_t>(side / 2);
  std::vector<VertexId> members;
  for (VertexId v = 0; v < topology.vertex_count(); ++v) {
    if (topology.box_distance(center, v) <= radius) members.push_back(v);
  }
  return Region(std::move(members));
}

BoundarySets boundary_sets(const Topology& topology, const Region& region) {
  const std::size_t n = topology.vertex_count();
  if (region.empty()) throw ValidationError("boundary_sets: region is empty");
  const auto in = region.indicator(n);
  BoundarySets out;
  out.region_is_whole_graph = region.size() == n;
  std::vector<bool> outer(n, false);
  for (VertexId u : region.vertices) {
    bool on_boundary = false;
    for (VertexId v : topology.neighbors(u)) {
      if (!in[v]) {
        out.edges.emplace_back(u, v);
        outer[v] = true;
        on_boundary = true;
      }
    }
    if (on_boundary) out.inner.push_back(u);
  }
  for (VertexId v = 0; v < n; ++v) {
    if (outer[v]) out.outer.push_back(v);
  }
  return out;
}

std::vector<std::size_t> bfs_distances(const Topology& topology, VertexId source) {
  constexpr auto unreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(topology.vertex_count(), unreached);
  std::deque<VertexId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const VertexId u = queue.front();
    queue.pop_front();
    for (VertexId v : topology.neighbors(u)) {
      if (dist[v] == unreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace anderson
