#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace anderson {

using VertexId = std::size_t;
using Edge = std::pair<VertexId, VertexId>;

enum class TopologyKind { lattice, bethe, delone };
enum class Boundary { open, periodic };

std::string to_string(TopologyKind kind);
std::string to_string(Boundary boundary);

/// Finite graph geometry: boxes in Z^d, rooted Bethe truncations and
/// Delone-thinned lattices. Immutable after construction.
///
/// Lattice vertices are numbered row-major with the first axis slowest.
/// Tree vertices use K-ary heap order: root 0, children of v are
/// K*v+1 ... K*v+K.
class Topology {
 public:
  static constexpr std::size_t default_vertex_cap = std::size_t{1} << 22;

  static Topology lattice(std::vector<int> sides, Boundary boundary = Boundary::open);
  static Topology bethe(int branching, int depth, std::size_t vertex_cap = default_vertex_cap);
  /// Lattice with open boundary plus a Delone mask: one active site drawn per
  /// disjoint cell of side R+1.
  static Topology delone(std::vector<int> sides, int radius, std::uint64_t seed);

  TopologyKind kind() const noexcept { return kind_; }
  std::size_t vertex_count() const noexcept { return neighbors_.size(); }
  std::span<const VertexId> neighbors(VertexId v) const { return neighbors_[v]; }
  std::size_t degree(VertexId v) const { return neighbors_[v].size(); }
  std::size_t max_degree() const noexcept { return max_degree_; }
  /// Declared uniform degree bound: 2d for lattices, K+1 for trees.
  std::size_t degree_bound() const noexcept;
  bool adjacent(VertexId x, VertexId y) const;

  // lattice / delone
  int dimension() const noexcept { return static_cast<int>(sides_.size()); }
  const std::vector<int>& sides() const noexcept { return sides_; }
  Boundary boundary() const noexcept { return boundary_; }
  std::vector<int> coordinates(VertexId v) const;
  VertexId vertex_at(std::span<const int> coords) const;

  // bethe
  int branching() const noexcept { return branching_; }
  int depth() const noexcept { return depth_; }
  int depth_of(VertexId v) const;
  VertexId parent(VertexId v) const;
  /// Forward neighbours of v in the rooted tree (empty for leaves).
  std::vector<VertexId> children(VertexId v) const;

  // delone
  int delone_radius() const noexcept { return radius_; }
  std::uint64_t delone_seed() const noexcept { return seed_; }
  /// Active-site mask. All true for non-Delone kinds.
  const std::vector<bool>& mask() const noexcept { return mask_; }
  /// Replaces the Delone mask (deserialisation). Size must match.
  void set_mask(std::vector<bool> mask);

  /// Sup-norm for open lattices, wrapped sup-norm for periodic ones, graph
  /// (breadth-first) distance for trees and Delone lattices.
  std::size_t distance(VertexId x, VertexId y) const;

  /// Undirected edges (u < v), lexicographically sorted.
  std::vector<Edge> edges() const;

  /// Geometric distance used for box membership: sup-norm on coordinates for
  /// lattices (wrapped when periodic), graph distance on trees.
  std::size_t box_distance(VertexId x, VertexId y) const;

 private:
  Topology() = default;
  void finalize();

  TopologyKind kind_ = TopologyKind::lattice;
  std::vector<int> sides_;
  std::vector<std::size_t> strides_;
  Boundary boundary_ = Boundary::open;
  int branching_ = 0;
  int depth_ = 0;
  int radius_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<VertexId>> neighbors_;
  std::vector<bool> mask_;
  std::size_t max_degree_ = 0;
};

/// A vertex subset, sorted and unique.
struct Region {
  std::vector<VertexId> vertices;

  Region() = default;
  explicit Region(std::vector<VertexId> vs);

  std::size_t size() const noexcept { return vertices.size(); }
  bool empty() const noexcept { return vertices.empty(); }
  bool contains(VertexId v) const;
  /// Indicator over [0, n).
  std::vector<bool> indicator(std::size_t n) const;
  /// Complement within [0, n).
  Region complement(std::size_t n) const;
};

/// Box Lambda_L(u) = { v : |u - v| <= floor(L/2) } in the topology's box
/// distance.
Region box_region(const Topology& topology, VertexId center, int side);

struct BoundarySets {
  std::vector<Edge> edges;       ///< (u, v) with u inside, v outside, u ~ v
  std::vector<VertexId> inner;   ///< u in region with an outside neighbour
  std::vector<VertexId> outer;   ///< v outside with an inside neighbour
  bool region_is_whole_graph = false;
};

BoundarySets boundary_sets(const Topology& topology, const Region& region);

/// Breadth-first distances from a source.
std::vector<std::size_t> bfs_distances(const Topology& topology, VertexId source);

}  // namespace anderson
