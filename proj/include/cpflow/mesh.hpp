#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cpflow {

using Face = std::array<int, 3>;

// Unordered vertex pair, stored with a < b.
struct Edge {
  int a = 0;
  int b = 0;

  static Edge of(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }
  bool contains(int v) const { return a == v || b == v; }
  auto operator<=>(const Edge&) const = default;
};

// Closed triangulated surface (edge-manifold, every vertex link a single
// cycle). Immutable once built; all derived incidence data is computed by
// from_faces().
class Triangulation {
 public:
  // Validates and builds. Throws MeshError naming the violated invariant.
  static Triangulation from_faces(int vertex_count, std::vector<Face> faces);

  int vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t face_count() const { return faces_.size(); }

  const std::vector<Face>& faces() const { return faces_; }
  // Sorted lexicographically.
  const std::vector<Edge>& edges() const { return edges_; }

  std::optional<int> find_edge(int u, int v) const;
  // Throws DomainError when {u, v} is not an edge.
  int edge_index(int u, int v) const;

  // The two faces incident to edge e, in increasing face order.
  const std::array<int, 2>& edge_faces(int e) const { return edge_faces_[e]; }
  // face_edges(f)[c] is the edge joining corners c and (c + 1) % 3 of face f.
  const std::array<int, 3>& face_edges(int f) const { return face_edges_[f]; }

  int degree(int v) const { return static_cast<int>(neighbors_[v].size()); }
  // Sorted adjacent vertices.
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }

  int euler_characteristic() const {
    return vertex_count_ - static_cast<int>(edges_.size()) + static_cast<int>(faces_.size());
  }

 private:
  Triangulation() = default;

  int vertex_count_ = 0;
  std::vector<Face> faces_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 2>> edge_faces_;
  std::vector<std::array<int, 3>> face_edges_;
  std::vector<std::vector<int>> neighbors_;
  std::unordered_map<std::uint64_t, int> edge_lookup_;
};

// Nonempty proper subset of the vertex set, kept sorted and deduplicated.
class VertexSubset {
 public:
  // Throws DomainError if the canonical set is empty, the whole vertex set,
  // or references a vertex outside [0, vertex_count).
  VertexSubset(std::vector<int> members, int vertex_count);

  const std::vector<int>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(int v) const;

 private:
  std::vector<int> members_;
};

Triangulation parse_mesh(std::string_view text);
Triangulation load_mesh(const std::filesystem::path& path);
std::string format_mesh(const Triangulation& mesh);

// chi(F_I): vertices of I, minus edges inside I, plus faces inside I.
int subcomplex_euler(const Triangulation& mesh, const VertexSubset& subset);
// Same count for an arbitrary member list, including the full vertex set.
int subcomplex_euler(const Triangulation& mesh, std::span<const int> sorted_members);

struct LinkPair {
  Edge edge;
  int vertex = 0;
  auto operator<=>(const LinkPair&) const = default;
};

// All (edge, vertex) pairs spanning a face of the mesh with the vertex in
// the subset and both edge endpoints outside it. Sorted.
std::vector<LinkPair> link_pairs(const Triangulation& mesh, const VertexSubset& subset);

}  // namespace cpflow
