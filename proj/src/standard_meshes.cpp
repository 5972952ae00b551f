#include "cpflow/standard_meshes.hpp"

#include <map>

#include "cpflow/errors.hpp"

namespace cpflow::meshes {

Triangulation tetrahedron() { return Triangulation::from_faces(4, {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}); }

Triangulation octahedron() {
  return Triangulation::from_faces(
      6, {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}, {5, 2, 1}, {5, 3, 2}, {5, 4, 3}, {5, 1, 4}});
}

Triangulation icosahedron() {
  return Triangulation::from_faces(
      12, {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},  {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
           {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}});
}

Triangulation torus7() {
  std::vector<Face> faces;
  for (int i = 0; i < 7; ++i) {
    faces.push_back({i, (i + 1) % 7, (i + 3) % 7});
    faces.push_back({i, (i + 2) % 7, (i + 3) % 7});
  }
  return Triangulation::from_faces(7, std::move(faces));
}

Triangulation torus_grid(int rows, int cols) {
  if (rows < 3 || cols < 3) throw DomainError("torus grid needs at least 3 rows and 3 columns");
  auto id = [cols](int a, int b) { return a * cols + b; };
  std::vector<Face> faces;
  for (int a = 0; a < rows; ++a) {
    for (int b = 0; b < cols; ++b) {
      const int a1 = (a + 1) % rows;
      const int b1 = (b + 1) % cols;
      faces.push_back({id(a, b), id(a1, b), id(a1, b1)});
      faces.push_back({id(a, b), id(a1, b1), id(a, b1)});
    }
  }
  return Triangulation::from_faces(rows * cols, std::move(faces));
}

Triangulation subdivide(const Triangulation& mesh) {
  std::map<Edge, int> midpoint;
  int next = mesh.vertex_count();
  for (const Edge& e : mesh.edges()) midpoint[e] = next++;
  std::vector<Face> faces;
  faces.reserve(mesh.face_count() * 4);
  for (const Face& f : mesh.faces()) {
    const int m01 = midpoint.at(Edge::of(f[0], f[1]));
    const int m12 = midpoint.at(Edge::of(f[1], f[2]));
    const int m20 = midpoint.at(Edge::of(f[2], f[0]));
    faces.push_back({f[0], m01, m20});
    faces.push_back({f[1], m12, m01});
    faces.push_back({f[2], m20, m12});
    faces.push_back({m01, m12, m20});
  }
  return Triangulation::from_faces(next, std::move(faces));
}

}  // namespace cpflow::meshes
