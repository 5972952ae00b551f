#pragma once

#include "cpflow/mesh.hpp"

namespace cpflow::meshes {

Triangulation tetrahedron();
Triangulation octahedron();
Triangulation icosahedron();
// Seven-vertex torus; every vertex has degree six.
Triangulation torus7();
// Quad grid on a torus with each square split along one diagonal; rows,
// cols >= 3.
Triangulation torus_grid(int rows, int cols);
// One-to-four split of every face.
Triangulation subdivide(const Triangulation& mesh);

}  // namespace cpflow::meshes
