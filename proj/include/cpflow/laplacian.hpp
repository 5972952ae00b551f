#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <ostream>
#include <span>
#include <vector>

#include "cpflow/geometry.hpp"
#include "cpflow/mesh.hpp"

namespace cpflow {

// Radii at the three corners of a face and the weights of its sides;
// phi[c] belongs to the side joining corners c and (c + 1) % 3.
struct FaceData {
  std::array<double, 3> radii{};
  std::array<double, 3> phi{};

  static FaceData of(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric, int face);
};

// (d theta_corner / d r_moving) * r_moving, differentiated through the
// cosine law and the edge-length formula.
double half_weight_analytic(const FaceData& face, int corner, int moving);

// The same quantity from the dual structure of the circle pattern: the
// signed distance from the face's radical center to the side
// (corner, moving), divided by that side's length.
double half_weight_dual(const FaceData& face, int corner, int moving);

enum class AssemblyRoute { analytic, dual_length };

// Jacobian L = dK/du of a circle packing metric, stored as a weighted graph
// Laplacian. L is symmetric, so Delta = -L^T = -L.
class DualLaplacian {
 public:
  int size() const { return n_; }
  // B per edge, indexed like Triangulation::edges().
  std::span<const double> edge_weights() const { return weights_; }
  // Per face; slot c holds the half-contribution of side (c, c + 1).
  std::span<const std::array<double, 3>> half_weights() const { return halves_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }
  // (L * 1)_i for every row.
  std::span<const double> row_sum_residuals() const { return row_sums_; }
  // max |L_ij|
  double max_abs_entry() const;

 private:
  friend DualLaplacian assemble(const Triangulation&, const Weight&, const PackingMetric&, AssemblyRoute);

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> halves_;
  std::vector<double> row_sums_;
  Eigen::SparseMatrix<double> matrix_;
};

DualLaplacian assemble(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric,
                       AssemblyRoute route = AssemblyRoute::analytic);

// (Delta f)_i = sum_{j~i} B_ij (f_j - f_i) = -(L f)_i
std::vector<double> apply(const DualLaplacian& lap, std::span<const double> f);
// L f
std::vector<double> multiply(const DualLaplacian& lap, std::span<const double> f);
// f^T L f as the edge sum of B_ij (f_i - f_j)^2.
double quadratic_form(const DualLaplacian& lap, std::span<const double> f);

enum class EigenMethod { automatic, dense, lanczos };

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

// Dense routines are used up to this size; Lanczos above.
inline constexpr int kDenseEigenLimit = 512;

// Smallest eigenpair of L on the complement of the constant vector.
EigenPair lambda1_pair(const DualLaplacian& lap, EigenMethod method = EigenMethod::automatic);
double lambda1(const DualLaplacian& lap, EigenMethod method = EigenMethod::automatic);

struct SpectralSummary {
  std::vector<double> eigenvalues;  // ascending; empty when not computed in full
  double smallest = 0.0;
  double second_smallest = 0.0;
  double largest = 0.0;
};

SpectralSummary spectrum(const DualLaplacian& lap);

// Orthonormal basis (N x (N-1)) of the orthogonal complement of (1, ..., 1).
Eigen::MatrixXd complement_basis(int n);

// "i j value" per nonzero entry, row-major sorted, both triangles emitted.
void write_coordinate_text(std::ostream& out, const DualLaplacian& lap);

}  // namespace cpflow
