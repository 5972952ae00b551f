#include "cpflow/laplacian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "cpflow/errors.hpp"

namespace cpflow {
namespace {

const double kSqrt3 = std::sqrt(3.0);
constexpr double kCircleSlack = 1e-9;
constexpr double kRayleighTolerance = 1e-8;

void check_corners(int corner, int moving) {
  if (corner < 0 || corner > 2 || moving < 0 || moving > 2 || corner == moving) {
    throw DomainError("corner and moving vertex must be distinct local indices in {0, 1, 2}");
  }
}

double phi_between(const FaceData& face, int a, int b) { return b == (a + 1) % 3 ? face.phi[a] : face.phi[b]; }

struct LocalTriangle {
  double ri, rj, rk;
  double phi_ij, phi_jk;
  double l_ij, l_jk, l_ik;
  double theta_i, theta_j;
};

LocalTriangle local_triangle(const FaceData& face, int i, int j) {
  const int k = 3 - i - j;
  LocalTriangle t{};
  t.ri = face.radii[i];
  t.rj = face.radii[j];
  t.rk = face.radii[k];
  t.phi_ij = phi_between(face, i, j);
  t.phi_jk = phi_between(face, j, k);
  t.l_ij = edge_length(t.ri, t.rj, t.phi_ij);
  t.l_jk = edge_length(t.rj, t.rk, t.phi_jk);
  t.l_ik = edge_length(t.ri, t.rk, phi_between(face, i, k));
  const auto angles = triangle_angles(t.l_jk, t.l_ik, t.l_ij);
  t.theta_i = angles[0];
  t.theta_j = angles[1];
  return t;
}

// Cosine of the angle at the center of a circle of radius r0 between the
// segment to a neighboring center at distance d and the segment to an
// intersection point with that neighbor's circle (radius r1).
double intersection_cosine(double r0, double d, double r1) {
  const double c = (r0 * r0 + d * d - r1 * r1) / (2.0 * r0 * d);
  if (!(std::abs(c) <= 1.0 + kCircleSlack)) {
    throw DegenerateTriangleError("circles of radii " + std::to_string(r0) + " and " + std::to_string(r1) +
                                  " at distance " + std::to_string(d) + " do not intersect");
  }
  return std::clamp(c, -1.0, 1.0);
}

class ProjectedOperator {
 public:
  explicit ProjectedOperator(const DualLaplacian& lap) : lap_(lap) {}

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = lap_.matrix() * x;
    y.array() -= y.mean();
    return y;
  }

 private:
  const DualLaplacian& lap_;
};

struct LanczosResult {
  EigenPair smallest;
  EigenPair largest;
};

// Lanczos with full reorthogonalization on the complement of the constant
// vector. Stops when both extreme Ritz pairs have small residuals.
LanczosResult lanczos_extremes(const DualLaplacian& lap) {
  const int n = lap.size();
  const int dim = n - 1;
  const ProjectedOperator op(lap);
  const double scale = std::max(1.0, lap.max_abs_entry());
  const double tolerance = 1e-11 * scale;

  Eigen::MatrixXd basis(n, dim);
  std::vector<double> alpha;
  std::vector<double> beta;

  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = std::sin(1.0 + 0.7 * i) + 0.25 * std::cos(3.1 * i);
  q.array() -= q.mean();
  q.normalize();

  double residual = 0.0;
  for (int m = 0; m < dim; ++m) {
    basis.col(m) = q;
    Eigen::VectorXd w = op(q);
    alpha.push_back(q.dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
      w.array() -= w.mean();
    }
    const double b = w.norm();
    const int size = m + 1;
    const bool exhausted = size == dim || b <= 1e-14 * scale;
    if (size % 10 == 0 || exhausted) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(size, size);
      for (int k = 0; k < size; ++k) {
        t(k, k) = alpha[k];
        if (k + 1 < size) t(k, k + 1) = t(k + 1, k) = beta[k];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(t);
      const double r_small = std::abs(b * solver.eigenvectors()(size - 1, 0));
      const double r_large = std::abs(b * solver.eigenvectors()(size - 1, size - 1));
      residual = std::max(r_small, r_large);
      if (exhausted || residual <= tolerance) {
        LanczosResult result;
        result.smallest.value = solver.eigenvalues()(0);
        result.smallest.vector = basis.leftCols(size) * solver.eigenvectors().col(0);
        result.largest.value = solver.eigenvalues()(size - 1);
        result.largest.vector = basis.leftCols(size) * solver.eigenvectors().col(size - 1);
        return result;
      }
    }
    beta.push_back(b);
    q = w / b;
  }
  throw ConvergenceError("Lanczos iteration did not converge", residual);
}

void check_rayleigh(const DualLaplacian& lap, const EigenPair& pair) {
  const Eigen::VectorXd lv = lap.matrix() * pair.vector;
  const double rq = pair.vector.dot(lv) / pair.vector.squaredNorm();
  const double scale = std::max(std::abs(pair.value), 1e-300);
  if (!(std::abs(rq - pair.value) <= kRayleighTolerance * scale)) {
    throw ConvergenceError("eigenvalue " + std::to_string(pair.value) + " disagrees with its Rayleigh quotient",
                           std::abs(rq - pair.value));
  }
}

}  // namespace

FaceData FaceData::of(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric, int face) {
  FaceData data;
  const Face& f = mesh.faces()[face];
  const auto& fe = mesh.face_edges(face);
  for (int c = 0; c < 3; ++c) {
    data.radii[c] = metric.radii()[f[c]];
    data.phi[c] = weight[fe[c]];
  }
  return data;
}

double half_weight_analytic(const FaceData& face, int corner, int moving) {
  check_corners(corner, moving);
  const LocalTriangle t = local_triangle(face, corner, moving);
  const double twice_area = t.l_ij * t.l_ik * std::sin(t.theta_i);
  // d l_jk / d r_j and d l_ij / d r_j, scaled by the respective lengths.
  const double grow_opposite = t.rj + t.rk * std::cos(t.phi_jk);
  const double grow_adjacent = t.rj + t.ri * std::cos(t.phi_ij);
  return t.rj / twice_area * (grow_opposite - t.l_jk * std::cos(t.theta_j) * grow_adjacent / t.l_ij);
}

double half_weight_dual(const FaceData& face, int corner, int moving) {
  check_corners(corner, moving);
  const LocalTriangle t = local_triangle(face, corner, moving);
  const double cos_to_jk_point = intersection_cosine(t.rj, t.l_jk, t.rk);
  const double cos_to_ij_point = intersection_cosine(t.rj, t.l_ij, t.ri);
  return t.rj / t.l_ij * (cos_to_jk_point - std::cos(t.theta_j) * cos_to_ij_point) / std::sin(t.theta_j);
}

double DualLaplacian::max_abs_entry() const {
  double m = 0.0;
  for (int k = 0; k < matrix_.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

DualLaplacian assemble(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric,
                       AssemblyRoute route) {
  if (metric.size() != static_cast<std::size_t>(mesh.vertex_count())) {
    throw DimensionError("metric size does not match the mesh");
  }
  DualLaplacian lap;
  lap.n_ = mesh.vertex_count();
  lap.edges_ = mesh.edges();
  lap.halves_.resize(mesh.face_count());

  for (int f = 0; f < static_cast<int>(mesh.face_count()); ++f) {
    const FaceData data = FaceData::of(mesh, weight, metric, f);
    for (int c = 0; c < 3; ++c) {
      const int next = (c + 1) % 3;
      const double h = route == AssemblyRoute::analytic ? half_weight_analytic(data, c, next)
                                                        : half_weight_dual(data, c, next);
      if (!(h > 0.0 && h < kSqrt3)) {
        throw InvariantViolation("half-weight " + std::to_string(h) + " on face " + std::to_string(f) +
                                 " outside (0, sqrt 3)");
      }
      lap.halves_[f][c] = h;
    }
  }

  lap.weights_.resize(mesh.edge_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.edge_count() * 2 + mesh.vertex_count());
  std::vector<double> diagonal(mesh.vertex_count(), 0.0);
  for (int e = 0; e < static_cast<int>(mesh.edge_count()); ++e) {
    double b = 0.0;
    for (int f : mesh.edge_faces(e)) {
      const auto& fe = mesh.face_edges(f);
      const int slot = static_cast<int>(std::find(fe.begin(), fe.end(), e) - fe.begin());
      b += lap.halves_[f][slot];
    }
    if (!(b > 0.0 && b < 2.0 * kSqrt3)) {
      throw InvariantViolation("edge weight " + std::to_string(b) + " outside (0, 2 sqrt 3)");
    }
    lap.weights_[e] = b;
    const Edge& edge = lap.edges_[e];
    triplets.emplace_back(edge.a, edge.b, -b);
    triplets.emplace_back(edge.b, edge.a, -b);
  }
  for (int i = 0; i < lap.n_; ++i) {
    for (int j : mesh.neighbors(i)) diagonal[i] += lap.weights_[mesh.edge_index(i, j)];
    triplets.emplace_back(i, i, diagonal[i]);
  }
  lap.matrix_.resize(lap.n_, lap.n_);
  lap.matrix_.setFromTriplets(triplets.begin(), triplets.end());

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(lap.n_);
  const Eigen::VectorXd sums = lap.matrix_ * ones;
  lap.row_sums_.assign(sums.data(), sums.data() + sums.size());
  return lap;
}

std::vector<double> multiply(const DualLaplacian& lap, std::span<const double> f) {
  if (f.size() != static_cast<std::size_t>(lap.size())) {
    throw DimensionError("vector of length " + std::to_string(f.size()) + " for a Laplacian of size " +
                         std::to_string(lap.size()));
  }
  std::vector<double> out(f.size(), 0.0);
  const auto weights = lap.edge_weights();
  for (std::size_t e = 0; e < weights.size(); ++e) {
    const Edge& edge = lap.edges()[e];
    const double flux = weights[e] * (f[edge.a] - f[edge.b]);
    out[edge.a] += flux;
    out[edge.b] -= flux;
  }
  return out;
}

std::vector<double> apply(const DualLaplacian& lap, std::span<const double> f) {
  std::vector<double> out = multiply(lap, f);
  for (double& x : out) x = -x;
  return out;
}

double quadratic_form(const DualLaplacian& lap, std::span<const double> f) {
  if (f.size() != static_cast<std::size_t>(lap.size())) throw DimensionError("vector length mismatch");
  double sum = 0.0;
  const auto weights = lap.edge_weights();
  for (std::size_t e = 0; e < weights.size(); ++e) {
    const Edge& edge = lap.edges()[e];
    const double d = f[edge.a] - f[edge.b];
    sum += weights[e] * d * d;
  }
  return sum;
}

Eigen::MatrixXd complement_basis(int n) {
  if (n < 2) throw DomainError("complement basis needs at least two vertices");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n - 1);
  for (int k = 1; k < n; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    q.col(k - 1).head(k).setConstant(1.0 / norm);
    q(k, k - 1) = -static_cast<double>(k) / norm;
  }
  return q;
}

EigenPair lambda1_pair(const DualLaplacian& lap, EigenMethod method) {
  if (lap.size() < 2) throw DomainError("lambda1 needs at least two vertices");
  if (method == EigenMethod::automatic) {
    method = lap.size() <= kDenseEigenLimit ? EigenMethod::dense : EigenMethod::lanczos;
  }
  EigenPair pair;
  if (method == EigenMethod::dense) {
    const Eigen::MatrixXd q = complement_basis(lap.size());
    const Eigen::MatrixXd restricted = q.transpose() * (lap.matrix() * q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(restricted);
    if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0);
    pair.value = solver.eigenvalues()(0);
    pair.vector = q * solver.eigenvectors().col(0);
  } else {
    pair = lanczos_extremes(lap).smallest;
  }
  check_rayleigh(lap, pair);
  return pair;
}

double lambda1(const DualLaplacian& lap, EigenMethod method) { return lambda1_pair(lap, method).value; }

SpectralSummary spectrum(const DualLaplacian& lap) {
  SpectralSummary summary;
  if (lap.size() <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.dense(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0);
    const auto& values = solver.eigenvalues();
    summary.eigenvalues.assign(values.data(), values.data() + values.size());
    summary.smallest = summary.eigenvalues.front();
    summary.second_smallest = summary.eigenvalues.size() > 1 ? summary.eigenvalues[1] : 0.0;
    summary.largest = summary.eigenvalues.back();
    return summary;
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(lap.size());
  summary.smallest = ones.dot(lap.matrix() * ones) / lap.size();
  const LanczosResult extremes = lanczos_extremes(lap);
  summary.second_smallest = extremes.smallest.value;
  summary.largest = extremes.largest.value;
  return summary;
}

void write_coordinate_text(std::ostream& out, const DualLaplacian& lap) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows(lap.matrix());
  char buffer[96];
  for (int i = 0; i < rows.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
      std::snprintf(buffer, sizeof buffer, "%d %d %.17g\n", i, static_cast<int>(it.col()), it.value());
      out << buffer;
    }
  }
}

}  // namespace cpflow
