#pragma once

#include <array>
#include <span>
#include <vector>

#include "cpflow/mesh.hpp"

namespace cpflow {

inline constexpr double kPi = 3.14159265358979323846;

// Per-edge circle intersection weight Phi in [0, pi/2], indexed like
// Triangulation::edges().
class Weight {
 public:
  static Weight uniform(const Triangulation& mesh, double phi);
  // Throws DimensionError / DomainError.
  static Weight from_values(const Triangulation& mesh, std::vector<double> phi);

  double operator[](int edge) const { return phi_[edge]; }
  std::span<const double> values() const { return phi_; }
  std::size_t size() const { return phi_.size(); }

 private:
  explicit Weight(std::vector<double> phi) : phi_(std::move(phi)) {}
  std::vector<double> phi_;
};

// Circle packing metric. Radii r and log-radii u = ln r are kept together so
// flows can work in u while geometry reads r.
class PackingMetric {
 public:
  static PackingMetric uniform(std::size_t n, double radius);
  static PackingMetric from_radii(std::vector<double> radii);
  static PackingMetric from_log_radii(std::vector<double> log_radii);

  std::span<const double> radii() const { return r_; }
  std::span<const double> log_radii() const { return u_; }
  std::size_t size() const { return r_.size(); }

 private:
  PackingMetric(std::vector<double> r, std::vector<double> u) : r_(std::move(r)), u_(std::move(u)) {}
  std::vector<double> r_;
  std::vector<double> u_;
};

struct GeometryState {
  std::vector<double> lengths;                 // per edge
  std::vector<std::array<double, 3>> angles;   // per face, per corner
  std::vector<double> curvatures;              // per vertex
  double avg_curvature = 0.0;
  int euler_characteristic = 0;

  double gauss_bonnet_residual() const;
};

double edge_length(double ri, double rj, double phi);

// Angles opposite each side. Throws DegenerateTriangleError unless the
// strict triangle inequality holds.
std::array<double, 3> triangle_angles(double la, double lb, double lc);

GeometryState compute_geometry(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric);

// 2 pi chi / N.
double average_curvature(const Triangulation& mesh);

PackingMetric scale_metric(const PackingMetric& metric, double factor);

}  // namespace cpflow
