#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "cpflow/errors.hpp"
#include "cpflow/flows.hpp"
#include "cpflow/geometry.hpp"
#include "cpflow/mesh.hpp"

namespace cpflow {

// sum_i (K_i - target_i)^2
double calabi_energy(std::span<const double> curvature, std::span<const double> target);

// Gradient of the Calabi energy in u: 2 L (K - K_av) = 2 L K.
std::vector<double> energy_gradient(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric);

// Line integral of sum_i (K_i - target_i) du_i from basepoint to endpoint
// along the straight segment, by composite Simpson with doubling.
struct RicciPotentialQuery {
  std::vector<double> basepoint;
  std::vector<double> endpoint;
  std::vector<double> target;
  std::size_t subdivisions = 2;  // starting panel count; even, >= 2
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t panels = 0;
};

inline constexpr std::size_t kMaxQuadraturePanels = std::size_t{1} << 20;

QuadratureResult ricci_potential(const Triangulation& mesh, const Weight& weight, const RicciPotentialQuery& query);

// Sum of straight-segment integrals along a polyline through `points`.
QuadratureResult ricci_potential_along(const Triangulation& mesh, const Weight& weight,
                                       std::span<const std::vector<double>> points, std::span<const double> target);

// Smallest eigenvalue of L restricted to the zero-sum hyperplane, via an
// orthogonal change of basis sending (1, ..., 1) to a coordinate axis.
double restricted_hessian_check(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric);

class NoConstantCurvatureMetric : public Error {
 public:
  using Error::Error;
};

// Log-radii of the constant-curvature metric with sum(u) = log_volume, found
// by running the calabi flow to a 1e-12 curvature tolerance. Throws
// NoConstantCurvatureMetric when the flow does not converge.
std::vector<double> constant_curvature_log_metric(const Triangulation& mesh, const Weight& weight,
                                                  double log_volume = 0.0);

struct ProbeRow {
  std::size_t direction_id = 0;
  double t = 0.0;
  double f = 0.0;
};

// Ricci potential (basepoint u_av) along rays u_av + t * dir for each t in
// `radii`, with t = 0 prepended. Directions must be orthogonal to
// (1, ..., 1) and u_av must have constant curvature.
std::vector<ProbeRow> properness_probe(const Triangulation& mesh, const Weight& weight, std::span<const double> u_av,
                                       const std::vector<std::vector<double>>& directions,
                                       std::span<const double> radii);

// "direction_id,t,f"
void write_probe_csv(std::ostream& out, std::span<const ProbeRow> rows);

}  // namespace cpflow
