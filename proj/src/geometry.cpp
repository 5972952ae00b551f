#include "cpflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cpflow/errors.hpp"

namespace cpflow {
namespace {

constexpr double kAngleSumTolerance = 1e-9;

// r_a + r_b - l_ab, without cancellation.
double tangency_gap(double ra, double rb, double phi, double length) {
  const double half = std::sin(0.5 * phi);
  return 4.0 * ra * rb * half * half / (ra + rb + length);
}

// Corner angles of a packing face from its radii, with phi[c] and len[c]
// belonging to the edge joining corners c and c + 1. The Heron factors
// 2 (s - side) are formed from radii so that a tiny circle still yields an
// accurate needle triangle.
std::array<double, 3> face_angles(const std::array<double, 3>& radii, const std::array<double, 3>& phi,
                                  const std::array<double, 3>& len) {
  std::array<double, 3> gap{};
  for (int c = 0; c < 3; ++c) gap[c] = tangency_gap(radii[c], radii[(c + 1) % 3], phi[c], len[c]);
  // factor[c] = 2 (s - side opposite corner c)
  std::array<double, 3> factor{};
  for (int c = 0; c < 3; ++c) factor[c] = 2.0 * radii[c] - gap[c] - gap[(c + 2) % 3] + gap[(c + 1) % 3];
  const double perimeter = len[0] + len[1] + len[2];
  if (!(factor[0] > 0.0 && factor[1] > 0.0 && factor[2] > 0.0)) {
    throw DegenerateTriangleError("packing face with lengths " + std::to_string(len[0]) + ", " +
                                  std::to_string(len[1]) + ", " + std::to_string(len[2]) + " is degenerate");
  }
  std::array<double, 3> angle{};
  for (int c = 0; c < 3; ++c) {
    angle[c] = 2.0 * std::atan2(std::sqrt(factor[(c + 1) % 3] * factor[(c + 2) % 3]), std::sqrt(perimeter * factor[c]));
  }
  return angle;
}

void check_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("radius must be positive and finite, got " + std::to_string(r));
}

}  // namespace

Weight Weight::uniform(const Triangulation& mesh, double phi) {
  return from_values(mesh, std::vector<double>(mesh.edge_count(), phi));
}

Weight Weight::from_values(const Triangulation& mesh, std::vector<double> phi) {
  if (phi.size() != mesh.edge_count()) {
    throw DimensionError("weight needs " + std::to_string(mesh.edge_count()) + " values, got " +
                         std::to_string(phi.size()));
  }
  for (std::size_t e = 0; e < phi.size(); ++e) {
    if (!(phi[e] >= 0.0 && phi[e] <= kPi / 2)) {
      const Edge& edge = mesh.edges()[e];
      throw DomainError("weight on edge {" + std::to_string(edge.a) + "," + std::to_string(edge.b) + "} is " +
                        std::to_string(phi[e]) + ", outside [0, pi/2]");
    }
  }
  return Weight(std::move(phi));
}

PackingMetric PackingMetric::uniform(std::size_t n, double radius) {
  return from_radii(std::vector<double>(n, radius));
}

PackingMetric PackingMetric::from_radii(std::vector<double> radii) {
  std::vector<double> u(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    check_radius(radii[i]);
    u[i] = std::log(radii[i]);
  }
  return PackingMetric(std::move(radii), std::move(u));
}

PackingMetric PackingMetric::from_log_radii(std::vector<double> log_radii) {
  std::vector<double> r(log_radii.size());
  for (std::size_t i = 0; i < log_radii.size(); ++i) {
    if (!std::isfinite(log_radii[i])) throw DomainError("log-radius must be finite");
    r[i] = std::exp(log_radii[i]);
    check_radius(r[i]);
  }
  return PackingMetric(std::move(r), std::move(log_radii));
}

double GeometryState::gauss_bonnet_residual() const {
  const double total = std::accumulate(curvatures.begin(), curvatures.end(), 0.0);
  return total - 2.0 * kPi * euler_characteristic;
}

double edge_length(double ri, double rj, double phi) {
  check_radius(ri);
  check_radius(rj);
  if (!(phi >= 0.0 && phi <= kPi / 2)) throw DomainError("weight " + std::to_string(phi) + " outside [0, pi/2]");
  return std::sqrt(ri * ri + rj * rj + 2.0 * ri * rj * std::cos(phi));
}

std::array<double, 3> triangle_angles(double la, double lb, double lc) {
  if (!(la > 0.0 && lb > 0.0 && lc > 0.0) || !(la < lb + lc && lb < la + lc && lc < la + lb)) {
    throw DegenerateTriangleError("lengths " + std::to_string(la) + ", " + std::to_string(lb) + ", " +
                                  std::to_string(lc) + " violate the strict triangle inequality");
  }
  // Half-angle tangents from the factors of Heron's formula, taken over the
  // sides sorted so that x >= y >= z; accurate for needle-like triangles.
  std::array<double, 3> side = {la, lb, lc};
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return side[i] > side[j]; });
  const double x = side[order[0]];
  const double y = side[order[1]];
  const double z = side[order[2]];
  const double s2 = x + (y + z);
  const double sx = z - (x - y);  // 2 (s - x)
  const double sy = z + (x - y);
  const double sz = x + (y - z);
  if (!(sx > 0.0)) {
    throw DegenerateTriangleError("lengths " + std::to_string(la) + ", " + std::to_string(lb) + ", " +
                                  std::to_string(lc) + " violate the strict triangle inequality");
  }
  std::array<double, 3> angle{};
  angle[order[0]] = 2.0 * std::atan2(std::sqrt(sy * sz), std::sqrt(s2 * sx));
  angle[order[1]] = 2.0 * std::atan2(std::sqrt(sx * sz), std::sqrt(s2 * sy));
  angle[order[2]] = 2.0 * std::atan2(std::sqrt(sx * sy), std::sqrt(s2 * sz));
  return angle;
}

double average_curvature(const Triangulation& mesh) {
  return 2.0 * kPi * mesh.euler_characteristic() / mesh.vertex_count();
}

GeometryState compute_geometry(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric) {
  if (metric.size() != static_cast<std::size_t>(mesh.vertex_count())) {
    throw DimensionError("metric has " + std::to_string(metric.size()) + " radii for " +
                         std::to_string(mesh.vertex_count()) + " vertices");
  }
  if (weight.size() != mesh.edge_count()) throw DimensionError("weight does not match mesh edges");

  GeometryState state;
  state.euler_characteristic = mesh.euler_characteristic();
  state.avg_curvature = average_curvature(mesh);

  const auto r = metric.radii();
  state.lengths.resize(mesh.edge_count());
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edges()[e];
    state.lengths[e] = edge_length(r[edge.a], r[edge.b], weight[static_cast<int>(e)]);
  }

  state.angles.resize(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const auto& fe = mesh.face_edges(static_cast<int>(f));
    const Face& face = mesh.faces()[f];
    std::array<double, 3> radii{};
    std::array<double, 3> phi{};
    std::array<double, 3> len{};
    for (int c = 0; c < 3; ++c) {
      radii[c] = r[face[c]];
      phi[c] = weight[fe[c]];
      len[c] = state.lengths[fe[c]];
    }
    state.angles[f] = face_angles(radii, phi, len);
    const double sum = state.angles[f][0] + state.angles[f][1] + state.angles[f][2];
    if (std::abs(sum - kPi) > kAngleSumTolerance) {
      throw InvariantViolation("angles of face " + std::to_string(f) + " sum to " + std::to_string(sum));
    }
  }

  state.curvatures.assign(mesh.vertex_count(), 2.0 * kPi);
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& face = mesh.faces()[f];
    for (int c = 0; c < 3; ++c) state.curvatures[face[c]] -= state.angles[f][c];
  }
  return state;
}

PackingMetric scale_metric(const PackingMetric& metric, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw DomainError("scale factor must be positive, got " + std::to_string(factor));
  }
  std::vector<double> r(metric.radii().begin(), metric.radii().end());
  for (double& x : r) x *= factor;
  return PackingMetric::from_radii(std::move(r));
}

}  // namespace cpflow
