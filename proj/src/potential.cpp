#include "cpflow/potential.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>

#include "cpflow/laplacian.hpp"

namespace cpflow {
namespace {

constexpr double kQuadratureTolerance = 1e-8;
constexpr double kBasepointTolerance = 1e-8;

class SegmentIntegrand {
 public:
  SegmentIntegrand(const Triangulation& mesh, const Weight& weight, std::span<const double> from,
                   std::span<const double> to, std::span<const double> target)
      : mesh_(mesh), weight_(weight), from_(from.begin(), from.end()), target_(target) {
    delta_.resize(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) delta_[i] = to[i] - from[i];
  }

  bool trivial() const {
    for (double d : delta_) {
      if (d != 0.0) return false;
    }
    return true;
  }

  // (K(from + s * delta) - target) . delta
  double operator()(double s) const {
    std::vector<double> u(from_.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = from_[i] + s * delta_[i];
    const auto k = compute_geometry(mesh_, weight_, PackingMetric::from_log_radii(std::move(u))).curvatures;
    double value = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) value += (k[i] - target_[i]) * delta_[i];
    return value;
  }

 private:
  const Triangulation& mesh_;
  const Weight& weight_;
  std::vector<double> from_;
  std::span<const double> target_;
  std::vector<double> delta_;
};

double simpson(const std::vector<double>& samples) {
  const std::size_t panels = samples.size() - 1;
  double sum = samples.front() + samples.back();
  for (std::size_t k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * samples[k];
  return sum / (3.0 * static_cast<double>(panels));
}

QuadratureResult integrate_segment(const Triangulation& mesh, const Weight& weight, std::span<const double> from,
                                   std::span<const double> to, std::span<const double> target,
                                   std::size_t subdivisions) {
  const SegmentIntegrand g(mesh, weight, from, to, target);
  if (g.trivial()) return {0.0, 0.0, 0};

  std::vector<double> samples(subdivisions + 1);
  for (std::size_t k = 0; k <= subdivisions; ++k) samples[k] = g(static_cast<double>(k) / subdivisions);
  double coarse = simpson(samples);
  double estimate = 0.0;
  // The estimate must pass on two successive refinements; a single pass at
  // coarse resolution can be a coincidental cancellation.
  bool passed_before = false;
  while (2 * (samples.size() - 1) <= kMaxQuadraturePanels) {
    const std::size_t panels = 2 * (samples.size() - 1);
    std::vector<double> refined(panels + 1);
    for (std::size_t k = 0; k < samples.size(); ++k) refined[2 * k] = samples[k];
    for (std::size_t k = 1; k < panels; k += 2) refined[k] = g(static_cast<double>(k) / panels);
    samples = std::move(refined);
    const double fine = simpson(samples);
    estimate = std::abs(fine - coarse) / 15.0;
    const bool passed = estimate < kQuadratureTolerance * (1.0 + std::abs(fine));
    if (passed && passed_before) return {fine + (fine - coarse) / 15.0, estimate, panels};
    passed_before = passed;
    coarse = fine;
  }
  throw ConvergenceError("Ricci potential quadrature did not converge within " +
                             std::to_string(kMaxQuadraturePanels) + " panels",
                         estimate);
}

void check_lengths(const Triangulation& mesh, std::span<const double> v, const char* what) {
  if (v.size() != static_cast<std::size_t>(mesh.vertex_count())) {
    throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) + " entries for " +
                         std::to_string(mesh.vertex_count()) + " vertices");
  }
}

}  // namespace

double calabi_energy(std::span<const double> curvature, std::span<const double> target) {
  if (curvature.size() != target.size()) throw DimensionError("curvature and target lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < curvature.size(); ++i) {
    const double d = curvature[i] - target[i];
    sum += d * d;
  }
  return sum;
}

std::vector<double> energy_gradient(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric) {
  const GeometryState geometry = compute_geometry(mesh, weight, metric);
  std::vector<double> residual = geometry.curvatures;
  for (double& k : residual) k -= geometry.avg_curvature;
  std::vector<double> gradient = multiply(assemble(mesh, weight, metric), residual);
  for (double& x : gradient) x *= 2.0;
  return gradient;
}

QuadratureResult ricci_potential(const Triangulation& mesh, const Weight& weight, const RicciPotentialQuery& query) {
  check_lengths(mesh, query.basepoint, "basepoint");
  check_lengths(mesh, query.endpoint, "endpoint");
  check_lengths(mesh, query.target, "target");
  if (query.subdivisions < 2 || query.subdivisions % 2 != 0) {
    throw DomainError("Simpson subdivision count must be even and at least 2");
  }
  return integrate_segment(mesh, weight, query.basepoint, query.endpoint, query.target, query.subdivisions);
}

QuadratureResult ricci_potential_along(const Triangulation& mesh, const Weight& weight,
                                       std::span<const std::vector<double>> points, std::span<const double> target) {
  QuadratureResult total;
  for (std::size_t k = 1; k < points.size(); ++k) {
    const QuadratureResult leg =
        ricci_potential(mesh, weight, {points[k - 1], points[k], {target.begin(), target.end()}, 2});
    total.value += leg.value;
    total.error_estimate += leg.error_estimate;
    total.panels += leg.panels;
  }
  return total;
}

double restricted_hessian_check(const Triangulation& mesh, const Weight& weight, const PackingMetric& metric) {
  const int n = mesh.vertex_count();
  const Eigen::MatrixXd lap = assemble(mesh, weight, metric).dense();

  // Householder reflection sending (1, ..., 1) / sqrt(n) to e_n; its first
  // n - 1 rows span the zero-sum hyperplane.
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  v(n - 1) -= 1.0;
  const Eigen::MatrixXd reflection =
      Eigen::MatrixXd::Identity(n, n) - 2.0 * v * v.transpose() / v.squaredNorm();
  const Eigen::MatrixXd s = reflection.topRows(n - 1);
  const Eigen::MatrixXd hessian = s * lap * s.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hessian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("restricted Hessian eigensolver failed", 0.0);
  return solver.eigenvalues()(0);
}

std::vector<double> constant_curvature_log_metric(const Triangulation& mesh, const Weight& weight,
                                                  double log_volume) {
  const std::size_t n = static_cast<std::size_t>(mesh.vertex_count());
  IntegratorOptions options;
  options.curvature_tolerance = 1e-12;
  options.record_lambda1 = false;
  const PackingMetric start = PackingMetric::from_log_radii(std::vector<double>(n, log_volume / n));
  const FlowTrace trace = integrate(FlowKind::calabi(), mesh, weight, start, options);
  if (trace.status != FlowStatus::converged) {
    throw NoConstantCurvatureMetric("no constant-curvature metric: calabi flow ended with status " +
                                    std::string(to_string(trace.status)));
  }
  std::vector<double> u(trace.final_metric.log_radii().begin(), trace.final_metric.log_radii().end());
  double sum = 0.0;
  for (double x : u) sum += x;
  const double shift = (sum - log_volume) / static_cast<double>(n);
  for (double& x : u) x -= shift;
  return u;
}

std::vector<ProbeRow> properness_probe(const Triangulation& mesh, const Weight& weight, std::span<const double> u_av,
                                       const std::vector<std::vector<double>>& directions,
                                       std::span<const double> radii) {
  check_lengths(mesh, u_av, "basepoint");
  const GeometryState base =
      compute_geometry(mesh, weight, PackingMetric::from_log_radii({u_av.begin(), u_av.end()}));
  for (double k : base.curvatures) {
    if (std::abs(k - base.avg_curvature) > kBasepointTolerance) {
      throw DomainError("probe basepoint does not have constant curvature");
    }
  }
  double previous = 0.0;
  for (double t : radii) {
    if (!(t > previous)) throw DomainError("probe radii must be positive and strictly increasing");
    previous = t;
  }
  const std::vector<double> target(u_av.size(), base.avg_curvature);

  std::vector<ProbeRow> rows;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    const std::vector<double>& dir = directions[d];
    check_lengths(mesh, dir, "probe direction");
    double sum = 0.0;
    double norm = 0.0;
    for (double x : dir) {
      sum += x;
      norm += x * x;
    }
    if (std::abs(sum) > 1e-10 * std::sqrt(norm) || norm == 0.0) {
      throw DomainError("probe direction " + std::to_string(d) + " is not a nonzero zero-sum vector");
    }

    auto point = [&](double t) {
      std::vector<double> u(u_av.begin(), u_av.end());
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += t * dir[i];
      return u;
    };
    rows.push_back({d, 0.0, 0.0});
    double f = 0.0;
    double t_prev = 0.0;
    for (double t : radii) {
      f += ricci_potential(mesh, weight, {point(t_prev), point(t), target, 2}).value;
      rows.push_back({d, t, f});
      t_prev = t;
    }
  }
  return rows;
}

void write_probe_csv(std::ostream& out, std::span<const ProbeRow> rows) {
  out << "direction_id,t,f\n";
  char buffer[128];
  for (const ProbeRow& row : rows) {
    std::snprintf(buffer, sizeof buffer, "%zu,%.17g,%.17g\n", row.direction_id, row.t, row.f);
    out << buffer;
  }
}

}  // namespace cpflow
