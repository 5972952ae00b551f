#include "cpflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "cpflow/errors.hpp"
#include "json.hpp"

namespace cpflow {
namespace {

const double kTwoSqrt3 = 2.0 * std::sqrt(3.0);

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sum_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Everything the integrator needs at one point u.
struct Evaluation {
  PackingMetric metric = PackingMetric::from_radii({});
  GeometryState geometry;
  std::optional<DualLaplacian> lap;
  std::vector<double> residual;  // K - target
  std::vector<double> velocity;
  double energy = 0.0;

  std::span<const double> u() const { return metric.log_radii(); }
};

class Evaluator {
 public:
  Evaluator(const FlowKind& kind, const Triangulation& mesh, const Weight& weight)
      : kind_(kind), mesh_(mesh), weight_(weight), target_(kind.target(mesh)) {}

  const std::vector<double>& target() const { return target_; }

  Evaluation at(PackingMetric metric) const {
    Evaluation ev;
    ev.metric = std::move(metric);
    ev.geometry = compute_geometry(mesh_, weight_, ev.metric);
    ev.residual.resize(target_.size());
    for (std::size_t i = 0; i < target_.size(); ++i) ev.residual[i] = ev.geometry.curvatures[i] - target_[i];
    ev.energy = dot(ev.residual, ev.residual);
    if (kind_.is_calabi()) {
      ev.lap = assemble(mesh_, weight_, ev.metric);
      ev.velocity = cpflow::apply(*ev.lap, ev.residual);
      check_velocity_bound(ev);
    } else {
      ev.velocity.resize(ev.residual.size());
      for (std::size_t i = 0; i < ev.residual.size(); ++i) ev.velocity[i] = -ev.residual[i];
    }
    return ev;
  }

  Evaluation at_log_radii(std::vector<double> u) const { return at(PackingMetric::from_log_radii(std::move(u))); }

  const DualLaplacian& laplacian(Evaluation& ev) const {
    if (!ev.lap) ev.lap = assemble(mesh_, weight_, ev.metric);
    return *ev.lap;
  }

  // Change of the Ricci potential from a to b along the segment, by
  // three-point Simpson.
  double potential_change(const Evaluation& a, const Evaluation& b) const {
    const auto ua = a.u();
    const auto ub = b.u();
    std::vector<double> delta(ua.size());
    std::vector<double> mid(ua.size());
    for (std::size_t i = 0; i < ua.size(); ++i) {
      delta[i] = ub[i] - ua[i];
      mid[i] = ua[i] + 0.5 * delta[i];
    }
    const GeometryState g = compute_geometry(mesh_, weight_, PackingMetric::from_log_radii(mid));
    double mid_term = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) mid_term += (g.curvatures[i] - target_[i]) * delta[i];
    return (dot(a.residual, delta) + 4.0 * mid_term + dot(b.residual, delta)) / 6.0;
  }

 private:
  // |(Delta g)_i| <= 2 sqrt 3 * sum_{j~i} |g_j - g_i| because every B_ij < 2 sqrt 3.
  void check_velocity_bound(const Evaluation& ev) const {
    for (int i = 0; i < mesh_.vertex_count(); ++i) {
      double bound = 0.0;
      for (int j : mesh_.neighbors(i)) bound += std::abs(ev.residual[j] - ev.residual[i]);
      bound *= kTwoSqrt3;
      if (std::abs(ev.velocity[i]) > bound * (1.0 + 1e-12) + 1e-300) {
        throw InvariantViolation("Laplacian of curvature at vertex " + std::to_string(i) + " exceeds its bound");
      }
    }
  }

  const FlowKind& kind_;
  const Triangulation& mesh_;
  const Weight& weight_;
  std::vector<double> target_;
};

constexpr double kMaxLogRadius = 700.0;

struct TrialOutcome {
  Evaluation next;
  double h = 0.0;
  int halvings = 0;
};

// Euler trial steps from `current`, halving h until the guard accepts.
TrialOutcome guarded_step(const FlowKind& kind, const Evaluator& evaluator, const Evaluation& current, double h,
                          const IntegratorOptions& options) {
  const auto u = current.u();
  const double speed = max_abs(current.velocity);
  for (int halvings = 0; halvings <= options.max_halvings; ++halvings, h *= 0.5) {
    std::vector<double> trial(u.begin(), u.end());
    bool representable = true;
    for (std::size_t i = 0; i < trial.size(); ++i) {
      trial[i] += h * current.velocity[i];
      // exp(u) must stay a positive finite double.
      representable = representable && std::abs(trial[i]) < kMaxLogRadius;
    }
    if (!representable) continue;
    Evaluation next = evaluator.at_log_radii(std::move(trial));

    const bool descends = kind.is_calabi() ? next.energy <= current.energy
                                           : evaluator.potential_change(current, next) <= 0.0;
    double change = 0.0;
    for (std::size_t i = 0; i < next.velocity.size(); ++i) {
      change = std::max(change, std::abs(next.velocity[i] - current.velocity[i]));
    }
    const bool smooth = change <= options.max_velocity_change * speed;
    if (descends && smooth) return {std::move(next), h, halvings};
  }
  throw InvariantViolation("step collapse: no accepted step after " + std::to_string(options.max_halvings) +
                           " halvings");
}

}  // namespace

std::string_view to_string(FlowKindTag tag) {
  switch (tag) {
    case FlowKindTag::calabi:
      return "calabi";
    case FlowKindTag::ricci_normalized:
      return "ricci_normalized";
    case FlowKindTag::calabi_prescribed:
      return "calabi_prescribed";
    case FlowKindTag::ricci_prescribed:
      return "ricci_prescribed";
  }
  return "unknown";
}

std::string_view FlowKind::name() const { return to_string(tag_); }

std::vector<double> FlowKind::target(const Triangulation& mesh) const {
  const std::size_t n = static_cast<std::size_t>(mesh.vertex_count());
  if (!is_prescribed()) return std::vector<double>(n, average_curvature(mesh));
  if (prescribed_.size() != n) {
    throw DimensionError("prescribed curvature has " + std::to_string(prescribed_.size()) + " entries for " +
                         std::to_string(n) + " vertices");
  }
  for (double k : prescribed_) {
    if (!std::isfinite(k)) throw DomainError("prescribed curvature must be finite");
  }
  return prescribed_;
}

std::optional<FlowKindTag> parse_flow_kind(std::string_view name) {
  if (name == "calabi") return FlowKindTag::calabi;
  if (name == "ricci_normalized" || name == "ricci") return FlowKindTag::ricci_normalized;
  if (name == "calabi_prescribed") return FlowKindTag::calabi_prescribed;
  if (name == "ricci_prescribed") return FlowKindTag::ricci_prescribed;
  return std::nullopt;
}

void IntegratorOptions::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("integrator option ") + what);
  };
  require(initial_step > 0.0 && std::isfinite(initial_step), "initial_step must be positive");
  require(max_steps > 0, "max_steps must be positive");
  require(curvature_tolerance > 0.0 && curvature_tolerance < 1.0, "curvature_tolerance must lie in (0, 1)");
  require(divergence_bound > 0.0, "divergence_bound must be positive");
  require(max_velocity_change > 0.0, "max_velocity_change must be positive");
  require(growth_factor >= 1.0, "growth_factor must be at least 1");
  require(growth_interval > 0, "growth_interval must be positive");
  require(max_halvings > 0, "max_halvings must be positive");
  require(recenter_interval > 0, "recenter_interval must be positive");
  require(sample_budget > 0, "sample_budget must be positive");
}

std::string_view to_string(FlowStatus status) {
  switch (status) {
    case FlowStatus::converged:
      return "converged";
    case FlowStatus::diverged:
      return "diverged";
    case FlowStatus::step_limit:
      return "step_limit";
  }
  return "unknown";
}

std::vector<double> velocity(const FlowKind& kind, const Triangulation& mesh, const Weight& weight,
                             const PackingMetric& metric) {
  return Evaluator(kind, mesh, weight).at(metric).velocity;
}

StepResult step(const FlowKind& kind, const Triangulation& mesh, const Weight& weight, const PackingMetric& metric,
                double h, const IntegratorOptions& options) {
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  const Evaluator evaluator(kind, mesh, weight);
  const Evaluation current = evaluator.at(metric);
  TrialOutcome outcome = guarded_step(kind, evaluator, current, h, options);
  return {outcome.next.metric, outcome.h, outcome.halvings, current.energy, outcome.next.energy};
}

FlowTrace integrate(const FlowKind& kind, const Triangulation& mesh, const Weight& weight,
                    const PackingMetric& initial, const IntegratorOptions& options) {
  options.validate();
  const Evaluator evaluator(kind, mesh, weight);
  const std::size_t n = static_cast<std::size_t>(mesh.vertex_count());
  const std::vector<double> u0(initial.log_radii().begin(), initial.log_radii().end());
  const double sum_u0 = sum_of(u0);
  double sum_log_r0 = 0.0;
  for (double r : initial.radii()) sum_log_r0 += std::log(r);

  FlowTrace trace;
  trace.kind = kind.tag();

  Evaluation current = evaluator.at(initial);
  double t = 0.0;
  double h = options.initial_step;
  std::size_t stride = 1;
  int since_growth = 0;

  auto record = [&](Evaluation& ev) {
    TraceRecord rec;
    rec.t = t;
    rec.step = trace.accepted_steps;
    rec.u.assign(ev.u().begin(), ev.u().end());
    rec.curvature = ev.geometry.curvatures;
    rec.energy = ev.energy;
    rec.step_size = h;
    rec.max_curvature_deviation = max_abs(ev.residual);
    double sum_log_r = 0.0;
    for (double r : ev.metric.radii()) sum_log_r += std::log(r);
    rec.prod_r = std::exp(sum_log_r);
    rec.lambda1 = options.record_lambda1 ? lambda1(evaluator.laplacian(ev)) : std::numeric_limits<double>::quiet_NaN();
    trace.records.push_back(std::move(rec));
  };

  record(current);
  for (;;) {
    if (max_abs(current.residual) < options.curvature_tolerance) {
      trace.status = FlowStatus::converged;
      break;
    }
    double excursion = 0.0;
    for (std::size_t i = 0; i < n; ++i) excursion = std::max(excursion, std::abs(current.u()[i] - u0[i]));
    if (excursion > options.divergence_bound) {
      trace.status = FlowStatus::diverged;
      break;
    }
    if (trace.accepted_steps >= options.max_steps) {
      trace.status = FlowStatus::step_limit;
      break;
    }

    TrialOutcome outcome = guarded_step(kind, evaluator, current, h, options);
    trace.rejected_steps += static_cast<std::size_t>(outcome.halvings);
    h = outcome.h;
    t += h;
    ++trace.accepted_steps;
    if (kind.is_calabi()) {
      trace.max_energy_increase =
          std::max(trace.max_energy_increase, outcome.next.energy - current.energy);
    }
    current = std::move(outcome.next);

    if (kind.is_calabi() && trace.accepted_steps % options.recenter_interval == 0) {
      std::vector<double> u(current.u().begin(), current.u().end());
      const double shift = (sum_of(u) - sum_u0) / static_cast<double>(n);
      for (double& x : u) x -= shift;
      Evaluation recentered = evaluator.at_log_radii(std::move(u));
      // K is scale invariant; the shift may only move the energy by rounding.
      if (recentered.energy <= current.energy) current = std::move(recentered);
    }
    if (kind.is_calabi()) {
      trace.max_sum_u_drift = std::max(trace.max_sum_u_drift, std::abs(sum_of(current.u()) - sum_u0));
      double sum_log_r = 0.0;
      for (double r : current.metric.radii()) sum_log_r += std::log(r);
      trace.max_prod_r_drift = std::max(trace.max_prod_r_drift, std::abs(std::expm1(sum_log_r - sum_log_r0)));
    }

    if (outcome.halvings > 0) {
      since_growth = 0;
    } else if (++since_growth >= options.growth_interval) {
      h *= options.growth_factor;
      since_growth = 0;
    }

    if (trace.accepted_steps % stride == 0) {
      record(current);
      if (trace.records.size() > 2 * options.sample_budget) {
        std::vector<TraceRecord> kept;
        kept.reserve(trace.records.size() / 2 + 1);
        for (std::size_t k = 0; k < trace.records.size(); k += 2) kept.push_back(std::move(trace.records[k]));
        trace.records = std::move(kept);
        stride *= 2;
      }
    }
  }
  if (trace.records.back().step != trace.accepted_steps) record(current);

  trace.t_final = t;
  trace.final_energy = current.energy;
  trace.final_curvature = current.geometry.curvatures;
  trace.final_metric = current.metric;
  return trace;
}

double curvature_derivative_check(const FlowKind& kind, const Triangulation& mesh, const Weight& weight,
                                  const PackingMetric& metric, double h_fd) {
  if (!(h_fd > 0.0)) throw DomainError("finite-difference step must be positive");
  const std::vector<double> phi = velocity(kind, mesh, weight, metric);
  const auto u = metric.log_radii();
  std::vector<double> up(u.begin(), u.end());
  std::vector<double> down(u.begin(), u.end());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    up[i] += h_fd * phi[i];
    down[i] -= h_fd * phi[i];
  }
  const auto k_up = compute_geometry(mesh, weight, PackingMetric::from_log_radii(up)).curvatures;
  const auto k_down = compute_geometry(mesh, weight, PackingMetric::from_log_radii(down)).curvatures;

  const DualLaplacian lap = assemble(mesh, weight, metric);
  const std::vector<double> predicted = multiply(lap, phi);
  std::vector<double> calabi_predicted;
  if (kind.tag() == FlowKindTag::calabi) {
    const auto k = compute_geometry(mesh, weight, metric).curvatures;
    calabi_predicted = multiply(lap, multiply(lap, k));
    for (double& x : calabi_predicted) x = -x;
  }

  double residual = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double fd = (k_up[i] - k_down[i]) / (2.0 * h_fd);
    residual = std::max(residual, std::abs(fd - predicted[i]));
    if (!calabi_predicted.empty()) residual = std::max(residual, std::abs(fd - calabi_predicted[i]));
  }
  return residual;
}

void write_trace_csv(std::ostream& out, const FlowTrace& trace) {
  out << "t,step,energy,max_curv_dev,lambda1,prod_r\n";
  char buffer[256];
  for (const TraceRecord& rec : trace.records) {
    std::snprintf(buffer, sizeof buffer, "%.17g,%zu,%.17g,%.17g,%.17g,%.17g\n", rec.t, rec.step, rec.energy,
                  rec.max_curvature_deviation, rec.lambda1, rec.prod_r);
    out << buffer;
  }
}

std::string final_state_json(const FlowTrace& trace, std::optional<unsigned long long> seed) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(trace.kind));
  j["status"] = std::string(to_string(trace.status));
  j["t_final"] = trace.t_final;
  j["steps"] = trace.accepted_steps;
  j["u"] = std::vector<double>(trace.final_metric.log_radii().begin(), trace.final_metric.log_radii().end());
  j["r"] = std::vector<double>(trace.final_metric.radii().begin(), trace.final_metric.radii().end());
  j["K"] = trace.final_curvature;
  j["energy"] = trace.final_energy;
  if (seed) j["seed"] = *seed;
  return j.dump(2);
}

}  // namespace cpflow
