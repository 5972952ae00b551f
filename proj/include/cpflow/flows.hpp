#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpflow/geometry.hpp"
#include "cpflow/laplacian.hpp"
#include "cpflow/mesh.hpp"

namespace cpflow {

enum class FlowKindTag { calabi, ricci_normalized, calabi_prescribed, ricci_prescribed };
std::string_view to_string(FlowKindTag tag);

// Which ODE to integrate in log-radius coordinates u:
//   calabi             u' = -L K
//   ricci_normalized   u' = K_av - K
//   calabi_prescribed  u' = L (Kbar - K)
//   ricci_prescribed   u' = Kbar - K
class FlowKind {
 public:
  static FlowKind calabi() { return FlowKind(FlowKindTag::calabi, {}); }
  static FlowKind ricci_normalized() { return FlowKind(FlowKindTag::ricci_normalized, {}); }
  static FlowKind calabi_prescribed(std::vector<double> target) {
    return FlowKind(FlowKindTag::calabi_prescribed, std::move(target));
  }
  static FlowKind ricci_prescribed(std::vector<double> target) {
    return FlowKind(FlowKindTag::ricci_prescribed, std::move(target));
  }

  FlowKindTag tag() const { return tag_; }
  bool is_calabi() const { return tag_ == FlowKindTag::calabi || tag_ == FlowKindTag::calabi_prescribed; }
  bool is_prescribed() const {
    return tag_ == FlowKindTag::calabi_prescribed || tag_ == FlowKindTag::ricci_prescribed;
  }
  std::string_view name() const;

  // K_av * (1, ..., 1) or the prescribed curvature; throws DimensionError on
  // a length mismatch.
  std::vector<double> target(const Triangulation& mesh) const;

 private:
  FlowKind(FlowKindTag tag, std::vector<double> target) : tag_(tag), prescribed_(std::move(target)) {}
  FlowKindTag tag_;
  std::vector<double> prescribed_;
};

std::optional<FlowKindTag> parse_flow_kind(std::string_view name);

struct IntegratorOptions {
  double initial_step = 1e-2;
  std::size_t max_steps = 1'000'000;
  // Converged once max_i |K_i - target_i| drops below this.
  double curvature_tolerance = 1e-10;
  // Diverged once max_i |u_i - u_i(0)| exceeds this.
  double divergence_bound = 50.0;

  // Step controller. A trial step is rejected (and h halved) when the guarded
  // energy rises or the velocity changes by more than max_velocity_change
  // relative to its sup norm.
  double max_velocity_change = 0.1;
  double growth_factor = 1.2;
  int growth_interval = 10;
  int max_halvings = 60;

  // Calabi kinds re-center sum(u) onto its initial value this often.
  std::size_t recenter_interval = 1000;
  // Approximate number of trace records kept.
  std::size_t sample_budget = 1000;
  bool record_lambda1 = true;

  // Throws DomainError.
  void validate() const;
};

enum class FlowStatus { converged, diverged, step_limit };
std::string_view to_string(FlowStatus status);

struct TraceRecord {
  double t = 0.0;
  std::size_t step = 0;
  std::vector<double> u;
  std::vector<double> curvature;
  double energy = 0.0;  // sum (K_i - target_i)^2
  double step_size = 0.0;
  double lambda1 = 0.0;  // NaN when not recorded
  double max_curvature_deviation = 0.0;
  double prod_r = 0.0;
};

struct FlowTrace {
  FlowKindTag kind = FlowKindTag::calabi;
  std::vector<TraceRecord> records;
  FlowStatus status = FlowStatus::step_limit;
  PackingMetric final_metric = PackingMetric::from_radii({});
  std::vector<double> final_curvature;
  double t_final = 0.0;
  double final_energy = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  // Worst values seen over every accepted step, not just the samples.
  double max_energy_increase = 0.0;  // calabi kinds; <= 0 means monotone
  double max_sum_u_drift = 0.0;
  double max_prod_r_drift = 0.0;  // |prod r(t) / prod r(0) - 1|
};

std::vector<double> velocity(const FlowKind& kind, const Triangulation& mesh, const Weight& weight,
                             const PackingMetric& metric);

struct StepResult {
  PackingMetric metric;
  double step_size = 0.0;  // the accepted h
  int halvings = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

// One explicit Euler step u <- u + h * velocity. Calabi kinds halve h until
// the Calabi energy does not increase; Ricci kinds until the Ricci potential
// does not increase. Throws InvariantViolation after max_halvings failures.
StepResult step(const FlowKind& kind, const Triangulation& mesh, const Weight& weight, const PackingMetric& metric,
                double h, const IntegratorOptions& options = {});

FlowTrace integrate(const FlowKind& kind, const Triangulation& mesh, const Weight& weight,
                    const PackingMetric& initial, const IntegratorOptions& options = {});

// Max residual of the centered difference of K along the flow direction phi
// against L phi (and, for calabi, against -L^2 K).
double curvature_derivative_check(const FlowKind& kind, const Triangulation& mesh, const Weight& weight,
                                  const PackingMetric& metric, double h_fd);

// Header "t,step,energy,max_curv_dev,lambda1,prod_r", one row per record.
void write_trace_csv(std::ostream& out, const FlowTrace& trace);
// JSON object {kind, status, t_final, steps, u, r, K, energy[, seed]}.
std::string final_state_json(const FlowTrace& trace, std::optional<unsigned long long> seed = std::nullopt);

}  // namespace cpflow
