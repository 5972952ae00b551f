#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "cpflow/errors.hpp"
#include "cpflow/flows.hpp"
#include "cpflow/standard_meshes.hpp"
#include "json.hpp"
#include "support/oracles.hpp"

using namespace cpflow;
using doctest::Approx;

namespace {

double sum_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double energy_at(const Triangulation& mesh, const Weight& w, std::span<const double> u, std::span<const double> target) {
  const auto k = compute_geometry(mesh, w, PackingMetric::from_log_radii({u.begin(), u.end()})).curvatures;
  double e = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) e += (k[i] - target[i]) * (k[i] - target[i]);
  return e;
}

IntegratorOptions quick() {
  IntegratorOptions o;
  o.record_lambda1 = false;
  return o;
}

const std::vector<double> kInadmissible = {-2 * kPi, 2 * kPi, 2 * kPi, 2 * kPi};

}  // namespace

TEST_CASE("velocity formulas") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);
  for (double v : velocity(FlowKind::calabi(), mesh, w, PackingMetric::uniform(4, 1))) CHECK(std::abs(v) < 1e-14);
  for (double v : velocity(FlowKind::ricci_normalized(), mesh, w, PackingMetric::uniform(4, 1)))
    CHECK(std::abs(v) < 1e-14);

  oracle::Generator gen(21);
  const Triangulation oct = meshes::octahedron();
  for (int trial = 0; trial < 20; ++trial) {
    const Weight ow = Weight::from_values(oct, gen.weights(12));
    const PackingMetric m = PackingMetric::from_radii(gen.radii(6));
    const auto k = compute_geometry(oct, ow, m).curvatures;
    const DualLaplacian lap = assemble(oct, ow, m);

    const auto calabi = velocity(FlowKind::calabi(), oct, ow, m);
    CHECK(std::abs(sum_of(calabi)) < 1e-12);
    const auto lk = multiply(lap, k);
    for (int i = 0; i < 6; ++i) CHECK(calabi[i] == Approx(-lk[i]).epsilon(1e-12));

    const auto ricci = velocity(FlowKind::ricci_normalized(), oct, ow, m);
    for (int i = 0; i < 6; ++i) CHECK(ricci[i] == Approx(4 * kPi / 6 - k[i]).epsilon(1e-12));

    const std::vector<double> target = {1, 2, 3, -1, 2, 4 * kPi - 7};
    const auto prescribed = velocity(FlowKind::calabi_prescribed(target), oct, ow, m);
    std::vector<double> diff(6);
    for (int i = 0; i < 6; ++i) diff[i] = target[i] - k[i];
    const auto ld = multiply(lap, diff);
    for (int i = 0; i < 6; ++i) CHECK(prescribed[i] == Approx(ld[i]).epsilon(1e-12));
    const auto rp = velocity(FlowKind::ricci_prescribed(target), oct, ow, m);
    for (int i = 0; i < 6; ++i) CHECK(rp[i] == Approx(diff[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(velocity(FlowKind::calabi_prescribed({1, 2}), mesh, w, PackingMetric::uniform(4, 1)), DimensionError);
}

TEST_CASE("flow kind names round trip") {
  for (auto tag : {FlowKindTag::calabi, FlowKindTag::ricci_normalized, FlowKindTag::calabi_prescribed,
                   FlowKindTag::ricci_prescribed}) {
    CHECK(parse_flow_kind(to_string(tag)) == tag);
  }
  CHECK_FALSE(parse_flow_kind("yamabe").has_value());
}

TEST_CASE("single Euler step") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);

  const StepResult fixed = step(FlowKind::calabi(), mesh, w, PackingMetric::uniform(4, 1), 1e-2);
  for (double u : fixed.metric.log_radii()) CHECK(std::abs(u) < 1e-14);

  const PackingMetric start = PackingMetric::from_radii({1.2, 1, 1, 1});
  const StepResult s = step(FlowKind::calabi(), mesh, w, start, 1e-3);
  CHECK(s.energy_after < s.energy_before);
  CHECK(std::abs(sum_of(s.metric.log_radii()) - sum_of(start.log_radii())) < 1e-12);
  CHECK(s.step_size <= 1e-3);

  IntegratorOptions no_halving;  // a single halving cannot rescue h = 1e3
  no_halving.max_halvings = 1;
  CHECK_THROWS_AS(step(FlowKind::calabi(), mesh, w, PackingMetric::from_radii({5, 1, 1, 1}), 1e3, no_halving),
                  InvariantViolation);
  CHECK_THROWS_AS(step(FlowKind::calabi(), mesh, w, start, -1.0), DomainError);
}

TEST_CASE("integrator option validation") {
  IntegratorOptions o;
  CHECK_NOTHROW(o.validate());
  o.curvature_tolerance = 1.5;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = {};
  o.initial_step = 0;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = {};
  o.divergence_bound = -1;
  CHECK_THROWS_AS(o.validate(), DomainError);
}

TEST_CASE("calabi flow on the tetrahedron from (2, 1, 1, 1)") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);
  const FlowTrace trace = integrate(FlowKind::calabi(), mesh, w, PackingMetric::from_radii({2, 1, 1, 1}));
  REQUIRE(trace.status == FlowStatus::converged);
  for (double k : trace.final_curvature) CHECK(std::abs(k - kPi) < 1e-10);
  const auto r = trace.final_metric.radii();
  CHECK(r[1] == Approx(r[2]).epsilon(1e-12));
  CHECK(r[1] == Approx(r[3]).epsilon(1e-12));
  CHECK(r[0] * r[1] * r[2] * r[3] == Approx(2.0).epsilon(1e-8));
  CHECK(trace.max_sum_u_drift < 1e-9);
  CHECK(trace.max_prod_r_drift < 1e-8);
  CHECK(trace.max_energy_increase <= 0.0);

  // Records: t strictly increasing, energy non-increasing, first and last kept.
  REQUIRE(trace.records.size() >= 2);
  CHECK(trace.records.front().step == 0u);
  CHECK(trace.records.back().step == trace.accepted_steps);
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    CHECK(trace.records[i].t > trace.records[i - 1].t);
    CHECK(trace.records[i].energy <= trace.records[i - 1].energy);
  }

  const FlowTrace ricci = integrate(FlowKind::ricci_normalized(), mesh, w, PackingMetric::from_radii({2, 1, 1, 1}));
  REQUIRE(ricci.status == FlowStatus::converged);
  for (double k : ricci.final_curvature) CHECK(std::abs(k - kPi) < 1e-10);
}

TEST_CASE("conservation and descent along random calabi runs") {
  oracle::Generator gen(31);
  const Triangulation mesh = meshes::octahedron();
  for (int run = 0; run < 4; ++run) {
    const Weight w = Weight::from_values(mesh, gen.weights(12));
    const PackingMetric start = PackingMetric::from_radii(gen.radii(6, 1.5));
    const FlowTrace trace = integrate(FlowKind::calabi(), mesh, w, start, quick());
    CHECK(trace.status == FlowStatus::converged);
    CHECK(trace.max_sum_u_drift < 1e-9);
    CHECK(trace.max_prod_r_drift < 1e-8);
    CHECK(trace.max_energy_increase <= 0.0);
    for (std::size_t i = 1; i < trace.records.size(); ++i)
      CHECK(trace.records[i].energy <= trace.records[i - 1].energy);
  }
}

TEST_CASE("prescribed calabi flow conserves sum u") {
  const Triangulation mesh = meshes::octahedron();
  oracle::Generator gen(32);
  const Weight w = Weight::uniform(mesh, 0.3);
  const auto target = compute_geometry(mesh, w, PackingMetric::from_radii(gen.radii(6))).curvatures;
  const FlowTrace trace = integrate(FlowKind::calabi_prescribed(target), mesh, w, PackingMetric::uniform(6, 1), quick());
  CHECK(trace.status == FlowStatus::converged);
  CHECK(trace.max_sum_u_drift < 1e-9);
  CHECK(trace.max_prod_r_drift < 1e-8);
}

TEST_CASE("curvature evolves by L applied to the velocity") {
  oracle::Generator gen(41);
  const Triangulation mesh = meshes::octahedron();
  for (int trial = 0; trial < 10; ++trial) {
    const Weight w = Weight::from_values(mesh, gen.weights(12));
    const PackingMetric m = PackingMetric::from_radii(gen.radii(6));
    CHECK(curvature_derivative_check(FlowKind::calabi(), mesh, w, m, 1e-6) < 1e-5);
    CHECK(curvature_derivative_check(FlowKind::ricci_normalized(), mesh, w, m, 1e-6) < 1e-5);
  }
  const Triangulation tet = meshes::tetrahedron();
  CHECK(curvature_derivative_check(FlowKind::calabi(), tet, Weight::uniform(tet, 0), PackingMetric::uniform(4, 1),
                                   1e-6) < 1e-12);
}

TEST_CASE("energy derivative and decay inequality") {
  oracle::Generator gen(42);
  const Triangulation mesh = meshes::icosahedron();
  for (int trial = 0; trial < 10; ++trial) {
    const Weight w = Weight::from_values(mesh, gen.weights(mesh.edge_count()));
    const PackingMetric m = PackingMetric::from_radii(gen.radii(12));
    const std::vector<double> target(12, 4 * kPi / 12);
    const auto k = compute_geometry(mesh, w, m).curvatures;
    const DualLaplacian lap = assemble(mesh, w, m);
    const auto lk = multiply(lap, k);
    const double kl2k = std::inner_product(lk.begin(), lk.end(), lk.begin(), 0.0);

    // C'(t) = -2 K^T L^2 K along the flow direction, checked by a centered
    // difference of C.
    const auto phi = velocity(FlowKind::calabi(), mesh, w, m);
    const double h = 1e-6;
    std::vector<double> up(m.log_radii().begin(), m.log_radii().end());
    std::vector<double> down = up;
    for (int i = 0; i < 12; ++i) {
      up[i] += h * phi[i];
      down[i] -= h * phi[i];
    }
    const double fd = (energy_at(mesh, w, up, target) - energy_at(mesh, w, down, target)) / (2 * h);
    CHECK(fd == Approx(-2 * kl2k).epsilon(1e-4));

    double c = 0.0;
    for (int i = 0; i < 12; ++i) c += (k[i] - target[i]) * (k[i] - target[i]);
    const double l1 = lambda1(lap);
    CHECK(kl2k >= l1 * l1 * c - 1e-9);
  }
}

TEST_CASE("recorded lambda1 obeys the decay inequality along a run") {
  const Triangulation mesh = meshes::octahedron();
  oracle::Generator gen(43);
  const Weight w = Weight::uniform(mesh, 0);
  const FlowTrace trace = integrate(FlowKind::calabi(), mesh, w, PackingMetric::from_radii(gen.radii(6, 1.0)));
  REQUIRE(trace.status == FlowStatus::converged);
  for (const TraceRecord& rec : trace.records) {
    const DualLaplacian lap = assemble(mesh, w, PackingMetric::from_log_radii(rec.u));
    const auto lk = multiply(lap, rec.curvature);
    const double kl2k = std::inner_product(lk.begin(), lk.end(), lk.begin(), 0.0);
    CHECK(kl2k >= rec.lambda1 * rec.lambda1 * rec.energy - 1e-9);
  }
}

TEST_CASE("inadmissible prescribed curvature does not converge") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);
  IntegratorOptions o = quick();
  o.max_steps = 20000;
  const FlowTrace trace = integrate(FlowKind::calabi_prescribed(kInadmissible), mesh, w, PackingMetric::uniform(4, 1), o);
  CHECK(trace.status != FlowStatus::converged);
  CHECK(trace.max_energy_increase <= 0.0);
  // The circle at vertex 0 shrinks; the curvature there approaches -pi.
  CHECK(trace.final_metric.log_radii()[0] < -10.0);
  CHECK(trace.final_curvature[0] < -kPi + 1e-3);
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    CHECK(trace.records[i].u[0] <= trace.records[i - 1].u[0]);
}

TEST_CASE("divergence guard stops a run whose log radii leave the bound") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);
  IntegratorOptions o = quick();
  o.divergence_bound = 8.0;
  const FlowTrace trace = integrate(FlowKind::calabi_prescribed(kInadmissible), mesh, w, PackingMetric::uniform(4, 1), o);
  CHECK(trace.status == FlowStatus::diverged);
  double worst = 0.0;
  for (double u : trace.final_metric.log_radii()) worst = std::max(worst, std::abs(u));
  CHECK(worst > 8.0);

  IntegratorOptions few = quick();
  few.max_steps = 5;
  CHECK(integrate(FlowKind::calabi(), mesh, w, PackingMetric::from_radii({3, 1, 1, 1}), few).status ==
        FlowStatus::step_limit);
}

TEST_CASE("trace output") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);
  const FlowTrace trace = integrate(FlowKind::calabi(), mesh, w, PackingMetric::from_radii({2, 1, 1, 1}));

  std::ostringstream csv;
  write_trace_csv(csv, trace);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t,step,energy,max_curv_dev,lambda1,prod_r");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == trace.records.size());

  const auto json = nlohmann::json::parse(final_state_json(trace, 42ULL));
  CHECK(json["status"] == "converged");
  CHECK(json["kind"] == "calabi");
  CHECK(json["seed"] == 42);
  CHECK(json["u"].size() == 4u);
  CHECK(json["r"].size() == 4u);
  CHECK(json["K"].size() == 4u);
  CHECK(json["t_final"].get<double>() == trace.t_final);
  CHECK(json["energy"].get<double>() == trace.final_energy);
  CHECK(json["u"][0].get<double>() == trace.final_metric.log_radii()[0]);

  // Identical inputs give identical bytes.
  const FlowTrace again = integrate(FlowKind::calabi(), mesh, w, PackingMetric::from_radii({2, 1, 1, 1}));
  std::ostringstream csv2;
  write_trace_csv(csv2, again);
  CHECK(csv2.str() == csv.str());
  CHECK(final_state_json(again, 42ULL) == final_state_json(trace, 42ULL));
}

TEST_CASE("sampling keeps the trace bounded") {
  const Triangulation mesh = meshes::tetrahedron();
  const Weight w = Weight::uniform(mesh, 0);
  IntegratorOptions o = quick();
  o.sample_budget = 20;
  o.curvature_tolerance = 1e-13;
  const FlowTrace trace = integrate(FlowKind::calabi(), mesh, w, PackingMetric::from_radii({2, 1, 1, 1}), o);
  CHECK(trace.records.size() <= 2 * o.sample_budget + 1);
  CHECK(trace.records.size() >= o.sample_budget / 2);
  CHECK(trace.records.back().step == trace.accepted_steps);
}
