#include <doctest.h>

#include <sstream>

#include "cpflow/errors.hpp"
#include "cpflow/flows.hpp"
#include "cpflow/io.hpp"
#include "cpflow/standard_meshes.hpp"
#include "cpflow/thurston.hpp"
#include "json.hpp"
#include "support/oracles.hpp"

using namespace cpflow;
using doctest::Approx;

namespace {

const std::vector<double> kInadmissible = {-2 * kPi, 2 * kPi, 2 * kPi, 2 * kPi};

std::vector<bool> indicator(const VertexSubset& s, int n) {
  std::vector<bool> in(n, false);
  for (int v : s.members()) in[v] = true;
  return in;
}

}  // namespace

TEST_CASE("Gauss-Bonnet check") {
  CHECK(check_gauss_bonnet(std::vector<double>(4, kPi), 2));
  CHECK(check_gauss_bonnet(kInadmissible, 2));
  CHECK_FALSE(check_gauss_bonnet(std::vector<double>{kPi, kPi, kPi, kPi + 1e-6}, 2));
  CHECK(check_gauss_bonnet(std::vector<double>(7, 0.0), 0));

  const Triangulation tet = meshes::tetrahedron();
  const auto report = check_admissible(tet, Weight::uniform(tet, 0), std::vector<double>{1, 1, 1, 1});
  CHECK(report.verdict == Verdict::gauss_bonnet_violation);
  CHECK(report.subsets_checked == 0u);
  CHECK(report.gauss_bonnet_residual == Approx(4 - 4 * kPi).epsilon(1e-14));
}

TEST_CASE("tetrahedron verdicts") {
  const Triangulation tet = meshes::tetrahedron();
  const Weight zero = Weight::uniform(tet, 0);

  const auto ok = constant_curvature_exists(tet, zero);
  CHECK(ok.verdict == Verdict::admissible);
  CHECK(ok.subsets_checked == 14u);
  CHECK(ok.violating_subset.empty());

  const SubsetInequality single = evaluate_subset(tet, zero, std::vector<double>(4, kPi), VertexSubset({0}, 4));
  CHECK(single.lhs == Approx(kPi).epsilon(1e-15));
  CHECK(single.rhs == Approx(-kPi).epsilon(1e-15));

  const auto bad = check_admissible(tet, zero, kInadmissible);
  CHECK(bad.verdict == Verdict::inadmissible);
  CHECK(bad.violating_subset == std::vector<int>{0});
  CHECK(bad.lhs == Approx(-2 * kPi).epsilon(1e-15));
  CHECK(bad.rhs == Approx(-kPi).epsilon(1e-15));
  CHECK_FALSE(bad.borderline);

  const Weight orthogonal = Weight::uniform(tet, kPi / 2);
  CHECK(constant_curvature_exists(tet, orthogonal).verdict == Verdict::admissible);
  const SubsetInequality ortho = evaluate_subset(tet, orthogonal, std::vector<double>(4, kPi), VertexSubset({0}, 4));
  CHECK(ortho.rhs == Approx(kPi / 2).epsilon(1e-15));

  CHECK_THROWS_AS(check_admissible(tet, zero, std::vector<double>{1, 2}), DimensionError);
}

TEST_CASE("octahedron with tangent circles is admissible") {
  const Triangulation oct = meshes::octahedron();
  const auto report = constant_curvature_exists(oct, Weight::uniform(oct, 0));
  CHECK(report.verdict == Verdict::admissible);
  CHECK(report.subsets_checked == 62u);
}

TEST_CASE("borderline subsets are flagged as violations") {
  // Target with sum over {0} exactly equal to the right-hand side -pi.
  const Triangulation tet = meshes::tetrahedron();
  const std::vector<double> target = {-kPi, 5 * kPi / 3, 5 * kPi / 3, 5 * kPi / 3};
  const auto report = check_admissible(tet, Weight::uniform(tet, 0), target);
  CHECK(report.verdict == Verdict::inadmissible);
  CHECK(report.violating_subset == std::vector<int>{0});
  CHECK(report.borderline);
}

TEST_CASE("fast enumeration agrees with direct evaluation and brute force") {
  oracle::Generator gen(61);
  for (const auto& mesh : {meshes::tetrahedron(), meshes::octahedron(), meshes::torus7()}) {
    const int n = mesh.vertex_count();
    for (int trial = 0; trial < 40; ++trial) {
      const auto phi = gen.weights(mesh.edge_count());
      const Weight w = Weight::from_values(mesh, phi);
      // Random targets on the Gauss-Bonnet plane, scaled to straddle the
      // admissibility boundary.
      std::vector<double> target(n);
      const double spread = gen.uniform(0.5, 6.0);
      double sum = 0.0;
      for (double& x : target) sum += (x = gen.uniform(-spread, spread));
      const double shift = (2 * kPi * mesh.euler_characteristic() - sum) / n;
      for (double& x : target) x += shift;

      const auto report = check_admissible(mesh, w, target);
      const auto expected = oracle::first_violation(mesh, phi, target);
      CHECK(report.violating_subset == expected);
      CHECK((report.verdict == Verdict::admissible) == expected.empty());
      if (!expected.empty()) {
        const VertexSubset s(expected, n);
        const SubsetInequality direct = evaluate_subset(mesh, w, target, s);
        const auto sides = oracle::subset_sides(mesh, phi, target, indicator(s, n));
        CHECK(report.lhs == Approx(direct.lhs).epsilon(1e-12));
        CHECK(report.rhs == Approx(direct.rhs).epsilon(1e-12));
        CHECK(direct.rhs == Approx(sides.rhs).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("direct subset evaluation matches the oracle") {
  oracle::Generator gen(62);
  const Triangulation mesh = meshes::torus_grid(3, 4);
  const int n = mesh.vertex_count();
  for (int trial = 0; trial < 200; ++trial) {
    const auto phi = gen.weights(mesh.edge_count());
    std::vector<double> target(n);
    for (double& x : target) x = gen.uniform(-3, 3);
    std::vector<int> members;
    for (int v = 0; v < n; ++v)
      if (gen.integer(0, 1)) members.push_back(v);
    if (members.empty() || static_cast<int>(members.size()) == n) continue;
    const VertexSubset s(members, n);
    const SubsetInequality direct = evaluate_subset(mesh, Weight::from_values(mesh, phi), target, s);
    const auto sides = oracle::subset_sides(mesh, phi, target, indicator(s, n));
    CHECK(direct.lhs == Approx(sides.lhs).epsilon(1e-12));
    CHECK(direct.rhs == Approx(sides.rhs).epsilon(1e-12));
  }
}

TEST_CASE("size guard") {
  const Triangulation big = meshes::torus_grid(5, 5);
  REQUIRE(big.vertex_count() > kDefaultSubsetVertexLimit);
  CHECK_THROWS_AS(constant_curvature_exists(big, Weight::uniform(big, 0)), DomainError);
}

TEST_CASE("subset CSV and report JSON") {
  const Triangulation tet = meshes::tetrahedron();
  const Weight zero = Weight::uniform(tet, 0);
  std::ostringstream csv;
  write_subset_csv(csv, tet, zero, kInadmissible);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "subset,lhs,rhs,violated");
  int rows = 0;
  std::string first;
  while (std::getline(lines, line)) {
    if (rows == 0) first = line;
    ++rows;
  }
  CHECK(rows == 14);
  CHECK(first.rfind("0,", 0) == 0);
  CHECK(first.substr(first.rfind(',') + 1) == "1");

  const auto bad = nlohmann::json::parse(report_json(check_admissible(tet, zero, kInadmissible)));
  CHECK(bad["verdict"] == "inadmissible");
  CHECK(bad["violating_subset"] == nlohmann::json::array({0}));
  CHECK(bad["lhs"].get<double>() == Approx(-2 * kPi));
  CHECK_FALSE(bad.contains("elapsed_seconds"));

  const auto ok = nlohmann::json::parse(report_json(constant_curvature_exists(tet, zero)));
  CHECK(ok["verdict"] == "admissible");
  CHECK(ok["violating_subset"].is_null());
  CHECK(ok["subsets_checked"] == 14);
}

TEST_CASE("admissibility agrees with convergence of the prescribed flow") {
  oracle::Generator gen(63);
  const Triangulation tet = meshes::tetrahedron();
  const Weight zero = Weight::uniform(tet, 0);
  IntegratorOptions options;
  options.record_lambda1 = false;
  options.max_steps = 20000;
  options.curvature_tolerance = 1e-9;

  // An admissible target realized by some metric, and the inadmissible one.
  const auto realized = compute_geometry(tet, zero, PackingMetric::from_radii({1, 2, 3, 0.5})).curvatures;
  for (const auto& target : {realized, kInadmissible}) {
    const bool admissible = check_admissible(tet, zero, target).verdict == Verdict::admissible;
    for (int start = 0; start < 5; ++start) {
      const auto trace = integrate(FlowKind::calabi_prescribed(target), tet, zero,
                                   PackingMetric::from_radii(gen.radii(4)), options);
      CHECK((trace.status == FlowStatus::converged) == admissible);
    }
  }
}
