#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpflow/geometry.hpp"
#include "cpflow/mesh.hpp"

namespace cpflow {

enum class Verdict { admissible, inadmissible, gauss_bonnet_violation };
std::string_view to_string(Verdict verdict);

// Subsets are enumerated by size, then lexicographically; the first
// violation in that order is reported.
struct AdmissibilityReport {
  Verdict verdict = Verdict::admissible;
  std::vector<int> violating_subset;  // empty unless inadmissible
  double lhs = 0.0;
  double rhs = 0.0;
  bool borderline = false;  // |lhs - rhs| <= violation tolerance
  std::size_t subsets_checked = 0;
  double elapsed_seconds = 0.0;
  double gauss_bonnet_residual = 0.0;  // sum(target) - 2 pi chi
};

inline constexpr double kViolationTolerance = 1e-12;
inline constexpr double kGaussBonnetTolerance = 1e-9;
inline constexpr int kDefaultSubsetVertexLimit = 24;

// |sum(target) - 2 pi chi| < 1e-9
bool check_gauss_bonnet(std::span<const double> target, int chi);

struct AdmissibilityOptions {
  // Permit N > 24, up to the 62-vertex bitmask limit.
  bool allow_large = false;
};

// Verifies, for every nonempty proper vertex subset I,
//   sum_{i in I} target_i > -sum_{(e, v) in Lk(I)} (pi - phi(e)) + 2 pi chi(F_I).
// Throws DomainError for N above the size guard and DimensionError on a
// target length mismatch.
AdmissibilityReport check_admissible(const Triangulation& mesh, const Weight& weight, std::span<const double> target,
                                     const AdmissibilityOptions& options = {});

// check_admissible with the constant target K_av.
AdmissibilityReport constant_curvature_exists(const Triangulation& mesh, const Weight& weight,
                                              const AdmissibilityOptions& options = {});

struct SubsetInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated() const { return lhs <= rhs + kViolationTolerance; }
};

// Direct evaluation from link_pairs and subcomplex_euler.
SubsetInequality evaluate_subset(const Triangulation& mesh, const Weight& weight, std::span<const double> target,
                                 const VertexSubset& subset);

// "subset,lhs,rhs,violated" for every nonempty proper subset in report
// order; subsets written as vertex lists joined by ';'.
void write_subset_csv(std::ostream& out, const Triangulation& mesh, const Weight& weight,
                      std::span<const double> target, const AdmissibilityOptions& options = {});

std::string report_json(const AdmissibilityReport& report);

}  // namespace cpflow
