#include "cpflow/thurston.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>

#include "cpflow/errors.hpp"
#include "json.hpp"

namespace cpflow {
namespace {

constexpr int kBitmaskLimit = 62;

// Per-subset evaluation over bitmasks; each call is O(E + F).
class MaskEvaluator {
 public:
  MaskEvaluator(const Triangulation& mesh, const Weight& weight, std::span<const double> target)
      : target_(target) {
    for (const Edge& e : mesh.edges()) edge_masks_.push_back(bit(e.a) | bit(e.b));
    const auto& faces = mesh.faces();
    for (std::size_t f = 0; f < faces.size(); ++f) {
      FaceEntry entry;
      for (int c = 0; c < 3; ++c) {
        entry.corners[c] = bit(faces[f][c]);
        // The edge opposite corner c joins corners c + 1 and c + 2.
        entry.opposite_gap[c] = kPi - weight[mesh.face_edges(static_cast<int>(f))[(c + 1) % 3]];
      }
      entry.mask = entry.corners[0] | entry.corners[1] | entry.corners[2];
      faces_.push_back(entry);
    }
  }

  SubsetInequality operator()(std::uint64_t subset) const {
    double lhs = 0.0;
    int vertices = 0;
    for (std::size_t i = 0; i < target_.size(); ++i) {
      if (subset & bit(static_cast<int>(i))) {
        lhs += target_[i];
        ++vertices;
      }
    }
    int edges = 0;
    for (std::uint64_t m : edge_masks_) edges += (m & subset) == m;
    int faces = 0;
    double link = 0.0;
    for (const FaceEntry& face : faces_) {
      const std::uint64_t inside = face.mask & subset;
      if (inside == face.mask) {
        ++faces;
      } else if (inside != 0 && (inside & (inside - 1)) == 0) {
        for (int c = 0; c < 3; ++c) {
          if (inside == face.corners[c]) link += face.opposite_gap[c];
        }
      }
    }
    return {lhs, -link + 2.0 * kPi * (vertices - edges + faces)};
  }

 private:
  struct FaceEntry {
    std::uint64_t mask = 0;
    std::uint64_t corners[3] = {0, 0, 0};
    double opposite_gap[3] = {0.0, 0.0, 0.0};
  };

  static std::uint64_t bit(int v) { return std::uint64_t{1} << v; }

  std::span<const double> target_;
  std::vector<std::uint64_t> edge_masks_;
  std::vector<FaceEntry> faces_;
};

void check_inputs(const Triangulation& mesh, std::span<const double> target, const AdmissibilityOptions& options) {
  const int n = mesh.vertex_count();
  if (target.size() != static_cast<std::size_t>(n)) {
    throw DimensionError("target has " + std::to_string(target.size()) + " entries for " + std::to_string(n) +
                         " vertices");
  }
  if (n > kBitmaskLimit) {
    throw DomainError("exponential enumeration: " + std::to_string(n) + " vertices exceeds the hard limit of " +
                      std::to_string(kBitmaskLimit));
  }
  if (n > kDefaultSubsetVertexLimit && !options.allow_large) {
    throw DomainError("exponential enumeration: " + std::to_string(n) + " vertices exceeds " +
                      std::to_string(kDefaultSubsetVertexLimit) + "; pass the large-instance override to proceed");
  }
}

// Visits every nonempty proper subset of {0, ..., n-1} by size, then in
// lexicographic order of the sorted member list. Stops when visit returns
// false.
template <typename Visit>
void enumerate_subsets(int n, Visit&& visit) {
  std::vector<int> members;
  for (int k = 1; k < n; ++k) {
    members.resize(k);
    std::iota(members.begin(), members.end(), 0);
    while (true) {
      std::uint64_t mask = 0;
      for (int v : members) mask |= std::uint64_t{1} << v;
      if (!visit(mask, static_cast<const std::vector<int>&>(members))) return;
      int i = k - 1;
      while (i >= 0 && members[i] == n - k + i) --i;
      if (i < 0) break;
      ++members[i];
      for (int j = i + 1; j < k; ++j) members[j] = members[j - 1] + 1;
    }
  }
}

std::string join_members(const std::vector<int>& members) {
  std::string s;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(members[i]);
  }
  return s;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::admissible:
      return "admissible";
    case Verdict::inadmissible:
      return "inadmissible";
    case Verdict::gauss_bonnet_violation:
      return "gauss_bonnet_violation";
  }
  return "unknown";
}

bool check_gauss_bonnet(std::span<const double> target, int chi) {
  const double sum = std::accumulate(target.begin(), target.end(), 0.0);
  return std::abs(sum - 2.0 * kPi * chi) < kGaussBonnetTolerance;
}

AdmissibilityReport check_admissible(const Triangulation& mesh, const Weight& weight, std::span<const double> target,
                                     const AdmissibilityOptions& options) {
  check_inputs(mesh, target, options);
  const auto start = std::chrono::steady_clock::now();
  AdmissibilityReport report;
  const int chi = mesh.euler_characteristic();
  report.gauss_bonnet_residual = std::accumulate(target.begin(), target.end(), 0.0) - 2.0 * kPi * chi;

  if (!check_gauss_bonnet(target, chi)) {
    report.verdict = Verdict::gauss_bonnet_violation;
  } else {
    const MaskEvaluator evaluate(mesh, weight, target);
    enumerate_subsets(mesh.vertex_count(), [&](std::uint64_t mask, const std::vector<int>& members) {
      ++report.subsets_checked;
      const SubsetInequality q = evaluate(mask);
      if (!q.violated()) return true;
      report.verdict = Verdict::inadmissible;
      report.violating_subset = members;
      report.lhs = q.lhs;
      report.rhs = q.rhs;
      report.borderline = std::abs(q.lhs - q.rhs) <= kViolationTolerance;
      return false;
    });
  }
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

AdmissibilityReport constant_curvature_exists(const Triangulation& mesh, const Weight& weight,
                                              const AdmissibilityOptions& options) {
  const std::vector<double> target(mesh.vertex_count(), average_curvature(mesh));
  return check_admissible(mesh, weight, target, options);
}

SubsetInequality evaluate_subset(const Triangulation& mesh, const Weight& weight, std::span<const double> target,
                                 const VertexSubset& subset) {
  if (target.size() != static_cast<std::size_t>(mesh.vertex_count())) {
    throw DimensionError("target length does not match vertex count");
  }
  SubsetInequality q;
  for (int v : subset.members()) q.lhs += target[v];
  double link = 0.0;
  for (const LinkPair& pair : link_pairs(mesh, subset)) {
    link += kPi - weight[mesh.edge_index(pair.edge.a, pair.edge.b)];
  }
  q.rhs = -link + 2.0 * kPi * subcomplex_euler(mesh, subset);
  return q;
}

void write_subset_csv(std::ostream& out, const Triangulation& mesh, const Weight& weight,
                      std::span<const double> target, const AdmissibilityOptions& options) {
  check_inputs(mesh, target, options);
  const MaskEvaluator evaluate(mesh, weight, target);
  out << "subset,lhs,rhs,violated\n";
  char buffer[96];
  enumerate_subsets(mesh.vertex_count(), [&](std::uint64_t mask, const std::vector<int>& members) {
    const SubsetInequality q = evaluate(mask);
    std::snprintf(buffer, sizeof buffer, ",%.17g,%.17g,%d\n", q.lhs, q.rhs, q.violated() ? 1 : 0);
    out << join_members(members) << buffer;
    return true;
  });
}

std::string report_json(const AdmissibilityReport& report) {
  nlohmann::ordered_json j;
  j["verdict"] = std::string(to_string(report.verdict));
  if (report.verdict == Verdict::inadmissible) {
    j["violating_subset"] = report.violating_subset;
    j["lhs"] = report.lhs;
    j["rhs"] = report.rhs;
    j["borderline"] = report.borderline;
  } else {
    j["violating_subset"] = nullptr;
  }
  j["subsets_checked"] = report.subsets_checked;
  j["gauss_bonnet_residual"] = report.gauss_bonnet_residual;
  return j.dump(2) + "\n";
}

}  // namespace cpflow
