#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpflow/geometry.hpp"
#include "cpflow/mesh.hpp"

namespace cpflow {

// 17 significant digits.
std::string format_double(double x);
std::string format_vector(std::span<const double> v);

std::optional<double> parse_double(std::string_view text);

// Whitespace or comma separated reals; '#' starts a comment. Throws
// ParseError.
std::vector<double> parse_real_list(std::string_view text);
std::vector<double> load_real_list(const std::filesystem::path& path);

// Scalar (uniform Phi) or a file of "a b phi" lines naming every edge once.
Weight weight_from_spec(const Triangulation& mesh, std::string_view spec);
Weight parse_weight_file(const Triangulation& mesh, std::string_view text);

// Uniform in [0.5, 2], reproducible for a given seed.
std::vector<double> random_radii(std::size_t n, std::uint64_t seed);

// Scalar, comma list, "random" (seeded), or a file of N reals.
PackingMetric radii_from_spec(std::size_t n, std::string_view spec, std::uint64_t seed);

// "avg" for K_av, a comma list, or a file of N reals.
std::vector<double> target_from_spec(const Triangulation& mesh, std::string_view spec);

}  // namespace cpflow
