#include "cpflow/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cpflow/errors.hpp"

namespace cpflow {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

struct Token {
  std::string_view text;
  int column = 0;
};

std::vector<Token> split(std::string_view line, bool commas) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  auto is_sep = [&](char c) { return c == ' ' || c == '\t' || c == '\r' || (commas && c == ','); };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    const std::size_t begin = i;
    while (i < line.size() && !is_sep(line[i])) ++i;
    if (i > begin) tokens.push_back({line.substr(begin, i - begin), static_cast<int>(begin) + 1});
  }
  return tokens;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int number = 0;
  while (!text.empty()) {
    ++number;
    const auto end = text.find('\n');
    fn(number, strip_comment(text.substr(0, end)));
    if (end == std::string_view::npos) break;
    text.remove_prefix(end + 1);
  }
}

std::optional<int> parse_int(std::string_view text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

bool looks_like_list(std::string_view spec) {
  if (spec.find(',') == std::string_view::npos) return false;
  for (char c : spec) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == ',' || c == '.' || c == '-' || c == '+' ||
          c == 'e' || c == 'E' || c == ' ')) {
      return false;
    }
  }
  return true;
}

std::vector<double> sized_list(std::vector<double> values, std::size_t n, const char* what) {
  if (values.size() != n) {
    throw DimensionError(std::string(what) + " has " + std::to_string(values.size()) + " entries for " +
                         std::to_string(n) + " vertices");
  }
  return values;
}

}  // namespace

std::string format_double(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

std::string format_vector(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> values;
  for_each_line(text, [&](int line, std::string_view content) {
    for (const Token& token : split(content, true)) {
      const auto value = parse_double(token.text);
      if (!value) throw ParseError(line, token.column, "expected a real number, got '" + std::string(token.text) + "'");
      values.push_back(*value);
    }
  });
  return values;
}

std::vector<double> load_real_list(const std::filesystem::path& path) { return parse_real_list(read_file(path)); }

Weight parse_weight_file(const Triangulation& mesh, std::string_view text) {
  std::vector<double> phi(mesh.edge_count(), 0.0);
  std::vector<bool> seen(mesh.edge_count(), false);
  for_each_line(text, [&](int line, std::string_view content) {
    const auto tokens = split(content, false);
    if (tokens.empty()) return;
    if (tokens.size() != 3) throw ParseError(line, tokens.front().column, "expected 'a b phi'");
    const auto a = parse_int(tokens[0].text);
    const auto b = parse_int(tokens[1].text);
    if (!a) throw ParseError(line, tokens[0].column, "expected a vertex index");
    if (!b) throw ParseError(line, tokens[1].column, "expected a vertex index");
    const auto value = parse_double(tokens[2].text);
    if (!value) throw ParseError(line, tokens[2].column, "expected a real weight");
    const auto edge = mesh.find_edge(*a, *b);
    if (!edge) throw ParseError(line, tokens[0].column, "not an edge of the mesh");
    if (seen[*edge]) throw ParseError(line, tokens[0].column, "edge listed twice");
    seen[*edge] = true;
    phi[*edge] = *value;
  });
  for (std::size_t e = 0; e < seen.size(); ++e) {
    if (!seen[e]) {
      const Edge& edge = mesh.edges()[e];
      throw DomainError("weight file is missing edge " + std::to_string(edge.a) + " " + std::to_string(edge.b));
    }
  }
  return Weight::from_values(mesh, std::move(phi));
}

Weight weight_from_spec(const Triangulation& mesh, std::string_view spec) {
  if (const auto scalar = parse_double(spec)) return Weight::uniform(mesh, *scalar);
  return parse_weight_file(mesh, read_file(std::filesystem::path(spec)));
}

std::vector<double> random_radii(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 2.0);
  std::vector<double> r(n);
  for (double& x : r) x = dist(rng);
  return r;
}

PackingMetric radii_from_spec(std::size_t n, std::string_view spec, std::uint64_t seed) {
  if (spec == "random") return PackingMetric::from_radii(random_radii(n, seed));
  if (const auto scalar = parse_double(spec)) return PackingMetric::uniform(n, *scalar);
  if (looks_like_list(spec)) return PackingMetric::from_radii(sized_list(parse_real_list(spec), n, "radii"));
  return PackingMetric::from_radii(sized_list(load_real_list(std::filesystem::path(spec)), n, "radii file"));
}

std::vector<double> target_from_spec(const Triangulation& mesh, std::string_view spec) {
  const std::size_t n = static_cast<std::size_t>(mesh.vertex_count());
  if (spec == "avg") return std::vector<double>(n, average_curvature(mesh));
  if (looks_like_list(spec) || parse_double(spec)) return sized_list(parse_real_list(spec), n, "target");
  return sized_list(load_real_list(std::filesystem::path(spec)), n, "target file");
}

}  // namespace cpflow
