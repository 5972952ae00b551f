#include "cpflow/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cpflow/errors.hpp"

namespace cpflow {
namespace {

std::uint64_t edge_key(int u, int v) {
  const Edge e = Edge::of(u, v);
  return (static_cast<std::uint64_t>(e.a) << 32) | static_cast<std::uint32_t>(e.b);
}

std::string describe_face(std::size_t index, const Face& f) {
  return "face " + std::to_string(index) + " (" + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " +
         std::to_string(f[2]) + ")";
}

std::string describe_edge(const Edge& e) {
  return "edge {" + std::to_string(e.a) + "," + std::to_string(e.b) + "}";
}

struct Token {
  std::string_view text;
  std::size_t column = 0;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    tokens.push_back({line.substr(start, i - start), start + 1});
  }
  return tokens;
}

long long parse_integer(const Token& token, std::size_t line) {
  long long value = 0;
  const char* first = token.text.data();
  const char* last = first + token.text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(line, token.column, "expected an integer, found '" + std::string(token.text) + "'");
  }
  return value;
}

// Faces around v must form one closed cycle: walk the link graph (each link
// vertex has degree two because every edge lies in exactly two faces) and
// check it is connected.
bool link_is_single_cycle(int v, const std::vector<int>& incident_faces, const std::vector<Face>& faces) {
  std::unordered_map<int, std::vector<int>> adjacency;
  for (int f : incident_faces) {
    std::array<int, 2> opposite{};
    int n = 0;
    for (int w : faces[f]) {
      if (w != v) opposite[n++] = w;
    }
    adjacency[opposite[0]].push_back(opposite[1]);
    adjacency[opposite[1]].push_back(opposite[0]);
  }
  for (const auto& [w, adj] : adjacency) {
    if (adj.size() != 2) return false;
  }
  std::set<int> seen;
  std::vector<int> stack{adjacency.begin()->first};
  while (!stack.empty()) {
    const int w = stack.back();
    stack.pop_back();
    if (!seen.insert(w).second) continue;
    for (int x : adjacency[w]) {
      if (!seen.count(x)) stack.push_back(x);
    }
  }
  return seen.size() == adjacency.size();
}

}  // namespace

Triangulation Triangulation::from_faces(int vertex_count, std::vector<Face> faces) {
  if (vertex_count <= 0) {
    throw MeshError("vertex count", "must be positive, got " + std::to_string(vertex_count));
  }
  if (faces.empty()) throw MeshError("face count", "a closed surface needs at least one face");

  Triangulation mesh;
  mesh.vertex_count_ = vertex_count;

  std::set<Face> seen_faces;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (int v : face) {
      if (v < 0 || v >= vertex_count) {
        throw MeshError("vertex index out of range", describe_face(f, face));
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw MeshError("face with repeated vertex", describe_face(f, face));
    }
    Face key = face;
    std::sort(key.begin(), key.end());
    if (!seen_faces.insert(key).second) throw MeshError("duplicate face", describe_face(f, face));
  }

  std::map<Edge, std::vector<int>> incidences;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int c = 0; c < 3; ++c) {
      incidences[Edge::of(faces[f][c], faces[f][(c + 1) % 3])].push_back(static_cast<int>(f));
    }
  }
  for (const auto& [edge, fs] : incidences) {
    if (fs.size() != 2) {
      const std::string invariant =
          fs.size() == 1 ? "edge in 1 face" : "edge in " + std::to_string(fs.size()) + " faces";
      throw MeshError(invariant, describe_edge(edge) + " (closed surfaces need exactly two faces per edge)");
    }
  }

  std::vector<std::vector<int>> vertex_faces(vertex_count);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int v : faces[f]) vertex_faces[v].push_back(static_cast<int>(f));
  }
  for (int v = 0; v < vertex_count; ++v) {
    if (vertex_faces[v].empty()) {
      throw MeshError("isolated vertex", "vertex " + std::to_string(v) + " belongs to no face");
    }
    if (!link_is_single_cycle(v, vertex_faces[v], faces)) {
      throw MeshError("vertex link not a single cycle", "vertex " + std::to_string(v));
    }
  }

  mesh.edges_.reserve(incidences.size());
  mesh.edge_faces_.reserve(incidences.size());
  mesh.neighbors_.assign(vertex_count, {});
  for (const auto& [edge, fs] : incidences) {
    const int e = static_cast<int>(mesh.edges_.size());
    mesh.edges_.push_back(edge);
    mesh.edge_faces_.push_back({std::min(fs[0], fs[1]), std::max(fs[0], fs[1])});
    mesh.edge_lookup_.emplace(edge_key(edge.a, edge.b), e);
    mesh.neighbors_[edge.a].push_back(edge.b);
    mesh.neighbors_[edge.b].push_back(edge.a);
  }
  for (auto& adj : mesh.neighbors_) std::sort(adj.begin(), adj.end());

  mesh.face_edges_.resize(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int c = 0; c < 3; ++c) {
      mesh.face_edges_[f][c] = mesh.edge_lookup_.at(edge_key(faces[f][c], faces[f][(c + 1) % 3]));
    }
  }
  mesh.faces_ = std::move(faces);
  return mesh;
}

std::optional<int> Triangulation::find_edge(int u, int v) const {
  auto it = edge_lookup_.find(edge_key(u, v));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

int Triangulation::edge_index(int u, int v) const {
  if (auto e = find_edge(u, v)) return *e;
  throw DomainError("no edge between vertices " + std::to_string(u) + " and " + std::to_string(v));
}

VertexSubset::VertexSubset(std::vector<int> members, int vertex_count) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (members_.empty()) throw DomainError("vertex subset must be nonempty");
  if (members_.front() < 0 || members_.back() >= vertex_count) {
    throw DomainError("vertex subset references a vertex outside [0, " + std::to_string(vertex_count) + ")");
  }
  if (static_cast<int>(members_.size()) == vertex_count) {
    throw DomainError("vertex subset must be a proper subset");
  }
}

bool VertexSubset::contains(int v) const { return std::binary_search(members_.begin(), members_.end(), v); }

Triangulation parse_mesh(std::string_view text) {
  std::optional<std::pair<long long, long long>> header;
  std::size_t header_line = 0;
  std::vector<Face> faces;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = tokenize(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (!header) {
      if (tokens.size() != 2) {
        throw ParseError(line_no, tokens.size() > 2 ? tokens[2].column : 0,
                         "header must be two integers 'N F'");
      }
      header = std::pair{parse_integer(tokens[0], line_no), parse_integer(tokens[1], line_no)};
      header_line = line_no;
      if (header->first <= 0) throw ParseError(line_no, tokens[0].column, "vertex count must be positive");
      if (header->second <= 0) throw ParseError(line_no, tokens[1].column, "face count must be positive");
      continue;
    }

    if (static_cast<long long>(faces.size()) >= header->second) {
      throw ParseError(line_no, tokens[0].column,
                       "more face lines than the " + std::to_string(header->second) + " declared");
    }
    if (tokens.size() != 3) {
      throw ParseError(line_no, tokens.size() > 3 ? tokens[3].column : 0, "face line must have three vertex indices");
    }
    Face face{};
    for (int c = 0; c < 3; ++c) {
      const long long v = parse_integer(tokens[c], line_no);
      if (v < 0 || v >= header->first) {
        throw ParseError(line_no, tokens[c].column,
                         "vertex index " + std::to_string(v) + " outside [0, " + std::to_string(header->first) + ")");
      }
      face[c] = static_cast<int>(v);
    }
    faces.push_back(face);
    if (end == text.size()) break;
  }

  if (!header) throw ParseError(line_no, 0, "missing 'N F' header");
  if (static_cast<long long>(faces.size()) != header->second) {
    throw ParseError(line_no, 0,
                     "expected " + std::to_string(header->second) + " faces after header on line " +
                         std::to_string(header_line) + ", found " + std::to_string(faces.size()));
  }
  return Triangulation::from_faces(static_cast<int>(header->first), std::move(faces));
}

Triangulation load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open mesh file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_mesh(buffer.str());
}

std::string format_mesh(const Triangulation& mesh) {
  std::ostringstream out;
  out << mesh.vertex_count() << ' ' << mesh.face_count() << '\n';
  for (const Face& f : mesh.faces()) out << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  return out.str();
}

int subcomplex_euler(const Triangulation& mesh, std::span<const int> sorted_members) {
  std::vector<char> inside(mesh.vertex_count(), 0);
  for (int v : sorted_members) inside[v] = 1;
  int edges = 0;
  for (const Edge& e : mesh.edges()) edges += inside[e.a] && inside[e.b];
  int faces = 0;
  for (const Face& f : mesh.faces()) faces += inside[f[0]] && inside[f[1]] && inside[f[2]];
  return static_cast<int>(sorted_members.size()) - edges + faces;
}

int subcomplex_euler(const Triangulation& mesh, const VertexSubset& subset) {
  return subcomplex_euler(mesh, std::span<const int>(subset.members()));
}

std::vector<LinkPair> link_pairs(const Triangulation& mesh, const VertexSubset& subset) {
  std::vector<LinkPair> pairs;
  for (const Face& f : mesh.faces()) {
    for (int c = 0; c < 3; ++c) {
      const int v = f[c];
      const int p = f[(c + 1) % 3];
      const int q = f[(c + 2) % 3];
      if (subset.contains(v) && !subset.contains(p) && !subset.contains(q)) {
        pairs.push_back({Edge::of(p, q), v});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace cpflow
