#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <random>
#include <sstream>

#include "cpflow/errors.hpp"
#include "cpflow/flows.hpp"
#include "cpflow/geometry.hpp"
#include "cpflow/io.hpp"
#include "cpflow/laplacian.hpp"
#include "cpflow/mesh.hpp"
#include "cpflow/potential.hpp"
#include "cpflow/thurston.hpp"

namespace cpflow::cli {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string mesh;
  std::string phi = "0";
  std::string radii = "1";
  std::uint64_t seed = 0;
  std::string out = ".";
  double tol = IntegratorOptions{}.curvature_tolerance;
  std::size_t max_steps = IntegratorOptions{}.max_steps;
  double initial_step = IntegratorOptions{}.initial_step;
  std::string kind = "calabi";
  std::string target = "avg";
  std::string dump_laplacian;
  bool compare_ricci = false;
  bool dual_route = false;
  std::string dump_subsets;
  bool allow_large = false;
  int starts = 1;
  int directions = 8;
  std::string probe_radii = "1,2,4,8";
};

class OutputError : public Error {
 public:
  using Error::Error;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw OutputError("cannot write " + path.string());
  return file;
}

void write_text(const fs::path& path, const std::string& text) { open_output(path) << text; }

struct Problem {
  Triangulation mesh;
  Weight weight;
};

Problem load_problem(const RunConfig& config) {
  if (config.mesh.empty()) throw DomainError("--mesh is required");
  Triangulation mesh = load_mesh(config.mesh);
  Weight weight = weight_from_spec(mesh, config.phi);
  return {std::move(mesh), std::move(weight)};
}

IntegratorOptions integrator_options(const RunConfig& config) {
  IntegratorOptions options;
  options.curvature_tolerance = config.tol;
  options.max_steps = config.max_steps;
  options.initial_step = config.initial_step;
  options.validate();
  return options;
}

FlowKind make_kind(FlowKindTag tag, const Problem& problem, const RunConfig& config) {
  switch (tag) {
    case FlowKindTag::calabi:
      return FlowKind::calabi();
    case FlowKindTag::ricci_normalized:
      return FlowKind::ricci_normalized();
    case FlowKindTag::calabi_prescribed:
      return FlowKind::calabi_prescribed(target_from_spec(problem.mesh, config.target));
    case FlowKindTag::ricci_prescribed:
      return FlowKind::ricci_prescribed(target_from_spec(problem.mesh, config.target));
  }
  throw DomainError("unknown flow kind");
}

FlowKindTag ricci_counterpart(FlowKindTag tag) {
  switch (tag) {
    case FlowKindTag::calabi:
    case FlowKindTag::ricci_normalized:
      return FlowKindTag::ricci_normalized;
    case FlowKindTag::calabi_prescribed:
    case FlowKindTag::ricci_prescribed:
      return FlowKindTag::ricci_prescribed;
  }
  return FlowKindTag::ricci_normalized;
}

void dump_laplacian(const RunConfig& config, const Problem& problem, const PackingMetric& metric) {
  if (config.dump_laplacian.empty()) return;
  const auto route = config.dual_route ? AssemblyRoute::dual_length : AssemblyRoute::analytic;
  std::ofstream file = open_output(config.dump_laplacian);
  write_coordinate_text(file, assemble(problem.mesh, problem.weight, metric, route));
}

int cmd_validate(const RunConfig& config, std::ostream& out) {
  if (config.mesh.empty()) throw DomainError("--mesh is required");
  const Triangulation mesh = load_mesh(config.mesh);
  out << "N=" << mesh.vertex_count() << " E=" << mesh.edge_count() << " F=" << mesh.face_count()
      << " chi=" << mesh.euler_characteristic() << "\n";
  std::map<int, int> histogram;
  for (int v = 0; v < mesh.vertex_count(); ++v) ++histogram[mesh.degree(v)];
  for (const auto& [degree, count] : histogram) out << "degree " << degree << ": " << count << "\n";
  return kOk;
}

int cmd_curvature(const RunConfig& config, std::ostream& out) {
  const Problem problem = load_problem(config);
  const PackingMetric metric = radii_from_spec(problem.mesh.vertex_count(), config.radii, config.seed);
  const GeometryState geometry = compute_geometry(problem.mesh, problem.weight, metric);
  const std::vector<double> target = target_from_spec(problem.mesh, config.target);

  out << "N=" << problem.mesh.vertex_count() << " chi=" << geometry.euler_characteristic
      << " k_av=" << format_double(geometry.avg_curvature) << "\n";
  for (std::size_t i = 0; i < geometry.curvatures.size(); ++i) {
    out << "K[" << i << "]=" << format_double(geometry.curvatures[i]) << "\n";
  }
  out << "energy=" << format_double(calabi_energy(geometry.curvatures, target)) << "\n";
  out << "gauss_bonnet_residual=" << format_double(geometry.gauss_bonnet_residual()) << "\n";
  out << "seed=" << config.seed << "\n";
  dump_laplacian(config, problem, metric);
  return kOk;
}

struct FlowJob {
  fs::path directory;
  std::string prefix;
  FlowKind kind;
  PackingMetric start;
};

struct FlowOutcome {
  FlowTrace trace;
  std::string summary;
};

FlowOutcome run_job(const FlowJob& job, const Problem& problem, const IntegratorOptions& options,
                    std::uint64_t seed) {
  FlowOutcome outcome{integrate(job.kind, problem.mesh, problem.weight, job.start, options), {}};
  {
    std::ofstream csv = open_output(job.directory / (job.prefix + "trace.csv"));
    write_trace_csv(csv, outcome.trace);
  }
  write_text(job.directory / (job.prefix + "final.json"), final_state_json(outcome.trace, seed));
  std::ostringstream line;
  line << job.kind.name() << ": " << to_string(outcome.trace.status) << " steps=" << outcome.trace.accepted_steps
       << " t=" << format_double(outcome.trace.t_final) << " energy=" << format_double(outcome.trace.final_energy);
  outcome.summary = line.str();
  return outcome;
}

int cmd_flow(const RunConfig& config, std::ostream& out) {
  const Problem problem = load_problem(config);
  const auto tag = parse_flow_kind(config.kind);
  if (!tag) throw DomainError("unknown flow kind '" + config.kind + "'");
  if (config.starts < 1) throw DomainError("--starts must be at least 1");
  const IntegratorOptions options = integrator_options(config);
  const std::size_t n = static_cast<std::size_t>(problem.mesh.vertex_count());

  std::vector<FlowJob> jobs;
  for (int s = 0; s < config.starts; ++s) {
    const fs::path directory = config.starts == 1 ? fs::path(config.out) : fs::path(config.out) / ("start_" + std::to_string(s));
    const PackingMetric start = radii_from_spec(n, config.radii, config.seed + static_cast<std::uint64_t>(s));
    jobs.push_back({directory, "", make_kind(*tag, problem, config), start});
    if (config.compare_ricci) {
      jobs.push_back({directory, "ricci_", make_kind(ricci_counterpart(*tag), problem, config), start});
    }
  }

  std::vector<std::future<FlowOutcome>> futures;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const std::uint64_t seed = config.seed + (config.starts == 1 ? 0 : j / (config.compare_ricci ? 2 : 1));
    futures.push_back(std::async(jobs.size() == 1 ? std::launch::deferred : std::launch::async, run_job,
                                 std::cref(jobs[j]), std::cref(problem), std::cref(options), seed));
  }
  bool all_converged = true;
  for (std::size_t j = 0; j < futures.size(); ++j) {
    FlowOutcome outcome = futures[j].get();
    if (config.starts > 1) out << "start " << j / (config.compare_ricci ? 2 : 1) << " ";
    out << outcome.summary << "\n";
    all_converged = all_converged && outcome.trace.status == FlowStatus::converged;
    if (j == 0) dump_laplacian(config, problem, outcome.trace.final_metric);
  }
  return all_converged ? kOk : kNotConverged;
}

int cmd_check(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const Problem problem = load_problem(config);
  const std::vector<double> target = target_from_spec(problem.mesh, config.target);
  const AdmissibilityOptions options{config.allow_large};
  const AdmissibilityReport report = check_admissible(problem.mesh, problem.weight, target, options);
  out << report_json(report);
  err << "checked " << report.subsets_checked << " subsets in " << report.elapsed_seconds << " s\n";
  if (!config.dump_subsets.empty()) {
    std::ofstream csv = open_output(config.dump_subsets);
    write_subset_csv(csv, problem.mesh, problem.weight, target, options);
  }
  return report.verdict == Verdict::admissible ? kOk : kNotConverged;
}

std::vector<std::vector<double>> probe_directions(std::size_t n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> directions;
  while (static_cast<int>(directions.size()) < count) {
    std::vector<double> d(n);
    for (double& x : d) x = normal(rng);
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(n);
    double norm = 0.0;
    for (double& x : d) {
      x -= mean;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : d) x /= norm;
    directions.push_back(std::move(d));
  }
  return directions;
}

int cmd_potential_probe(const RunConfig& config, std::ostream& out) {
  const Problem problem = load_problem(config);
  if (config.directions < 1) throw DomainError("--directions must be at least 1");
  const std::vector<double> radii = parse_real_list(config.probe_radii);
  std::vector<double> u_av;
  try {
    u_av = constant_curvature_log_metric(problem.mesh, problem.weight);
  } catch (const NoConstantCurvatureMetric& e) {
    out << e.what() << "\n";
    return kNotConverged;
  }
  const auto directions = probe_directions(u_av.size(), config.directions, config.seed);
  const auto rows = properness_probe(problem.mesh, problem.weight, u_av, directions, radii);
  {
    std::ofstream csv = open_output(fs::path(config.out) / "probe.csv");
    write_probe_csv(csv, rows);
  }
  for (std::size_t d = 0; d < directions.size(); ++d) {
    bool increasing = true;
    double minimum = 0.0;
    double previous = -1.0;
    for (const ProbeRow& row : rows) {
      if (row.direction_id != d) continue;
      minimum = std::min(minimum, row.f);
      if (row.t > 0.0 && !(row.f > previous)) increasing = false;
      previous = row.f;
    }
    out << "direction " << d << ": " << (increasing ? "increasing" : "NOT increasing")
        << " min_f=" << format_double(minimum) << "\n";
  }
  return kOk;
}

void add_shared_options(CLI::App& app, RunConfig& config) {
  app.add_option("--mesh", config.mesh, "triangulation file");
  app.add_option("--phi", config.phi, "edge weight: scalar in [0, pi/2] or file of 'a b phi' lines");
  app.add_option("--radii", config.radii, "initial radii: scalar, comma list, 'random', or file");
  app.add_option("--seed", config.seed, "RNG seed for random radii and probe directions");
  app.add_option("--out", config.out, "output directory");
  app.add_option("--tol", config.tol, "curvature tolerance");
  app.add_option("--max-steps", config.max_steps, "integrator step limit");
  app.add_option("--initial-step", config.initial_step, "initial Euler step");
  app.add_option("--kind", config.kind, "calabi | ricci_normalized | calabi_prescribed | ricci_prescribed");
  app.add_option("--target", config.target, "target curvature: 'avg', comma list, or file");
  app.add_option("--dump-laplacian", config.dump_laplacian, "write L as 'i j value' lines");
  app.add_flag("--compare-ricci", config.compare_ricci, "also run the matching Ricci flow");
  app.add_flag("--dual-route", config.dual_route, "assemble dumped L from dual lengths");
  app.add_option("--dump-subsets", config.dump_subsets, "write per-subset inequality rows as CSV");
  app.add_flag("--allow-large", config.allow_large, "permit subset enumeration beyond 24 vertices");
  app.add_option("--starts", config.starts, "number of independent flow starts");
  app.add_option("--directions", config.directions, "number of probe rays");
  app.add_option("--probe-radii", config.probe_radii, "comma list of increasing probe distances");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circle packing metrics by combinatorial Calabi flow", "cpflow"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; command-line flags take precedence");

  RunConfig config;
  add_shared_options(app, config);
  auto* validate = app.add_subcommand("validate", "check a triangulation and print its statistics");
  auto* curvature = app.add_subcommand("curvature", "print curvature, energy and Gauss-Bonnet residual");
  auto* flow = app.add_subcommand("flow", "integrate a flow and write trace.csv and final.json");
  auto* check = app.add_subcommand("check", "decide admissibility of a target curvature");
  auto* probe = app.add_subcommand("potential-probe", "evaluate the Ricci potential along rays");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (validate->parsed()) return cmd_validate(config, out);
    if (curvature->parsed()) return cmd_curvature(config, out);
    if (flow->parsed()) return cmd_flow(config, out);
    if (check->parsed()) return cmd_check(config, out, err);
    if (probe->parsed()) return cmd_potential_probe(config, out);
  } catch (const MeshError& e) {
    err << "invalid mesh: " << e.what() << "\n";
    return kInputError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kInputError;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const OutputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInputError;
}

}  // namespace cpflow::cli
