// Command line front end: convergence studies, mesh inspection and probes.
//
//   sosfem run <config> [--levels a-b] [--epsilon schedule] [--quad-degree k] [--output file]
//   sosfem mesh-info --problem flat|sphere --level k [--off file]
//   sosfem probes <config> [--quad-degree k] [--output file]
//
// Exit status: 0 success, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sosfem/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::optional<std::string> levels, epsilon, output;
  std::optional<int> quad_degree;

  void add_to(CLI::App* cmd, bool full) {
    if (full) {
      cmd->add_option("--levels", levels, "Level range, e.g. 3-7");
      cmd->add_option("--epsilon", epsilon, "Epsilon schedule, e.g. 1e-8 or geometric:0.2,0.5,5");
    }
    cmd->add_option("--quad-degree", quad_degree, "Quadrature degree (1-6)");
    cmd->add_option("--output", output, "Output file");
  }

  void apply(sosfem::ExperimentSpec& spec) const {
    if (levels) sosfem::apply_setting(spec, "levels", *levels);
    if (epsilon) sosfem::apply_setting(spec, "epsilon", *epsilon);
    if (quad_degree) sosfem::apply_setting(spec, "quad_degree", std::to_string(*quad_degree));
    if (output) sosfem::apply_setting(spec, "output", *output);
  }
};

void progress(const std::string& line) { std::cerr << line << '\n'; }

int cmd_run(const std::string& config, const Overrides& ov) {
  sosfem::ExperimentSpec spec = sosfem::parse_config_file(config);
  ov.apply(spec);
  if (spec.kind == sosfem::ExperimentKind::Probes)
    throw sosfem::ConfigError("experiment 'probes' is run with the probes subcommand");
  const sosfem::EOCTable table = sosfem::run_experiment(spec, progress);
  if (spec.output.empty()) {
    table.write_csv(std::cout);
  } else {
    sosfem::write_table(table, spec.output);
    std::cerr << "wrote " << spec.output << '\n';
  }
  return 0;
}

int cmd_probes(const std::string& config, const Overrides& ov) {
  sosfem::ExperimentSpec spec = sosfem::parse_config_file(config);
  ov.apply(spec);
  if (spec.kind != sosfem::ExperimentKind::Probes)
    throw sosfem::ConfigError("the probes subcommand needs 'experiment = probes'");
  spec.validate();
  sosfem::ProbeSuiteOptions opt;
  opt.quad_degree = spec.quad_degree;
  const auto reports = sosfem::run_probe_suite(opt, progress);
  if (spec.output.empty()) {
    sosfem::write_probe_report(std::cout, reports);
  } else {
    std::ofstream out(spec.output, std::ios::binary);
    if (!out) throw sosfem::Error("cannot open output file '" + spec.output + "'");
    sosfem::write_probe_report(out, reports);
    std::cerr << "wrote " << spec.output << '\n';
  }
  return 0;
}

int cmd_mesh_info(const std::string& problem, int level, const std::optional<std::string>& off) {
  if (level < 0 || level > sosfem::kMaxMeshLevel)
    throw sosfem::ConfigError("level must lie in 0.." + std::to_string(sosfem::kMaxMeshLevel));
  const sosfem::TriangleMesh mesh =
      problem == "flat" ? sosfem::build_disc_mesh(level) : sosfem::build_octasphere(level);
  const auto stats = sosfem::mesh_size(mesh);
  std::cout << "problem: " << problem << '\n'
            << "level: " << level << '\n'
            << "vertices: " << stats.num_vertices << '\n'
            << "triangles: " << stats.num_triangles << '\n'
            << "h: " << sosfem::format_sci(stats.h) << '\n'
            << "area: " << sosfem::format_sci(stats.total_area) << '\n'
            << "boundary vertices: " << mesh.boundary_vertices.size() << '\n';
  for (const auto& c : mesh.constraint_vertices)
    std::cout << "constraint " << c.label << " -> vertex " << c.vertex << '\n';
  const std::string problems = sosfem::validate_mesh(mesh);
  std::cout << "valid: " << (problems.empty() ? "yes" : problems) << '\n';
  if (off) {
    std::ofstream out(*off, std::ios::binary);
    if (!out) throw sosfem::Error("cannot open output file '" + *off + "'");
    sosfem::write_off(out, mesh);
    std::cerr << "wrote " << *off << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-constrained membrane solver: convergence studies and assumption probes"};
  app.require_subcommand(1);

  std::string run_config, probe_config, problem;
  int level = 0;
  std::optional<std::string> off;
  Overrides run_ov, probe_ov;

  auto* run = app.add_subcommand("run", "Run a convergence study and write its CSV table");
  run->add_option("config", run_config, "Config file")->required();
  run_ov.add_to(run, true);

  auto* info = app.add_subcommand("mesh-info", "Print statistics of a generated mesh");
  info->add_option("--problem", problem, "flat or sphere")
      ->required()
      ->check(CLI::IsMember({"flat", "sphere"}));
  info->add_option("--level", level, "Refinement level")->required();
  info->add_option("--off", off, "Also write the mesh as an OFF file");

  auto* probes = app.add_subcommand("probes", "Run the assumption probe suite");
  probes->add_option("config", probe_config, "Config file")->required();
  probe_ov.add_to(probes, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_config, run_ov);
    if (*info) return cmd_mesh_info(problem, level, off);
    if (*probes) return cmd_probes(probe_config, probe_ov);
  } catch (const sosfem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
