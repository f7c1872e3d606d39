// cdglab: batch driver for the DG Poisson experiment suite.
//
// Subcommands
//   solve        one (scheme, p, n) cell: error norms and residual
//   convergence  error grids over p x n x C11 with rates
//   nullspace    operator nullity census on the periodic grid
//   spectrum     scaled spectral radii (h/p)^2 |lambda_max| of M^-1 A
//   memory       closed-form stored-entries-per-element table
//   sparsity     structural pattern census and bitmap/coordinate export
//   mesh         mesh JSON export for external tooling
//
// All file outputs are deterministic: identical configurations produce
// byte-identical CSV/JSON. Wall times go to the console, never into files.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cdglab/analysis.hpp"
#include "cdglab/assembly.hpp"
#include "cdglab/basis.hpp"
#include "cdglab/manufactured.hpp"
#include "cdglab/mesh.hpp"
#include "cdglab/mesh_io.hpp"
#include "cdglab/pattern.hpp"
#include "cdglab/runner.hpp"

namespace {

using namespace cdglab;

struct CommonOpts {
  std::vector<std::string> schemes = {"cdg"};
  std::string switch_name = "consistent";
  std::vector<int> p = {1};
  std::vector<int> n = {2};
  std::vector<double> c11_interior = {0.0};
  std::optional<double> c11_boundary;  // default: same as interior
  double eta = 3.0;
  bool periodic = false;
  std::string out;
  std::string format = "csv";
  std::string metric = "l2";
  std::string mesh_path;
  std::string export_matrix;
  bool poly_exact = false;
  unsigned seed = 0;
};

Scheme parse_scheme(const std::string& name) {
  if (name == "cdg") return Scheme::CDG;
  if (name == "ldg") return Scheme::LDG;
  if (name == "br2") return Scheme::BR2;
  throw CLI::ValidationError("--scheme", "unknown scheme: " + name);
}

SwitchStrategy parse_switch(const std::string& name) {
  if (name == "consistent") return SwitchStrategy::Consistent;
  if (name == "natural") return SwitchStrategy::Natural;
  throw CLI::ValidationError("--switch", "unknown switch strategy: " + name);
}

void add_common_flags(CLI::App* cmd, CommonOpts& opts, bool lists) {
  if (lists) {
    cmd->add_option("--scheme", opts.schemes, "schemes: cdg, ldg, br2")
        ->capture_default_str();
    cmd->add_option("--p", opts.p, "polynomial degrees")->capture_default_str();
    cmd->add_option("--n", opts.n, "grid resolutions")->capture_default_str();
    cmd->add_option("--c11-interior", opts.c11_interior,
                    "interior jump penalties")
        ->capture_default_str();
  } else {
    cmd->add_option("--scheme", opts.schemes.front(),
                    "scheme: cdg, ldg, br2")
        ->capture_default_str();
    cmd->add_option("--p", opts.p.front(), "polynomial degree")
        ->capture_default_str();
    cmd->add_option("--n", opts.n.front(), "grid resolution")
        ->capture_default_str();
    cmd->add_option("--c11-interior", opts.c11_interior.front(),
                    "interior jump penalty")
        ->capture_default_str();
  }
  cmd->add_option("--switch", opts.switch_name,
                  "switch strategy: consistent, natural")
      ->capture_default_str();
  cmd->add_option("--c11-boundary", opts.c11_boundary,
                  "Dirichlet-face jump penalty (default: same as interior)");
  cmd->add_option("--eta", opts.eta, "two-sided lifting stabilization weight")
      ->capture_default_str();
  cmd->add_flag("--periodic", opts.periodic, "fully periodic grid");
  cmd->add_option("--out", opts.out, "output file (default: stdout)");
  cmd->add_option("--format", opts.format, "report format: csv, json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed,
                  "random seed for randomized self-checks")
      ->capture_default_str();
}

void emit(const CommonOpts& opts, const std::vector<ReportRow>& rows) {
  std::ostringstream buffer;
  if (opts.format == "json")
    write_json(buffer, rows);
  else
    write_csv(buffer, rows);
  if (opts.out.empty()) {
    std::cout << buffer.str();
    return;
  }
  std::ofstream file(opts.out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open output file: " + opts.out);
  file << buffer.str();
}

bool any_failed(const std::vector<ReportRow>& rows) {
  return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) {
    return r.status != "ok";
  });
}

RunSpec cell_spec(const CommonOpts& opts, Scheme scheme, int p, int n,
                  double c11i) {
  RunSpec spec;
  spec.scheme = scheme;
  spec.strategy = parse_switch(opts.switch_name);
  spec.p = p;
  spec.n = n;
  spec.c11_interior = c11i;
  spec.c11_boundary = opts.c11_boundary.value_or(c11i);
  spec.eta = opts.eta;
  spec.periodic = opts.periodic;
  return spec;
}

ReportRow base_row(const RunSpec& spec) {
  ReportRow row;
  row.scheme = scheme_name(spec.scheme);
  row.switch_strategy = switch_name(spec.strategy);
  row.p = spec.p;
  row.n = spec.n;
  if (spec.scheme == Scheme::BR2)
    row.eta = spec.eta;
  else
    row.c11 = spec.c11_interior;
  return row;
}

double metric_of(const SolveResult& r, const std::string& metric) {
  if (metric == "h1") return r.h1;
  if (metric == "flux") return r.flux_l2;
  return r.l2;
}

std::string metric_name(const std::string& metric) {
  if (metric == "h1") return "h1_seminorm_error";
  if (metric == "flux") return "flux_l2_error";
  return "l2_error";
}

int cmd_solve(const CommonOpts& opts) {
  const RunSpec spec = cell_spec(opts, parse_scheme(opts.schemes.front()),
                                 opts.p.front(), opts.n.front(),
                                 opts.c11_interior.front());
  std::vector<ReportRow> rows;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (opts.poly_exact) {
      ReportRow row = base_row(spec);
      row.metric = "poly_exact_error";
      row.value = run_poly_exact_error(spec);
      rows.push_back(row);
    } else {
      const SolveResult result = run_manufactured_solve(spec);
      for (const char* m : {"l2", "h1", "flux"}) {
        ReportRow row = base_row(spec);
        row.metric = metric_name(m);
        row.value = metric_of(result, m);
        rows.push_back(row);
      }
      ReportRow row = base_row(spec);
      row.metric = "residual";
      row.value = result.residual;
      rows.push_back(row);
      for (const std::string& w : result.warnings)
        std::cerr << "warning: " << w << "\n";
    }
  } catch (const std::exception& e) {
    ReportRow row = base_row(spec);
    row.metric = opts.poly_exact ? "poly_exact_error" : metric_name(opts.metric);
    row.status = std::string("error: ") + e.what();
    rows.push_back(row);
  }
  const std::chrono::duration<double> wall =
      std::chrono::steady_clock::now() - start;
  emit(opts, rows);
  std::cerr << "wall time: " << wall.count() << " s\n";
  return any_failed(rows) ? 1 : 0;
}

int cmd_convergence(const CommonOpts& opts) {
  std::vector<ReportRow> rows;
  std::vector<int> grids = opts.n;
  std::sort(grids.begin(), grids.end());
  const auto start = std::chrono::steady_clock::now();

  for (const std::string& scheme_str : opts.schemes) {
    const Scheme scheme = parse_scheme(scheme_str);
    for (double c11i : opts.c11_interior)
      for (int p : opts.p) {
        std::vector<std::optional<double>> errors(grids.size());
        for (std::size_t k = 0; k < grids.size(); ++k) {
          const RunSpec spec = cell_spec(opts, scheme, p, grids[k], c11i);
          ReportRow row = base_row(spec);
          row.metric = metric_name(opts.metric);
          try {
            errors[k] = metric_of(run_manufactured_solve(spec), opts.metric);
            row.value = errors[k];
            const bool last = k + 1 == grids.size();
            if (last && grids.size() >= 2 && errors[k - 1] && errors[k]) {
              row.rate = convergence_rate(*errors[k - 1], 1.0 / grids[k - 1],
                                          *errors[k], 1.0 / grids[k])
                             .value_or(0.0);
            }
          } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
          }
          rows.push_back(row);
        }
      }
  }
  const std::chrono::duration<double> wall =
      std::chrono::steady_clock::now() - start;
  emit(opts, rows);
  std::cerr << "wall time: " << wall.count() << " s\n";
  return any_failed(rows) ? 1 : 0;
}

int cmd_nullspace(const CommonOpts& opts) {
  std::vector<ReportRow> rows;
  for (const std::string& scheme_str : opts.schemes) {
    const Scheme scheme = parse_scheme(scheme_str);
    for (int p : opts.p) {
      const RunSpec spec =
          cell_spec(opts, scheme, p, opts.n.front(), /*c11i=*/0.0);
      ReportRow row = base_row(spec);
      row.metric = "nullspace_dim";
      try {
        const NullspaceInfo info = run_nullspace(spec);
        row.value = double(info.dim);
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      rows.push_back(row);
    }
  }
  emit(opts, rows);
  return any_failed(rows) ? 1 : 0;
}

int cmd_spectrum(const CommonOpts& opts) {
  std::vector<ReportRow> rows;
  const auto start = std::chrono::steady_clock::now();
  for (const std::string& scheme_str : opts.schemes) {
    const Scheme scheme = parse_scheme(scheme_str);
    for (int p : opts.p)
      for (int n : opts.n) {
        const RunSpec spec =
            cell_spec(opts, scheme, p, n, opts.c11_interior.front());
        ReportRow row = base_row(spec);
        row.metric = "scaled_spectral_radius";
        try {
          row.value = run_scaled_spectral_radius(spec);
        } catch (const std::exception& e) {
          row.status = std::string("error: ") + e.what();
        }
        rows.push_back(row);
      }
  }
  const std::chrono::duration<double> wall =
      std::chrono::steady_clock::now() - start;
  emit(opts, rows);
  std::cerr << "wall time: " << wall.count() << " s\n";
  return any_failed(rows) ? 1 : 0;
}

int cmd_memory(const CommonOpts& opts) {
  std::vector<ReportRow> rows;
  for (int d = 1; d <= 3; ++d) {
    const std::int64_t alpha = d - 1;  // observed nonlocal neighbor counts
    for (int p : opts.p) {
      const MemoryCount count = memory_counts(d, p, alpha);
      const struct {
        const char* scheme;
        std::int64_t value;
      } cells[] = {{"cdg", count.m_cdg}, {"ldg", count.m_ldg},
                   {"br2", count.m_br2}};
      for (const auto& cell : cells) {
        ReportRow row;
        row.scheme = cell.scheme;
        row.p = p;
        row.metric = "stored_per_element_d" + std::to_string(d) + "_alpha" +
                     std::to_string(alpha);
        row.value = double(cell.value);
        rows.push_back(row);
      }
    }
  }
  emit(opts, rows);
  return 0;
}

// Four triangles sharing a center vertex: the smallest mesh on which the
// double-sum scheme couples elements that share no face.
Mesh fan_mesh() {
  return build_triangle_mesh(
      {{0.5, 0.5}, {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}},
      {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}});
}

int cmd_sparsity(const CommonOpts& opts, bool demo_fan) {
  std::vector<ReportRow> rows;
  bool export_failed = false;
  for (const std::string& scheme_str : opts.schemes) {
    const Scheme scheme = parse_scheme(scheme_str);
    for (int p : opts.p)
      for (int n : opts.n) {
        const RunSpec spec =
            cell_spec(opts, scheme, p, n, opts.c11_interior.front());
        ReportRow base = base_row(spec);
        if (demo_fan) base.n = std::nullopt;
        try {
          Mesh mesh;
          if (demo_fan)
            mesh = fan_mesh();
          else if (!opts.mesh_path.empty()) {
            std::ifstream in(opts.mesh_path, std::ios::binary);
            if (!in)
              throw std::invalid_argument("cannot open mesh file: " +
                                          opts.mesh_path);
            mesh = read_mesh_json(in);
          } else
            mesh = build_structured_mesh(n, opts.periodic);

          const NodalBasis basis(p);
          const SwitchAssignment sw =
              mesh.interior_faces.empty()
                  ? SwitchAssignment{parse_switch(opts.switch_name), {}}
                  : assign_switches(mesh, parse_switch(opts.switch_name));
          const BlockSparseMatrix pattern =
              structural_pattern(mesh, basis, sw, scheme);
          const SparsityCensus census = sparsity_census(pattern, mesh, basis);

          const struct {
            const char* name;
            double value;
          } metrics[] = {
              {"dofs", double(mesh.num_elements()) * basis.size()},
              {"nnz_total", double(census.total)},
              {"interior_elements", double(census.interior_elements)},
              {"nnz_interior_row_mean", census.interior_mean},
              {"alpha_empirical", census.alpha_empirical},
          };
          for (const auto& m : metrics) {
            ReportRow row = base;
            row.metric = m.name;
            row.value = m.value;
            rows.push_back(row);
          }

          if (!opts.export_matrix.empty()) {
            const std::string stem = opts.export_matrix + "_" + scheme_str +
                                     "_p" + std::to_string(p) +
                                     (demo_fan ? std::string("_fan")
                                               : "_n" + std::to_string(n));
            std::ofstream pbm(stem + ".pbm", std::ios::binary);
            pattern.write_pbm(pbm);
            std::ofstream coord(stem + ".coord", std::ios::binary);
            pattern.write_coordinate(coord);
            if (!pbm || !coord) {
              std::cerr << "error: export failed for " << stem << "\n";
              export_failed = true;
            }
          }
        } catch (const std::exception& e) {
          ReportRow row = base;
          row.metric = "nnz_total";
          row.status = std::string("error: ") + e.what();
          rows.push_back(row);
        }
        if (demo_fan || !opts.mesh_path.empty()) break;  // single mesh
      }
  }
  emit(opts, rows);
  return (any_failed(rows) || export_failed) ? 1 : 0;
}

int cmd_mesh(const CommonOpts& opts) {
  const Mesh mesh = build_structured_mesh(opts.n.front(), opts.periodic);
  if (opts.out.empty()) {
    write_mesh_json(std::cout, mesh);
    return 0;
  }
  std::ofstream file(opts.out, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot open output file: " << opts.out << "\n";
    return 1;
  }
  write_mesh_json(file, mesh);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DG Poisson experiment driver (CDG / LDG / BR2)"};
  app.require_subcommand(1);

  CommonOpts solve_opts, conv_opts, null_opts, spec_opts, mem_opts, sp_opts,
      mesh_opts;
  bool demo_fan = false;

  CLI::App* solve = app.add_subcommand("solve", "single-cell solve");
  add_common_flags(solve, solve_opts, /*lists=*/false);
  solve->add_flag("--poly-exact", solve_opts.poly_exact,
                  "solve polynomial data contained in the space");
  solve->add_option("--metric", solve_opts.metric,
                    "primary metric: l2, h1, flux")
      ->check(CLI::IsMember({"l2", "h1", "flux"}));

  CLI::App* conv = app.add_subcommand("convergence", "error grid with rates");
  add_common_flags(conv, conv_opts, /*lists=*/true);
  conv->add_option("--metric", conv_opts.metric,
                   "reported metric: l2, h1, flux")
      ->check(CLI::IsMember({"l2", "h1", "flux"}))
      ->capture_default_str();

  CLI::App* nullspace =
      app.add_subcommand("nullspace", "periodic operator nullity census");
  add_common_flags(nullspace, null_opts, /*lists=*/true);

  CLI::App* spectrum =
      app.add_subcommand("spectrum", "scaled spectral radius grid");
  add_common_flags(spectrum, spec_opts, /*lists=*/true);

  CLI::App* memory =
      app.add_subcommand("memory", "stored entries per interior element");
  add_common_flags(memory, mem_opts, /*lists=*/true);

  CLI::App* sparsity =
      app.add_subcommand("sparsity", "structural pattern census and export");
  add_common_flags(sparsity, sp_opts, /*lists=*/true);
  sparsity->add_option("--mesh", sp_opts.mesh_path, "mesh JSON file to load");
  sparsity->add_option("--export-matrix", sp_opts.export_matrix,
                       "path stem for .pbm/.coord pattern exports");
  sparsity->add_flag("--demo-fan", demo_fan,
                     "use the built-in four-triangle fan mesh");

  CLI::App* mesh = app.add_subcommand("mesh", "write a mesh as JSON");
  add_common_flags(mesh, mesh_opts, /*lists=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_opts);
    if (conv->parsed()) return cmd_convergence(conv_opts);
    if (nullspace->parsed()) return cmd_nullspace(null_opts);
    if (spectrum->parsed()) return cmd_spectrum(spec_opts);
    if (memory->parsed()) return cmd_memory(mem_opts);
    if (sparsity->parsed()) return cmd_sparsity(sp_opts, demo_fan);
    if (mesh->parsed()) return cmd_mesh(mesh_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
