#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ampere/problem_spec.hpp"

namespace ampere {
namespace cli_detail {

// exit codes: 0 success, 1 a solve failed to converge or a check failed,
// 2 bad input (unreadable file, malformed spec, empty grid, bad flags)
inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitInput = 2;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s,
                                             const char* what) {
  std::vector<double> out;
  for (const std::string& tok : split_list(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.empty())
      throw std::invalid_argument(std::string(what) + ": '" + tok +
                                  "' is not a number");
    out.push_back(v);
  }
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (double v : parse_double_list(s, what)) {
    const int k = static_cast<int>(v);
    if (static_cast<double>(k) != v)
      throw std::invalid_argument(std::string(what) +
                                  ": expected integers");
    out.push_back(k);
  }
  return out;
}

inline SolveMethod parse_method(const std::string& m) {
  if (m == "monotone") return SolveMethod::monotone;
  if (m == "newton") return SolveMethod::newton;
  throw std::invalid_argument("unknown method '" + m +
                              "' (known: monotone, newton)");
}

inline std::string version_string() {
  return std::string(kVersion);
}

inline json versions_json() {
  json v;
  v["ampere"] = kVersion;
  v["cli11"] = CLI11_VERSION;
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#ifdef __VERSION__
  v["compiler"] = __VERSION__;
#endif
  return v;
}

inline json manifest_json(const std::string& command,
                          const std::vector<std::string>& invocation,
                          const std::optional<std::string>& config_path,
                          const std::string& inputs_hash, json timings,
                          std::vector<std::string> outputs) {
  json m;
  m["command"] = command;
  m["invocation"] = invocation;
  if (config_path)
    m["config"] = *config_path;
  else
    m["config"] = nullptr;
  m["inputs_hash"] = "fnv1a64:" + inputs_hash;
  m["versions"] = versions_json();
  m["timings"] = std::move(timings);
  m["outputs"] = std::move(outputs);
  return m;
}

inline std::string out_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + dir +
                             "': " + ec.message());
}

inline void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

// flags shared by the spec-driven subcommands; unset values keep the spec
struct SpecOverrides {
  double h = 0.0;
  int stencil_radius = 0;
  int quadrature_order = 0;
  std::string method;
  double tol = 0.0;
  bool tol_set = false;
  int max_iterations = -1;

  void apply(ProblemSpec& spec) const {
    if (h > 0.0) spec.h = h;
    if (stencil_radius > 0) spec.stencil_radius = stencil_radius;
    if (quadrature_order > 0) spec.quadrature_order = quadrature_order;
    if (!method.empty()) spec.solver.method = parse_method(method);
    if (tol_set) spec.solver.tol_residual = tol;
    if (max_iterations >= 0) spec.solver.max_iterations = max_iterations;
  }
};

inline void add_override_flags(CLI::App* cmd, SpecOverrides& o,
                               bool with_solver_flags) {
  cmd->set_help_flag("--help", "print usage");
  cmd->add_option("--h", o.h, "override the mesh size");
  cmd->add_option("--stencil-radius", o.stencil_radius,
                  "override the stencil radius");
  cmd->add_option("--quadrature-order", o.quadrature_order,
                  "override the quadrature order");
  if (with_solver_flags) {
    cmd->add_option("--method", o.method, "solver method: monotone or newton");
    cmd->add_option("--tol", o.tol, "residual tolerance (<= 0: default)")
        ->each([&o](const std::string&) { o.tol_set = true; });
    cmd->add_option("--max-iterations", o.max_iterations,
                    "iteration cap (0: method default)");
  }
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct SolveArgs {
  std::string config;
  std::string out = ".";
  SpecOverrides over;
};

inline int run_solve(const SolveArgs& a,
                     const std::vector<std::string>& invocation) {
  const Timer total;
  const std::string text = read_text(a.config);
  ProblemSpec spec = parse_spec_text(text, a.config);
  a.over.apply(spec);

  const Timer t_build;
  const SpecInstance inst = instantiate(spec);
  const double build_s = t_build.seconds();
  std::cout << "sites: " << inst.grid.size()
            << "  epsilon: " << fmt17(inst.data.epsilon) << "\n";

  const Timer t_solve;
  const SolveReport rep = solve(inst.grid, inst.data, inst.stencil, spec.solver);
  const double solve_s = t_solve.seconds();
  std::cout << (rep.converged ? "converged" : "NOT converged") << " after "
            << rep.iterations << " iterations, residual "
            << fmt17(rep.final_residual_sup) << "\n";

  ensure_out_dir(a.out);
  write_text(out_path(a.out, "solution.csv"),
             solution_csv(rep.solution, inst.stencil));

  json report;
  report["h"] = spec.h;
  report["stencil_radius"] = spec.stencil_radius;
  report["method"] =
      spec.solver.method == SolveMethod::newton ? "newton" : "monotone";
  report["sites"] = inst.grid.size();
  report["epsilon"] = inst.data.epsilon;
  report["mass_total"] = inst.data.mass_total;
  report["target_mass"] = inst.data.target_mass;
  const GridIndex ns = resolve_normalization_site(inst.grid, spec.solver);
  report["normalization"] = {{"site", {ns.i, ns.j}},
                             {"value", spec.solver.normalization_value}};
  report.update(report_json(rep));
  write_json(out_path(a.out, "report.json"), report);

  json timings;
  timings["build_seconds"] = build_s;
  timings["solve_seconds"] = solve_s;
  timings["total_seconds"] = total.seconds();
  write_json(out_path(a.out, "manifest.json"),
             manifest_json("solve", invocation, a.config, fnv1a64_hex(text),
                           timings, {"solution.csv", "report.json"}));
  std::cout << "wrote " << out_path(a.out, "solution.csv") << "\n";
  return rep.converged ? kExitOk : kExitNotConverged;
}

struct VerifyArgs {
  std::string config;
  SpecOverrides over;
};

inline int run_verify(const VerifyArgs& a) {
  const std::string text = read_text(a.config);
  ProblemSpec spec = parse_spec_text(text, a.config);
  a.over.apply(spec);

  Grid grid = build_grid(spec.h, spec.domain);
  Stencil st = build_stencil(spec.stencil_radius, spec.target_polygon);
  const auto part = build_partition(grid);
  const ProblemData data =
      make_problem_data(spec.source_f, spec.target_r, spec.target_polygon,
                        grid, part, spec.quadrature_order);

  int failures = 0;
  const auto check = [&failures](bool ok, const std::string& name,
                                 const std::string& detail) {
    std::cout << (ok ? "ok   - " : "FAIL - ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  {
    double covered = 0.0;
    for (const PartitionCell& cell : part) covered += polygon_area(cell.region);
    const double area = polygon_area(grid.domain);
    check(std::abs(covered - area) <= 1e-9 * area,
          "partition tiles the domain",
          "sum " + fmt17(covered) + " vs " + fmt17(area));
  }
  {
    double mn = std::numeric_limits<double>::infinity();
    for (double m : data.masses) mn = std::min(mn, m);
    check(mn > 0.0, "target masses are positive", "min " + fmt17(mn));
  }
  check(data.epsilon >= 0.0 && data.epsilon < 1.0,
        "mass correction lies in [0, 1)", "epsilon " + fmt17(data.epsilon));
  {
    const double total_f = integrate_density(spec.domain, data.source_f,
                                             data.quadrature_order);
    const double expect = (1.0 - data.epsilon) * total_f;
    const bool ok_f =
        std::abs(data.mass_total - expect) <= 1e-8 * data.mass_total;
    const bool ok_r =
        std::abs(data.mass_total - data.target_mass) <= 1e-8 * data.mass_total;
    check(ok_f && ok_r, "mass balance matches the image integral",
          "sum " + fmt17(data.mass_total) + " vs " + fmt17(data.target_mass));
  }
  {
    const MeshFunction v0 = initial_guess(grid, data, spec.solver);
    const ResidualReport res = residual(v0, data, st);
    const GridIndex apex = resolve_normalization_site(grid, spec.solver);
    const int ka = grid.index_of(apex);
    double off = 0.0;
    for (std::size_t k = 0; k < res.omega.size(); ++k)
      if (static_cast<int>(k) != ka) off = std::max(off, res.omega[k]);
    const bool ok_apex = ka >= 0 && std::abs(res.omega[ka] - data.mass_total) <=
                                        1e-8 * data.mass_total;
    check(ok_apex && off <= 1e-8 * data.mass_total,
          "the initial iterate concentrates all curvature at one site",
          "apex " + fmt17(ka >= 0 ? res.omega[ka] : 0.0) + ", off-apex sup " +
              fmt17(off));

    const Region cell = subdifferential_cell(v0, apex, st);
    double scale = 1.0;
    for (const Vec2& q : data.target.v)
      scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
    const bool ok_cell =
        cell.kind == RegionKind::polygon &&
        hausdorff_distance(cell.poly, data.target) <= 1e-9 * scale;
    check(ok_cell, "the apex cell reproduces the prescribed image",
          ok_cell ? ""
                  : (cell.kind == RegionKind::polygon
                         ? "hausdorff " +
                               fmt17(hausdorff_distance(cell.poly, data.target))
                         : std::string("cell is not a polygon")));
  }

  std::cout << (failures == 0 ? "all checks passed"
                              : std::to_string(failures) + " check(s) failed")
            << "\n";
  return failures == 0 ? kExitOk : kExitNotConverged;
}

struct StudyArgs {
  std::string benchmark = "quadratic";
  std::string h_list = "0.25,0.125,0.0625";
  std::string radius_list = "1";
  std::string out = ".";
  std::string method;
  double tol = 0.0;
  bool tol_set = false;
  int max_iterations = -1;
  int quadrature_order = 5;
  int threads = 1;
};

inline int run_study(const StudyArgs& a,
                     const std::vector<std::string>& invocation) {
  const Timer total;
  const Benchmark b = benchmark_by_name(a.benchmark);
  const std::vector<double> hs = parse_double_list(a.h_list, "--h");
  const std::vector<int> radii =
      parse_int_list(a.radius_list, "--stencil-radius");
  SolverConfig cfg;
  if (!a.method.empty()) cfg.method = parse_method(a.method);
  if (a.tol_set) cfg.tol_residual = a.tol;
  if (a.max_iterations >= 0) cfg.max_iterations = a.max_iterations;

  const StudyResult res =
      convergence_study(b, hs, radii, cfg, a.quadrature_order, a.threads);

  ensure_out_dir(a.out);
  const std::string csv = study_csv(res);
  write_text(out_path(a.out, "study.csv"), csv);
  json j;
  j["benchmark"] = a.benchmark;
  j["description"] = b.exact.description;
  j.update(study_json(res));
  write_json(out_path(a.out, "study.json"), j);

  // no config file: hash the effective parameters instead
  std::string key = a.benchmark + "|" + a.h_list + "|" + a.radius_list + "|" +
                    a.method + "|" + (a.tol_set ? fmt17(a.tol) : "") + "|" +
                    std::to_string(a.max_iterations) + "|" +
                    std::to_string(a.quadrature_order);
  json timings;
  timings["total_seconds"] = total.seconds();
  write_json(out_path(a.out, "manifest.json"),
             manifest_json("study", invocation, std::nullopt,
                           fnv1a64_hex(key), timings,
                           {"study.csv", "study.json"}));

  std::cout << csv;
  bool all = true;
  for (const StudyRow& r : res.rows) all = all && r.converged;
  return all ? kExitOk : kExitNotConverged;
}

struct RefineArgs {
  std::string config;
  std::string out = ".";
  SpecOverrides over;
};

inline int run_refine(const RefineArgs& a,
                      const std::vector<std::string>& invocation) {
  const Timer total;
  const std::string text = read_text(a.config);
  ProblemSpec spec = parse_spec_text(text, a.config);
  a.over.apply(spec);
  if (spec.refinement_targets.empty())
    throw std::invalid_argument(
        a.config + ": refine-target needs a non-empty 'refinement_targets'");

  const RefinementResult res = target_refinement_study(
      spec.target_domain, spec.refinement_targets, spec.domain, spec.source_f,
      spec.target_r, spec.h, spec.stencil_radius, spec.solver,
      spec.quadrature_order);

  ensure_out_dir(a.out);
  const std::string csv = refinement_csv(res);
  write_text(out_path(a.out, "refinement.csv"), csv);
  write_json(out_path(a.out, "refinement.json"), refinement_json(res));

  json timings;
  timings["total_seconds"] = total.seconds();
  write_json(out_path(a.out, "manifest.json"),
             manifest_json("refine-target", invocation, a.config,
                           fnv1a64_hex(text), timings,
                           {"refinement.csv", "refinement.json"}));
  std::cout << csv;
  bool all = true;
  for (const RefinementRow& r : res.rows) all = all && r.converged;
  return all ? kExitOk : kExitNotConverged;
}

struct DumpArgs {
  std::string config;
  std::string out = ".";
  SpecOverrides over;
};

inline int run_dump(const DumpArgs& a,
                    const std::vector<std::string>& invocation) {
  const Timer total;
  const std::string text = read_text(a.config);
  ProblemSpec spec = parse_spec_text(text, a.config);
  a.over.apply(spec);
  const SpecInstance inst = instantiate(spec);

  ensure_out_dir(a.out);
  write_json(out_path(a.out, "problem.json"), problem_json(spec, inst));
  write_text(out_path(a.out, "grid.csv"), grid_csv(inst.grid));
  write_text(out_path(a.out, "masses.csv"), masses_csv(inst.grid, inst.data));
  write_text(out_path(a.out, "stencil.csv"), stencil_csv(inst.stencil));

  json timings;
  timings["total_seconds"] = total.seconds();
  write_json(
      out_path(a.out, "manifest.json"),
      manifest_json("dump", invocation, a.config, fnv1a64_hex(text), timings,
                    {"problem.json", "grid.csv", "masses.csv", "stencil.csv"}));
  std::cout << "wrote " << inst.grid.size() << " sites to " << a.out << "\n";
  return kExitOk;
}

}  // namespace cli_detail

// Entry point for the command line driver; returns the process exit code.
inline int run_command(int argc, const char* const* argv) {
  namespace cd = cli_detail;
  CLI::App app{"lattice solver for the second boundary value problem of the "
               "Monge-Ampere equation"};
  // --h is a real option (mesh size), so help must not claim the short -h
  app.set_help_flag("--help", "print usage");
  app.set_version_flag("--version", cd::version_string());
  app.require_subcommand(1);

  // subcommands accept --threads for symmetry; only the study distributes
  // work (its instances are independent), the single-problem paths are serial
  int threads = 1;

  cd::SolveArgs solve_args;
  CLI::App* c_solve =
      app.add_subcommand("solve", "solve one problem and write the solution");
  c_solve->add_option("--config", solve_args.config, "problem spec (JSON)")
      ->required();
  c_solve->add_option("--out", solve_args.out, "output directory");
  c_solve->add_option("--threads", threads, "worker threads (0: all cores)");
  cd::add_override_flags(c_solve, solve_args.over, true);

  cd::VerifyArgs verify_args;
  CLI::App* c_verify = app.add_subcommand(
      "verify", "check structural invariants of a problem");
  c_verify->add_option("--config", verify_args.config, "problem spec (JSON)")
      ->required();
  c_verify->add_option("--threads", threads, "worker threads (0: all cores)");
  cd::add_override_flags(c_verify, verify_args.over, false);

  cd::StudyArgs study_args;
  CLI::App* c_study = app.add_subcommand(
      "study", "run a mesh refinement study on a named benchmark");
  c_study->set_help_flag("--help", "print usage");
  c_study->add_option("--benchmark", study_args.benchmark,
                      "quadratic, anisotropic, translated, or skewed");
  c_study->add_option("--h", study_args.h_list, "comma list of mesh sizes");
  c_study->add_option("--stencil-radius", study_args.radius_list,
                      "comma list of stencil radii");
  c_study->add_option("--out", study_args.out, "output directory");
  c_study->add_option("--method", study_args.method,
                      "solver method: monotone or newton");
  c_study->add_option("--tol", study_args.tol, "residual tolerance")
      ->each([&study_args](const std::string&) { study_args.tol_set = true; });
  c_study->add_option("--max-iterations", study_args.max_iterations,
                      "iteration cap (0: method default)");
  c_study->add_option("--quadrature-order", study_args.quadrature_order,
                      "quadrature order");
  c_study->add_option("--threads", study_args.threads,
                      "worker threads (0: all cores)");

  cd::RefineArgs refine_args;
  CLI::App* c_refine = app.add_subcommand(
      "refine-target", "solve against an increasing family of images");
  c_refine->add_option("--config", refine_args.config, "problem spec (JSON)")
      ->required();
  c_refine->add_option("--out", refine_args.out, "output directory");
  c_refine->add_option("--threads", threads, "worker threads (0: all cores)");
  cd::add_override_flags(c_refine, refine_args.over, true);

  cd::DumpArgs dump_args;
  CLI::App* c_dump = app.add_subcommand(
      "dump", "write the grid, masses, and stencil without solving");
  c_dump->add_option("--config", dump_args.config, "problem spec (JSON)")
      ->required();
  c_dump->add_option("--out", dump_args.out, "output directory");
  c_dump->add_option("--threads", threads, "worker threads (0: all cores)");
  cd::add_override_flags(c_dump, dump_args.over, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cd::kExitOk : cd::kExitInput;
  }

  std::vector<std::string> invocation(argv, argv + argc);
  try {
    if (c_solve->parsed()) return cd::run_solve(solve_args, invocation);
    if (c_verify->parsed()) return cd::run_verify(verify_args);
    if (c_study->parsed()) return cd::run_study(study_args, invocation);
    if (c_refine->parsed()) return cd::run_refine(refine_args, invocation);
    if (c_dump->parsed()) return cd::run_dump(dump_args, invocation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cd::kExitInput;
  }
  return cd::kExitInput;
}

}  // namespace ampere
