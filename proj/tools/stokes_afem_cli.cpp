// stokes-afem: adaptive Taylor-Hood eigenvalue runs from the command line.
//
// exit codes: 0 ok, 1 a diagnostic check failed, 2 bad arguments or
// unwritable output, 3 solver failure

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <stokes_afem/adaptive.hpp>
#include <stokes_afem/diagnostics.hpp>

namespace fs = std::filesystem;
using namespace stokes_afem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string domain, mode, bisection, config, out, reference_file;
  double theta = 0.0, eig_tol = 0.0, reference = 0.0;
  int nev = 0, max_dofs = 0, levels = 0, level = 0;
  bool adaptive = false, uniform = false, dump_mesh = false, dump_matrices = false, timings = false;
  std::string check = "identity2";
};

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
  try {
    if (j.contains("domain")) cfg.domain = parse_domain(j["domain"].get<std::string>());
    if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("theta")) cfg.theta = j["theta"].get<double>();
    if (j.contains("nev")) cfg.nev = j["nev"].get<int>();
    if (j.contains("max_dofs")) cfg.max_dofs = j["max_dofs"].get<int>();
    if (j.contains("levels")) cfg.max_levels = j["levels"].get<int>();
    if (j.contains("max_levels")) cfg.max_levels = j["max_levels"].get<int>();
    if (j.contains("eig_tol")) cfg.eig_tol = j["eig_tol"].get<double>();
    if (j.contains("reference_lambda")) cfg.reference_lambda = j["reference_lambda"].get<double>();
    if (j.contains("bisection")) {
      cfg.bisection = parse_bisection(j["bisection"].get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("--config: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
}

double read_reference_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--reference-file: cannot read " + path);
  try {
    return nlohmann::json::parse(in).at("lambda_reference").get<double>();
  } catch (const std::exception& e) {
    throw UsageError("--reference-file: " + std::string(e.what()));
  }
}

/// defaults < config file < flags
RunConfig build_config(const CLI::App& sub, const Options& o) {
  RunConfig cfg;
  if (sub.count("--config")) apply_config_file(o.config, cfg);
  try {
    if (sub.count("--domain")) cfg.domain = parse_domain(o.domain);
    if (sub.count("--mode")) cfg.mode = parse_mode(o.mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.adaptive) cfg.mode = RefinementMode::adaptive;
  if (o.uniform) cfg.mode = RefinementMode::uniform;
  if (sub.count("--theta")) cfg.theta = o.theta;
  if (sub.count("--nev")) cfg.nev = o.nev;
  if (sub.count("--max-dofs")) cfg.max_dofs = o.max_dofs;
  if (sub.count("--levels")) cfg.max_levels = o.levels;
  if (sub.count("--eig-tol")) cfg.eig_tol = o.eig_tol;
  if (sub.count("--bisection")) cfg.bisection = parse_bisection(o.bisection);
  if (sub.count("--reference-file")) cfg.reference_lambda = read_reference_file(o.reference_file);
  if (sub.count("--reference")) cfg.reference_lambda = o.reference;
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

fs::path prepare_dir(const std::string& out) {
  fs::path dir(out.empty() ? "." : out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw UsageError("--out: cannot create directory " + dir.string());
  const auto probe = dir / ".stokes_afem_write_test";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("--out: directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path.string());
  f << content;
}

void add_run_flags(CLI::App* sub, Options& o) {
  const auto open_unit = CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        try {
          v = std::stod(s);
        } catch (...) {
          return "value " + s + " is not a number";
        }
        return (v > 0.0 && v < 1.0) ? std::string() : "value " + s + " not in (0,1)";
      },
      "in (0,1)");
  sub->add_option("--domain", o.domain, "lshape | slit | square")->check(CLI::IsMember({"lshape", "slit", "square"}));
  auto* mode = sub->add_option("--mode", o.mode, "adaptive | uniform")->check(CLI::IsMember({"adaptive", "uniform"}));
  auto* a = sub->add_flag("--adaptive", o.adaptive, "same as --mode adaptive");
  auto* u = sub->add_flag("--uniform", o.uniform, "same as --mode uniform");
  a->excludes(u)->excludes(mode);
  u->excludes(mode);
  sub->add_option("--theta", o.theta, "Doerfler bulk parameter")->check(open_unit);
  sub->add_option("--nev", o.nev, "number of eigenpairs")->check(CLI::PositiveNumber);
  sub->add_option("--max-dofs", o.max_dofs, "stop before a level with more DOFs")->check(CLI::PositiveNumber);
  sub->add_option("--levels", o.levels, "maximum number of levels")->check(CLI::PositiveNumber);
  sub->add_option("--eig-tol", o.eig_tol, "eigensolver residual tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--bisection", o.bisection, "bisections per marked cell: bisec3 | single")
      ->check(CLI::IsMember({"single", "bisec3"}));
  sub->add_option("--reference", o.reference, "reference eigenvalue for errors");
  sub->add_option("--reference-file", o.reference_file, "JSON file with a lambda_reference entry");
  sub->add_option("--config", o.config, "JSON config (flags take precedence)");
  sub->add_option("--out", o.out, "output directory");
}

int cmd_run(const CLI::App& sub, const Options& o) {
  const RunConfig cfg = build_config(sub, o);
  const fs::path dir = prepare_dir(o.out);
  LevelObserver observer;
  if (o.dump_mesh || o.dump_matrices) {
    observer = [&](const LevelState& s) {
      const std::string tag = std::to_string(s.level);
      if (o.dump_mesh) write_file(dir / ("mesh_level_" + tag + ".json"), to_json(s.mesh).dump() + "\n");
      if (o.dump_matrices) {
        write_matrix_market((dir / ("A_level_" + tag + ".mtx")).string(), s.ops.A);
        write_matrix_market((dir / ("B_level_" + tag + ".mtx")).string(), s.ops.B);
        write_matrix_market((dir / ("M_level_" + tag + ".mtx")).string(), s.ops.M);
      }
    };
  }
  const auto records = run(cfg, observer);
  std::ostringstream csv;
  write_csv(csv, records, o.timings);
  write_file(dir / "results.csv", csv.str());
  write_file(dir / "results.json", run_to_json(cfg, records).dump(2) + "\n");
  const auto& last = records.back();
  std::cout << "levels " << records.size() << ", final DOFs " << last.dofs() << ", lambda1 " << std::setprecision(12)
            << last.lambda.front() << ", eta " << last.eta << "\n"
            << "wrote " << (dir / "results.csv").string() << " and " << (dir / "results.json").string() << "\n";
  return 0;
}

int cmd_dump_mesh(const CLI::App& sub, const Options& o) {
  RunConfig cfg = build_config(sub, o);
  cfg.max_levels = o.level + 1;
  cfg.max_dofs = std::numeric_limits<int>::max();
  std::optional<nlohmann::json> mesh;
  if (o.level == 0) {
    mesh = to_json(create_initial_mesh(cfg.domain));
  } else {
    run(cfg, [&](const LevelState& s) {
      if (s.level == o.level) mesh = to_json(s.mesh);
    });
  }
  if (!mesh) throw UsageError("--level: the run stopped before level " + std::to_string(o.level));
  if (o.out.empty()) {
    std::cout << mesh->dump() << "\n";
  } else {
    const fs::path p(o.out);
    if (p.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(p.parent_path(), ec);
    }
    write_file(p, mesh->dump() + "\n");
  }
  return 0;
}

int cmd_diagnose(const CLI::App& sub, const Options& o) {
  RunConfig cfg = build_config(sub, o);
  bool ok = true;
  nlohmann::json report;
  const Mesh coarse_mesh = create_initial_mesh(cfg.domain);
  const THSpace coarse(coarse_mesh);
  const auto coarse_ops = assemble(coarse);
  const auto coarse_pair = solve_evp(coarse_ops, 1, 0.0, cfg.eig_tol).front();

  const bool all = o.check == "all";
  if (all || o.check == "identity2") {
    for (const char* step : {"uniform", "adaptive"}) {
      const bool uni = std::string(step) == "uniform";
      auto [fine_mesh, map] = uni ? uniform_refine(coarse_mesh)
                                  : refine(coarse_mesh, mark_dorfler(compute_indicators(coarse, coarse_pair), cfg.theta),
                                           cfg.bisection);
      const THSpace fine(fine_mesh);
      const auto fine_ops = assemble(fine);
      auto fine_pair = solve_evp(fine_ops, 1, 0.0, cfg.eig_tol).front();
      const auto r = identity_II_check({coarse, coarse_ops, coarse_pair}, {fine, fine_ops, fine_pair}, map);
      const bool pass = r.rel_gap <= 1e-7;
      ok = ok && pass;
      report["identity2"][step] = {{"lhs", r.lhs}, {"rhs", r.rhs}, {"abs_gap", r.abs_gap}, {"rel_gap", r.rel_gap}, {"pass", pass}};
      std::cout << "identity2 " << step << ": lhs " << std::setprecision(12) << r.lhs << " rhs " << r.rhs
                << " rel_gap " << std::setprecision(3) << r.rel_gap << (pass ? "  ok" : "  FAIL") << "\n";
    }
  }
  if (all || o.check == "infsup") {
    Mesh m = coarse_mesh;
    std::vector<double> betas;
    for (int l = 0; l < 4; ++l) {
      if (l > 0) m = uniform_refine(m).first;
      const THSpace s(m);
      betas.push_back(infsup_constant(s, assemble(s)));
    }
    const double ratio = *std::max_element(betas.begin(), betas.end()) / *std::min_element(betas.begin(), betas.end());
    const bool pass = betas.back() > 0.0 && ratio <= 2.0;
    ok = ok && pass;
    report["infsup"] = {{"beta", betas}, {"max_over_min", ratio}, {"pass", pass}};
    std::cout << "infsup: beta";
    for (double b : betas) std::cout << ' ' << std::setprecision(6) << b;
    std::cout << "  max/min " << ratio << (pass ? "  ok" : "  FAIL") << "\n";
  }
  if (all || o.check == "effectivity") {
    const auto ref = resolve_reference(cfg);
    if (!ref) throw UsageError("--check effectivity needs --reference or --reference-file on this domain");
    const auto records = run(cfg);
    const auto eff = effectivity(records, ref);
    const double ratio = band_ratio(eff, 2);
    const bool pass = ratio <= 100.0;
    ok = ok && pass;
    report["effectivity"] = {{"index", eff}, {"band_ratio_from_level_2", ratio}, {"pass", pass}};
    std::cout << "effectivity: max/min over levels >= 2 = " << ratio << (pass ? "  ok" : "  FAIL") << "\n";
  }
  if (!o.out.empty()) {
    const fs::path dir = prepare_dir(o.out);
    write_file(dir / "diagnostics.json", report.dump(2) + "\n");
  }
  return ok ? 0 : 1;
}

void apply_thread_cap() {
  const char* env = std::getenv("STOKES_AFEM_THREADS");
  if (!env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    std::cerr << "warning: ignoring STOKES_AFEM_THREADS='" << env << "'\n";
    return;
  }
  Eigen::setNbThreads(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Taylor-Hood finite elements for the Stokes eigenvalue problem"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "SOLVE-ESTIMATE-MARK-REFINE loop; writes results.csv and results.json");
  add_run_flags(run_cmd, o);
  run_cmd->add_flag("--dump-mesh", o.dump_mesh, "write the mesh of every level as JSON");
  run_cmd->add_flag("--dump-matrices", o.dump_matrices, "write A, B, M of every level in Matrix Market format");
  run_cmd->add_flag("--timings", o.timings, "write wall times into the CSV (zeros otherwise, keeping it reproducible)");

  auto* diag_cmd = app.add_subcommand("diagnose", "executable checks: identity2, infsup, effectivity, all");
  add_run_flags(diag_cmd, o);
  diag_cmd->add_option("--check", o.check, "which check")->check(CLI::IsMember({"identity2", "infsup", "effectivity", "all"}));

  auto* mesh_cmd = app.add_subcommand("dump-mesh", "write the JSON mesh of a level (stdout unless --out FILE)");
  add_run_flags(mesh_cmd, o);
  mesh_cmd->add_option("--level", o.level, "level to dump")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  apply_thread_cap();

  try {
    if (*run_cmd) return cmd_run(*run_cmd, o);
    if (*diag_cmd) return cmd_diagnose(*diag_cmd, o);
    if (*mesh_cmd) return cmd_dump_mesh(*mesh_cmd, o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const RunError& e) {
    std::cerr << "solver failure at " << e.what() << "\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
