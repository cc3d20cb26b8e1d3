#pragma once

// SOLVE - ESTIMATE - MARK - REFINE driver, uniform driver, rate fitting and
// CSV / JSON output of the per-level log.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "diagnostics.hpp"
#include "eigsolve.hpp"
#include "estimator.hpp"
#include "mesh.hpp"
#include "th_space.hpp"

namespace stokes_afem {

enum class RefinementMode { adaptive, uniform };

inline std::string to_string(RefinementMode m) { return m == RefinementMode::adaptive ? "adaptive" : "uniform"; }

inline RefinementMode parse_mode(std::string_view s) {
  if (s == "adaptive") return RefinementMode::adaptive;
  if (s == "uniform") return RefinementMode::uniform;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

/// Benchmark first eigenvalues shipped with the library (none for the square).
inline std::optional<double> benchmark_lambda(DomainTag tag) {
  switch (tag) {
    case DomainTag::lshape: return 32.13269465;
    case DomainTag::slit: return 29.9168629;
    case DomainTag::square: return std::nullopt;
  }
  return std::nullopt;
}

struct RunConfig {
  DomainTag domain = DomainTag::lshape;
  double theta = 0.5;
  int nev = 1;
  int max_dofs = 60000;
  int max_levels = 100;
  double eig_tol = 1e-10;
  RefinementMode mode = RefinementMode::adaptive;
  std::optional<double> reference_lambda;
  MarkedBisection bisection = MarkedBisection::bisec3;
};

inline int initial_dofs(DomainTag tag) {
  const THSpace s(create_initial_mesh(tag));
  return s.n_u() + s.n_p();
}

inline void validate(const RunConfig& c) {
  if (!(c.theta > 0.0 && c.theta < 1.0)) throw std::invalid_argument("--theta must lie in (0,1)");
  if (c.nev < 1) throw std::invalid_argument("--nev must be >= 1");
  if (c.max_levels < 1) throw std::invalid_argument("--levels must be >= 1");
  if (!(c.eig_tol > 0.0)) throw std::invalid_argument("--eig-tol must be positive");
  if (c.max_dofs < initial_dofs(c.domain)) {
    throw std::invalid_argument("--max-dofs is below the size of the initial mesh (" +
                                std::to_string(initial_dofs(c.domain)) + " DOFs)");
  }
}

struct RunRecord {
  int level = 0;
  int cells = 0;
  int n_u = 0;
  int n_p = 0;
  std::vector<double> lambda;
  double eta = 0.0;
  int marked = 0;
  std::optional<double> sqrt_error;
  double t_solve = 0.0;
  double t_estimate = 0.0;
  double t_refine = 0.0;

  // diagnostics
  int iterations = 0;
  double residual = 0.0;
  std::optional<double> identity2_rel_gap;  // against the previous level
  double div_jump_ratio = 0.0;
  double min_angle = 0.0;
  int marked_near_corner = 0;  // marked cells with centroid within 0.25 of the origin

  int dofs() const { return n_u + n_p; }
};

/// Snapshot handed to an observer after ESTIMATE/MARK of each level.
struct LevelState {
  int level;
  const Mesh& mesh;
  const THSpace& space;
  const StokesOperators& ops;
  const std::vector<EigenPair>& pairs;
  const Indicators& indicators;
  const std::vector<int>& marked;
};

using LevelObserver = std::function<void(const LevelState&)>;

class RunError : public std::runtime_error {
 public:
  RunError(int level, const SolverError& e)
      : std::runtime_error("level " + std::to_string(level) + ": " + e.what()), level_(level), kind_(e.kind()) {}
  int level() const { return level_; }
  SolverError::Kind kind() const { return kind_; }

 private:
  int level_;
  SolverError::Kind kind_;
};

inline std::optional<double> resolve_reference(const RunConfig& c) {
  return c.reference_lambda ? c.reference_lambda : benchmark_lambda(c.domain);
}

inline std::vector<RunRecord> run(const RunConfig& config, const LevelObserver& observer = {}) {
  validate(config);
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  const auto reference = resolve_reference(config);

  std::vector<RunRecord> records;
  auto mesh = std::make_shared<const Mesh>(create_initial_mesh(config.domain));
  CellMap map;
  double pending_refine_time = 0.0;

  struct Previous {
    std::shared_ptr<const THSpace> space;
    StokesOperators ops;
    std::vector<EigenPair> pairs;
  };
  std::optional<Previous> prev;

  for (int level = 0; level < config.max_levels; ++level) {
    auto space = std::make_shared<const THSpace>(mesh);
    if (level > 0 && space->n_u() + space->n_p() > config.max_dofs) break;

    RunRecord rec;
    rec.level = level;
    rec.cells = mesh->n_cells();
    rec.n_u = space->n_u();
    rec.n_p = space->n_p();
    rec.t_refine = pending_refine_time;
    rec.min_angle = mesh->min_angle();

    auto t0 = clock::now();
    StokesOperators ops = assemble(*space);
    EigenOptions opt;
    opt.nev = config.nev;
    opt.tol = config.eig_tol;
    std::vector<CoefficientVector> embedded;
    if (prev) {
      for (const auto& p : prev->pairs) {
        embedded.push_back(prolongate(*prev->space, *space, map, p.c));
        opt.start.push_back(embedded.back().u);
      }
    }
    std::vector<EigenPair> pairs;
    try {
      pairs = solve_evp(ops, opt);
    } catch (const SolverError& e) {
      throw RunError(level, e);
    }
    for (std::size_t j = 0; j < pairs.size() && j < embedded.size(); ++j) align_sign(pairs[j], embedded[j].u, ops.M);
    rec.t_solve = seconds(t0, clock::now());
    for (const auto& p : pairs) rec.lambda.push_back(p.lambda);
    rec.iterations = pairs.front().iterations;
    for (const auto& p : pairs) rec.residual = std::max(rec.residual, p.residual);
    if (reference) rec.sqrt_error = std::sqrt(std::abs(*reference - pairs.front().lambda));
    if (prev) {
      rec.identity2_rel_gap = identity_II_check({*prev->space, prev->ops, prev->pairs.front()},
                                                {*space, ops, pairs.front()}, map)
                                  .rel_gap;
    }

    t0 = clock::now();
    const Indicators ind = compute_indicators(*space, pairs.front());
    rec.eta = global_eta(ind);
    rec.div_jump_ratio = equivalence_diagnostics(*space, pairs.front().c).div_jump_ratio;
    const bool last = level + 1 == config.max_levels;
    std::vector<int> marked;
    if (!last) {
      if (config.mode == RefinementMode::adaptive) {
        marked = mark_dorfler(ind, config.theta);
      } else {
        marked.resize(mesh->n_cells());
        for (int c = 0; c < mesh->n_cells(); ++c) marked[c] = c;
      }
    }
    rec.t_estimate = seconds(t0, clock::now());
    rec.marked = static_cast<int>(marked.size());
    for (int c : marked) {
      const auto m = mesh->centroid(c);
      if (std::hypot(m.x, m.y) <= 0.25) ++rec.marked_near_corner;
    }
    if (observer) observer(LevelState{level, *mesh, *space, ops, pairs, ind, marked});
    records.push_back(std::move(rec));
    if (marked.empty()) break;

    t0 = clock::now();
    auto [fine, m] = config.mode == RefinementMode::adaptive ? refine(*mesh, marked, config.bisection) : uniform_refine(*mesh);
    pending_refine_time = seconds(t0, clock::now());
    prev = Previous{space, std::move(ops), std::move(pairs)};
    mesh = std::make_shared<const Mesh>(std::move(fine));
    map = std::move(m);
  }
  return records;
}

/// Decay rate -slope of the least-squares fit of log y against log x.
inline double fit_rate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_rate: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("fit_rate: need at least two points");
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_rate: x values are all equal");
  return -(n * sxy - sx * sy) / den;
}

enum class RecordField { dofs, cells, eta, sqrt_error, lambda1 };

inline double field_value(const RunRecord& r, RecordField f) {
  switch (f) {
    case RecordField::dofs: return r.dofs();
    case RecordField::cells: return r.cells;
    case RecordField::eta: return r.eta;
    case RecordField::sqrt_error:
      if (!r.sqrt_error) throw std::invalid_argument("record has no reference error");
      return *r.sqrt_error;
    case RecordField::lambda1: return r.lambda.front();
  }
  return 0.0;
}

/// Rate over the last `tail` records.
inline double fit_rate(std::span<const RunRecord> records, RecordField x_field, RecordField y_field, std::size_t tail) {
  if (tail < 3 || records.size() < tail) throw std::invalid_argument("fit_rate: need at least 3 records in the tail");
  std::vector<double> x, y;
  for (std::size_t i = records.size() - tail; i < records.size(); ++i) {
    x.push_back(field_value(records[i], x_field));
    y.push_back(field_value(records[i], y_field));
  }
  return fit_rate(x, y);
}

inline std::vector<double> effectivity(std::span<const RunRecord> records, std::optional<double> lambda_ref) {
  std::vector<double> lam, eta;
  for (const auto& r : records) {
    lam.push_back(r.lambda.front());
    eta.push_back(r.eta);
  }
  return effectivity_indices(lam, eta, lambda_ref);
}

/// level,cells,n_u,n_p,lambda1..lambdaN,eta,marked,sqrt_err,t_solve,t_estimate,t_refine
/// With timings=false the three time columns are written as 0 so that output is
/// byte-reproducible.
inline void write_csv(std::ostream& out, std::span<const RunRecord> records, bool timings = true) {
  const std::size_t nev = records.empty() ? 1 : records.front().lambda.size();
  out << "level,cells,n_u,n_p";
  for (std::size_t j = 1; j <= nev; ++j) out << ",lambda" << j;
  out << ",eta,marked,sqrt_err,t_solve,t_estimate,t_refine\n";
  std::ostringstream line;
  for (const auto& r : records) {
    line.str("");
    line << std::setprecision(15);
    line << r.level << ',' << r.cells << ',' << r.n_u << ',' << r.n_p;
    for (double l : r.lambda) line << ',' << l;
    line << ',' << r.eta << ',' << r.marked << ',';
    if (r.sqrt_error) line << *r.sqrt_error;
    line << std::setprecision(6);
    if (timings) {
      line << ',' << r.t_solve << ',' << r.t_estimate << ',' << r.t_refine;
    } else {
      line << ",0,0,0";
    }
    out << line.str() << '\n';
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"domain", to_string(c.domain)}, {"theta", c.theta},        {"nev", c.nev},
                   {"max_dofs", c.max_dofs},       {"max_levels", c.max_levels}, {"eig_tol", c.eig_tol},
                   {"mode", to_string(c.mode)},    {"bisection", to_string(c.bisection)}};
  if (c.reference_lambda) j["reference_lambda"] = *c.reference_lambda;
  return j;
}

inline nlohmann::json to_json(const RunRecord& r, bool timings = true) {
  nlohmann::json j{{"level", r.level}, {"cells", r.cells}, {"n_u", r.n_u},     {"n_p", r.n_p},
                   {"lambda", r.lambda}, {"eta", r.eta},   {"marked", r.marked}};
  j["sqrt_err"] = r.sqrt_error ? nlohmann::json(*r.sqrt_error) : nlohmann::json(nullptr);
  j["t_solve"] = timings ? r.t_solve : 0.0;
  j["t_estimate"] = timings ? r.t_estimate : 0.0;
  j["t_refine"] = timings ? r.t_refine : 0.0;
  j["diagnostics"] = {{"iterations", r.iterations},
                      {"residual", r.residual},
                      {"identity2_rel_gap", r.identity2_rel_gap ? nlohmann::json(*r.identity2_rel_gap) : nlohmann::json(nullptr)},
                      {"div_jump_ratio", r.div_jump_ratio},
                      {"min_angle", r.min_angle},
                      {"marked_near_corner", r.marked_near_corner}};
  return j;
}

/// Full run log. Summary diagnostics go under "diagnostics".
inline nlohmann::json run_to_json(const RunConfig& config, std::span<const RunRecord> records, bool timings = true) {
  nlohmann::json j;
  j["config"] = to_json(config);
  const auto reference = resolve_reference(config);
  j["reference_lambda"] = reference ? nlohmann::json(*reference) : nlohmann::json(nullptr);
  j["records"] = nlohmann::json::array();
  for (const auto& r : records) j["records"].push_back(to_json(r, timings));
  nlohmann::json diag = nlohmann::json::object();
  if (reference && !records.empty()) {
    const auto eff = effectivity(records, reference);
    diag["effectivity"] = eff;
    if (eff.size() > 2) diag["effectivity_band_ratio"] = band_ratio(eff, 2);
  }
  if (records.size() >= 3) {
    const std::size_t tail = std::min<std::size_t>(6, records.size());
    diag["eta_rate"] = fit_rate(records, RecordField::dofs, RecordField::eta, tail);
    if (reference) {
      bool positive = true;
      for (std::size_t i = records.size() - tail; i < records.size(); ++i) positive = positive && *records[i].sqrt_error > 0.0;
      if (positive) diag["sqrt_error_rate"] = fit_rate(records, RecordField::dofs, RecordField::sqrt_error, tail);
    }
    diag["rate_tail"] = tail;
  }
  j["diagnostics"] = diag;
  return j;
}

}  // namespace stokes_afem
