#include "fdlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fdlab/capacity.hpp"
#include "fdlab/capacity_studies.hpp"
#include "fdlab/hausdorff.hpp"
#include "fdlab/kernel.hpp"
#include "fdlab/norms.hpp"
#include "fdlab/parallel.hpp"
#include "fdlab/regularity.hpp"

#ifndef FDLAB_VERSION
#define FDLAB_VERSION "unknown"
#endif

namespace fdlab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kMetaKeys = {"kind", "name", "seed", "output", "expected_exponent",
                                         "exponent_tolerance"};

// Reads typed fields from one JSON object and remembers which keys were used, so
// that leftovers can be reported as unknown.
class Params {
 public:
  Params(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) fail(key, "expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key) {
    double x = number(key);
    if (!(x > 0)) fail(key, "must be positive");
    return x;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  int integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::size_t min_size = 1) {
    const json& v = get(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    if (out.size() < min_size) fail(key, "needs at least " + std::to_string(min_size) + " entries");
    return out;
  }

  Params sub(const std::string& key) {
    get(key);
    return Params(j_.at(key), path(key));
  }
  std::vector<Params> list(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of objects");
    std::vector<Params> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], path(key) + "[" + std::to_string(i) + "]");
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(it.key(), "unknown field");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(path(key) + ": " + what);
  }

 private:
  const json& get(const std::string& key) {
    if (!j_.contains(key)) fail(key, "missing required field");
    used_.insert(key);
    return j_.at(key);
  }
  std::string path(const std::string& key) const {
    if (key.empty()) return where_;
    return where_.empty() ? key : where_ + "." + key;
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

SpaceTimeGrid read_grid(Params p) {
  int n = p.integer("n");
  double L = p.number("L");
  int N = p.integer("N");
  double T = p.number("T");
  int M = p.integer("M");
  p.finish();
  try {
    return make_grid(n, L, N, T, M);
  } catch (const InvalidArgument& e) {
    p.fail("", e.what());
  }
}

double read_alpha(Params& p) {
  double a = p.number("alpha");
  if (!(a > 0 && a < 1)) p.fail("alpha", "must lie in (0, 1)");
  return a;
}

// Spatial exponent p in [1, inf) and temporal q in (1, inf).
std::pair<double, double> read_pq(Params& p) {
  double sp = p.number("p"), tq = p.number("q");
  if (!(sp >= 1)) p.fail("p", "must be at least 1");
  if (!(tq > 1)) p.fail("q", "must exceed 1");
  return {sp, tq};
}

int read_n(Params& p) {
  int n = p.integer("n");
  if (n != 1 && n != 2) p.fail("n", "must be 1 or 2");
  return n;
}

SolverConfig read_solver(Params& p) {
  SolverConfig cfg;
  if (!p.has("solver")) return cfg;
  Params s = p.sub("solver");
  cfg.max_iterations = s.integer("max_iterations", cfg.max_iterations);
  cfg.rel_gap_tol = s.positive("rel_gap_tol", cfg.rel_gap_tol);
  cfg.report_every = s.integer("report_every", cfg.report_every);
  cfg.adaptive = s.flag("adaptive", cfg.adaptive);
  cfg.gram_limit = static_cast<std::size_t>(s.integer("gram_limit", static_cast<int>(cfg.gram_limit)));
  cfg.p1_dual_exponent = s.positive("p1_dual_exponent", cfg.p1_dual_exponent);
  cfg.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<int>(cfg.seed)));
  if (cfg.max_iterations < 1) s.fail("max_iterations", "must be positive");
  if (cfg.report_every < 1) s.fail("report_every", "must be positive");
  s.finish();
  return cfg;
}

BallGridSpec read_ball_grid(Params& p) {
  BallGridSpec spec;
  if (!p.has("ball_grid")) return spec;
  Params s = p.sub("ball_grid");
  spec.L = s.positive("L", spec.L);
  spec.t0 = s.positive("t0", spec.t0);
  spec.cells_per_radius = s.positive("cells_per_radius", spec.cells_per_radius);
  spec.steps_per_time_radius = s.positive("steps_per_time_radius", spec.steps_per_time_radius);
  s.finish();
  return spec;
}

ParabolicBall read_ball(Params p, int n, double alpha) {
  ParabolicBall b;
  b.alpha = alpha;
  b.t0 = p.number("t0");
  b.r = p.positive("r");
  if (p.has("x0")) {
    auto x = p.numbers("x0");
    if (static_cast<int>(x.size()) != n) p.fail("x0", "needs one coordinate per dimension");
    for (int i = 0; i < n; ++i) b.x0[i] = x[i];
  }
  p.finish();
  return b;
}

std::vector<double> read_radii(Params& p, const std::string& key, std::size_t min_size) {
  auto r = p.numbers(key, min_size);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0)) p.fail(key, "entries must be positive");
    if (i > 0 && !(r[i] < r[i - 1])) p.fail(key, "entries must be strictly decreasing");
  }
  return r;
}

RegularityRegime read_regime(Params& p, int n, Regime wanted) {
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  auto reg = classify(n, alpha, sp, tq);
  if (reg.regime != wanted)
    p.fail("p", "(n, alpha, p, q) is " + to_string(reg.regime) + ", this kind needs " + to_string(wanted));
  return reg;
}

SourceFamily read_family(Params& p, const std::string& fallback) {
  try {
    return parse_source_family(p.text("family", fallback));
  } catch (const InvalidArgument& e) {
    p.fail("family", e.what());
  }
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Small CSV builder; every cell goes through fmt() so output is byte-stable.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  Table& row() {
    rows_.emplace_back();
    return *this;
  }
  Table& operator<<(double v) { return cell(fmt(v)); }
  Table& operator<<(int v) { return cell(std::to_string(v)); }
  Table& operator<<(std::size_t v) { return cell(std::to_string(v)); }
  Table& operator<<(bool v) { return cell(v ? "1" : "0"); }
  Table& operator<<(const std::string& v) { return cell(v); }
  Table& operator<<(const char* v) { return cell(v); }
  std::string str(const json& config) const {
    std::ostringstream os;
    os << "# config: " << config.dump() << "\n";
    os << "# version: " << code_version() << "\n";
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

 private:
  Table& cell(std::string s) {
    rows_.back().push_back(std::move(s));
    return *this;
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct KindResult {
  bool pass = false;
  std::string message;
  json summary = json::object();
  std::optional<Table> table;
  std::optional<double> exponent;
  std::map<std::string, json> extra;  // additional JSON files by name
};

using Job = std::function<KindResult()>;

json fit_json(const ScalingFit& f) {
  return {{"fitted_exponent", f.fitted_exponent}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}
json line_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}
json grid_json(const SpaceTimeGrid& g) {
  return {{"n", g.n()}, {"L", g.L()}, {"N", g.N()}, {"T", g.T()}, {"M", g.M()}};
}

Job kernel_envelope(Params& p) {
  struct Case {
    int n;
    double alpha, t, L;
    int N;
  };
  std::vector<Case> cases;
  for (auto& c : p.list("cases")) {
    Case k{read_n(c), read_alpha(c), c.positive("t"), c.positive("L"), c.integer("N")};
    c.finish();
    try {
      auto g = make_grid(k.n, k.L, k.N, 1.0, 2);
      if (k.t < min_resolvable_time(k.alpha, refine_space(g)) ||
          k.t < min_resolvable_time(k.alpha, g))
        c.fail("t", "below the resolvable time " + fmt(min_resolvable_time(k.alpha, g)));
    } catch (const InvalidArgument& e) {
      c.fail("", e.what());
    }
    cases.push_back(k);
  }
  double tol = p.positive("tolerance", 0.1);
  double frac = p.positive("region_fraction", 0.25);
  if (frac > 0.5) p.fail("region_fraction", "must not exceed 1/2");
  return [=] {
    KindResult res;
    Table t({"n", "alpha", "t", "L", "N", "c_lower", "c_upper", "spread", "spread_refined",
             "relative_change", "sigma", "kappa"});
    double worst = 0;
    bool finite = true;
    for (const auto& c : cases) {
      auto g = make_grid(c.n, c.L, c.N, 1.0, 2);
      auto a = envelope_report(c.alpha, c.t, g, frac * c.L);
      auto b = envelope_report(c.alpha, c.t, refine_space(g), frac * c.L);
      double change = std::abs(b.spread() / a.spread() - 1);
      finite = finite && std::isfinite(a.spread()) && std::isfinite(b.spread()) && a.c_lower > 0;
      worst = std::max(worst, change);
      t.row() << c.n << c.alpha << c.t << c.L << c.N << a.c_lower << a.c_upper << a.spread()
              << b.spread() << change << a.sigma << a.kappa;
    }
    res.pass = finite && worst < tol;
    res.summary = {{"cases", cases.size()}, {"max_relative_change", worst}, {"tolerance", tol}};
    res.message = "max spread change " + fmt(worst);
    res.table = t;
    return res;
  };
}

json strichartz_json(const StrichartzResult& r) {
  return {{"estimate", r.estimate}, {"n", r.n}, {"alpha", r.alpha}, {"p", r.p}, {"q", r.q},
          {"p_tilde", r.p_tilde}, {"q_tilde", r.q_tilde}, {"ratio", finite_or_null(r.ratio)},
          {"ratio_refined", finite_or_null(r.ratio_refined)},
          {"relative_change", finite_or_null(r.relative_change())}, {"best_family", r.best_family},
          {"trials", r.trials}, {"skipped", r.skipped}, {"seed", r.seed},
          {"range_unrestricted", r.range_unrestricted}};
}

Job strichartz(Params& p, bool inhomogeneous, std::uint64_t seed) {
  double alpha = read_alpha(p);
  double sp = p.number("p");
  double q = inhomogeneous ? p.number("q") : 0.0;
  double pt = p.number("p_tilde");
  double qt = inhomogeneous ? p.number("q_tilde") : 0.0;
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  int trials = p.integer("trials", 30);
  double tol = p.positive("tolerance", 0.1);
  if (trials < 1) p.fail("trials", "must be positive");
  try {
    if (inhomogeneous) {
      double res = strichartz_relation_residual(grid.n(), alpha, sp, q, pt, qt);
      if (std::abs(res) > 1e-12) p.fail("q_tilde", "exponents violate the scaling relation (residual " + fmt(res) + ")");
    } else {
      strichartz_q_tilde(grid.n(), alpha, sp, pt);
    }
  } catch (const InvalidArgument& e) {
    p.fail("p_tilde", e.what());
  }
  return [=] {
    auto r = inhomogeneous ? strichartz_study_S(alpha, sp, q, pt, qt, grid, trials, seed)
                           : strichartz_study_R(alpha, sp, pt, grid, trials, seed);
    KindResult res;
    double change = r.relative_change();
    res.pass = std::isfinite(r.ratio) && std::isfinite(r.ratio_refined) && change < tol;
    res.summary = strichartz_json(r);
    res.summary["tolerance"] = tol;
    res.summary["grid"] = grid_json(grid);
    res.message = "ratio " + fmt(r.ratio) + " -> " + fmt(r.ratio_refined);
    return res;
  };
}

Job continuity(Params& p) {
  double alpha = read_alpha(p);
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  double t = p.positive("t");
  auto inc = p.numbers("increments", 3);
  for (double h : inc)
    if (!(h > 0)) p.fail("increments", "entries must be positive");
  double half = p.positive("half_width", 1.0);
  if (half >= grid.L() / 2) p.fail("half_width", "must be below L/2");
  double tol = p.positive("tolerance", 0.1);
  return [=] {
    SemigroupPlan plan(grid, alpha);
    Field f = Field::slice(grid);
    for (std::size_t i = 0; i < grid.slice_size(); ++i) {
      Point x = grid.point(i);
      bool in = true;
      for (int a = 0; a < grid.n(); ++a) in = in && std::abs(x[a]) < half;
      f.values()[i] = in ? 1.0 : 0.0;
    }
    auto c = continuity_check(plan, f, t, inc);
    KindResult res;
    Table tab({"increment", "max_change"});
    for (auto& [h, m] : c.samples) tab.row() << h << m;
    res.table = tab;
    res.exponent = c.fitted_exponent;
    res.pass = c.decreasing && c.fitted_exponent >= (1 - tol) * c.bound_exponent;
    res.summary = {{"t", t}, {"fitted_exponent", c.fitted_exponent}, {"bound_exponent", c.bound_exponent},
                   {"decreasing", c.decreasing}, {"tolerance", tol}, {"grid", grid_json(grid)}};
    res.message = "modulus exponent " + fmt(c.fitted_exponent);
    return res;
  };
}

Job exp_integrability(Params& p, std::uint64_t seed) {
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  auto regime = read_regime(p, grid.n(), Regime::Critical);
  int refinements = p.integer("refinements", 2);
  int trials = p.integer("trials", 3);
  double threshold = p.positive("threshold", 10.0);
  auto family = read_family(p, "cylinder-sum");
  if (refinements < 1) p.fail("refinements", "must be at least 1");
  if (trials < 1) p.fail("trials", "must be positive");
  if (threshold <= 1) p.fail("threshold", "must exceed 1");
  return [=] {
    auto st = exp_integrability_study(regime, grid, refinements, family, seed, trials, threshold);
    KindResult res;
    Table tab({"trial", "N", "c_exponent", "c_star"});
    bool finite = true;
    for (int t = 0; t < trials; ++t)
      for (std::size_t l = 0; l < st.levels_N.size(); ++l) {
        tab.row() << t << st.levels_N[l] << st.exponents[t][l] << st.c_star[t][l];
        finite = finite && std::isfinite(st.c_star[t][l]) && st.c_star[t][l] > 0;
      }
    res.table = tab;
    res.pass = finite && st.stable;
    res.summary = {{"family", to_string(family)}, {"seed", seed}, {"trials", trials},
                   {"max_spread", st.max_spread}, {"stable", st.stable}, {"threshold", threshold},
                   {"levels_N", st.levels_N}, {"grid", grid_json(grid)}};
    res.message = "dyadic spread " + std::to_string(st.max_spread);
    return res;
  };
}

Job holder(Params& p, std::uint64_t seed) {
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  auto regime = read_regime(p, grid.n(), Regime::Subcritical);
  int trials = p.integer("trials", 4);
  double tol = p.positive("tolerance", 0.15);
  auto family = read_family(p, "cylinder-sum");
  if (trials < 1) p.fail("trials", "must be positive");
  return [=] {
    SemigroupPlan plan(grid, regime.alpha);
    auto st = holder_study(regime, plan, family, seed, trials, tol);
    KindResult res;
    Table tab({"trial", "direction", "fitted_exponent", "theory_exponent", "r_squared", "vacuous", "pass"});
    for (int t = 0; t < trials; ++t) {
      for (const HolderFit* f : {&st.space[t], &st.time[t]})
        tab.row() << t << (f->direction == Direction::Space ? "space" : "time") << f->fitted_exponent
                  << f->theory_exponent << f->r_squared << f->vacuous << f->pass;
    }
    res.table = tab;
    res.pass = st.pass;
    double low = std::min(st.min_space, st.min_time);
    if (std::isfinite(low)) res.exponent = low;
    res.summary = {{"family", to_string(family)}, {"seed", seed}, {"trials", trials},
                   {"min_space", finite_or_null(st.min_space)}, {"min_time", finite_or_null(st.min_time)},
                   {"theory_space", holder_theory_exponent(regime, Direction::Space)},
                   {"theory_time", holder_theory_exponent(regime, Direction::Time)},
                   {"tolerance", tol}, {"grid", grid_json(grid)}};
    res.message = "smallest fitted exponent " + fmt(low);
    return res;
  };
}

json capacity_json(const CapacityResult& r) {
  json reports = json::array();
  for (const auto& s : r.reports)
    reports.push_back({{"method", s.method}, {"iterations", s.iterations}, {"converged", s.converged},
                       {"bound", finite_or_null(s.bound)}, {"residual", finite_or_null(s.residual)}});
  return {{"set", r.set_label}, {"set_size", r.set_size}, {"p", r.p}, {"q", r.q}, {"alpha", r.alpha},
          {"n", r.n}, {"primal", finite_or_null(r.primal_value)}, {"dual", r.dual_value},
          {"gap", finite_or_null(r.gap)}, {"relative_gap", finite_or_null(r.relative_gap)},
          {"sub_resolution", r.sub_resolution}, {"converged", r.converged}, {"reports", reports}};
}

Job capacity_bracket_job(Params& p) {
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  ParabolicBall ball = read_ball(p.sub("set"), grid.n(), alpha);
  try {
    ball_mask(grid, ball);
  } catch (const InvalidArgument& e) {
    p.fail("set", e.what());
  }
  SolverConfig cfg = read_solver(p);
  double gap_tol = p.positive("gap_tolerance", 1e-2);
  return [=] {
    SemigroupPlan plan(grid, alpha);
    auto K = CompactSet::from_ball(grid, ball);
    auto r = capacity_bracket(K, sp, tq, plan, cfg);
    KindResult res;
    bool weak = r.dual_value <= r.primal_value * (1 + 1e-12);
    res.pass = weak && r.relative_gap <= gap_tol;
    res.summary = capacity_json(r);
    res.summary["weak_duality"] = weak;
    res.summary["gap_tolerance"] = gap_tol;
    res.summary["grid"] = grid_json(grid);
    res.message = "bracket [" + fmt(r.dual_value) + ", " + fmt(r.primal_value) + "]";
    return res;
  };
}

Job capacity_scaling(Params& p) {
  int n = read_n(p);
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  auto radii = read_radii(p, "radii", 3);
  auto spec = read_ball_grid(p);
  auto cfg = read_solver(p);
  if (classify(n, alpha, sp, tq).regime != Regime::Supercritical) p.fail("p", "(n, alpha, p, q) must be supercritical");
  return [=] {
    auto st = scaling_experiment(sp, tq, alpha, n, radii, spec, cfg);
    KindResult res;
    Table tab({"r", "N", "M", "set_size", "primal", "dual", "relative_gap", "certificate", "iterations"});
    for (const auto& pt : st.points)
      tab.row() << pt.r << pt.N << pt.M << pt.set_size << pt.primal << pt.dual << pt.relative_gap
                << pt.certificate << pt.iterations;
    res.table = tab;
    res.exponent = st.fit.fitted_exponent;
    res.pass = st.pass;
    res.summary = {{"target", st.target}, {"tolerance", st.tolerance}, {"eta", st.eta},
                   {"fit", fit_json(st.fit)}, {"certificate_fit", fit_json(st.certificate_fit)},
                   {"certificates_dominate", st.certificates_dominate}};
    res.extra["fit.json"] = res.summary;
    res.message = "fitted " + fmt(st.fit.fitted_exponent) + " target " + fmt(st.target);
    return res;
  };
}

Job capacity_critical(Params& p) {
  int n = read_n(p);
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  auto radii = read_radii(p, "radii", 3);
  auto spec = read_ball_grid(p);
  auto cfg = read_solver(p);
  if (classify(n, alpha, sp, tq).regime != Regime::Critical) p.fail("p", "(n, alpha, p, q) must be critical");
  if (radii.front() / radii.back() < 8 - 1e-12) p.fail("radii", "must span at least three dyadic orders");
  return [=] {
    auto st = critical_experiment(sp, tq, alpha, n, radii, spec, cfg);
    KindResult res;
    Table tab({"r", "N", "M", "set_size", "primal", "dual", "relative_gap", "log_term", "min_potential",
               "norm_power", "certificate"});
    for (const auto& pt : st.points)
      tab.row() << pt.r << pt.N << pt.M << pt.set_size << pt.primal << pt.dual << pt.relative_gap
                << pt.log_term << pt.min_potential << pt.norm_power << pt.certificate;
    res.table = tab;
    res.exponent = st.fit.slope;
    res.pass = st.pass;
    res.summary = {{"target", st.target}, {"tolerance", st.tolerance}, {"fit", line_json(st.fit)},
                   {"lower_spread", st.lower_spread}, {"upper_spread", st.upper_spread},
                   {"spread_limit", st.spread_limit}, {"pass_fit", st.pass_fit},
                   {"pass_lower", st.pass_lower}, {"pass_upper", st.pass_upper}};
    res.extra["fit.json"] = res.summary;
    res.message = "log-law slope " + fmt(st.fit.slope) + " target " + fmt(st.target);
    return res;
  };
}

Job capacity_axioms(Params& p) {
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  auto cfg = read_solver(p);
  return [=] {
    SemigroupPlan plan(grid, alpha);
    auto rep = axiom_suite(plan, sp, tq, cfg);
    KindResult res;
    json checks = json::array();
    int failed = 0;
    for (const auto& c : rep.checks) {
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"lhs", finite_or_null(c.lhs)},
                        {"rhs", finite_or_null(c.rhs)}, {"detail", c.detail}});
      failed += !c.pass;
    }
    res.pass = rep.pass();
    res.summary = {{"p", sp}, {"q", tq}, {"alpha", alpha}, {"grid", grid_json(grid)}, {"checks", checks}};
    res.message = std::to_string(rep.checks.size() - failed) + "/" + std::to_string(rep.checks.size()) +
                  " checks hold";
    return res;
  };
}

GaugeFn read_gauge(Params p) {
  std::string kind = p.text("kind", "power");
  double par = p.positive("parameter");
  p.finish();
  if (kind == "power") return GaugeFn::power(par);
  if (kind == "log-power") return GaugeFn::log_power(par);
  p.fail("kind", "expected \"power\" or \"log-power\"");
}

CoverMethod read_method(Params& p) {
  std::string m = p.text("method", "best");
  for (auto c : {CoverMethod::SingleBall, CoverMethod::DyadicGrid, CoverMethod::Greedy, CoverMethod::Best})
    if (to_string(c) == m) return c;
  p.fail("method", "unknown cover method '" + m + "'");
}

Job hausdorff_job(Params& p) {
  SpaceTimeGrid grid = read_grid(p.sub("grid"));
  double alpha = read_alpha(p);
  ParabolicBall ball = read_ball(p.sub("set"), grid.n(), alpha);
  try {
    ball_mask(grid, ball);
  } catch (const InvalidArgument& e) {
    p.fail("set", e.what());
  }
  GaugeFn gauge = read_gauge(p.sub("gauge"));
  auto eps = read_radii(p, "epsilons", 1);
  if (eps.back() <= cover_resolution(grid, alpha))
    p.fail("epsilons", "smallest entry must exceed the cover resolution " + fmt(cover_resolution(grid, alpha)));
  CoverMethod method = read_method(p);
  return [=] {
    auto K = CompactSet::from_ball(grid, ball);
    KindResult res;
    Table tab({"epsilon", "value", "method", "balls", "verified", "volume_bound", "scale"});
    json covers = json::array();
    bool verified = true, monotone = true, above_volume = true;
    double prev = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      auto c = hausdorff_content(K, alpha, gauge, eps[i], method);
      tab.row() << eps[i] << c.value << to_string(c.method) << c.balls.size() << c.verified << c.volume_bound
                << c.scale;
      json balls = json::array();
      for (const auto& b : c.balls) {
        json x = json::array();
        for (int a = 0; a < grid.n(); ++a) x.push_back(b.x0[a]);
        balls.push_back({{"t0", b.t0}, {"x0", x}, {"r", b.r}});
      }
      covers.push_back({{"epsilon", eps[i]}, {"value", c.value}, {"method", to_string(c.method)}, {"balls", balls}});
      verified = verified && c.verified;
      above_volume = above_volume && c.volume_bound <= c.value * (1 + 1e-12);
      if (i > 0 && c.value < prev * (1 - 1e-12)) monotone = false;
      prev = c.value;
    }
    res.table = tab;
    res.pass = verified && monotone;
    res.summary = {{"gauge", gauge.describe()}, {"set_size", K.size()}, {"verified", verified},
                   {"monotone_in_epsilon", monotone}, {"above_cell_volume_estimate", above_volume},
                   {"grid", grid_json(grid)}};
    res.extra["covers.json"] = covers;
    res.message = "content at smallest epsilon " + fmt(prev);
    return res;
  };
}

Job comparison_job(Params& p) {
  int n = read_n(p);
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  double pt = p.number("p_tilde"), qt = p.number("q_tilde");
  double delta = p.positive("delta");
  auto shrinks = read_radii(p, "shrinks", 3);
  ProductSet base;
  if (p.has("base")) {
    Params b = p.sub("base");
    base.t_center = b.positive("t_center", base.t_center);
    base.t_half = b.positive("t_half", base.t_half);
    base.x_half = b.positive("x_half", base.x_half);
    b.finish();
  }
  auto spec = read_ball_grid(p);
  auto cfg = read_solver(p);
  try {
    double res = strichartz_relation_residual(n, alpha, sp, tq, pt, qt);
    if (std::abs(res) > 1e-12) p.fail("q_tilde", "exponents violate the scaling relation");
  } catch (const InvalidArgument& e) {
    p.fail("p_tilde", e.what());
  }
  return [=] {
    auto rep = comparison_experiment(base, sp, tq, alpha, n, pt, qt, delta, shrinks, spec, cfg);
    KindResult res;
    Table tab({"shrink", "lebesgue", "capacity_lo", "capacity_hi", "content"});
    for (const auto& r : rep.rows) tab.row() << r.shrink << r.lebesgue << r.capacity_lo << r.capacity_hi << r.content;
    res.table = tab;
    res.exponent = rep.capacity_slope;
    res.pass = rep.pass;
    res.summary = {{"beta", rep.beta}, {"lebesgue_exponent", rep.lebesgue_exponent},
                   {"lebesgue_slope", rep.lebesgue_slope}, {"capacity_slope", rep.capacity_slope},
                   {"content_slope", rep.content_slope}, {"tolerance", rep.tolerance},
                   {"exponent_identity", rep.exponent_identity}};
    res.message = "slopes " + fmt(rep.lebesgue_slope) + " / " + fmt(rep.capacity_slope) + " / " +
                  fmt(rep.content_slope);
    return res;
  };
}

Job log_gauge_job(Params& p) {
  int n = read_n(p);
  double alpha = read_alpha(p);
  auto [sp, tq] = read_pq(p);
  auto radii = read_radii(p, "radii", 3);
  double eps = p.positive("epsilon", 0.5);
  if (eps >= 1) p.fail("epsilon", "must be below 1");
  auto spec = read_ball_grid(p);
  auto cfg = read_solver(p);
  if (classify(n, alpha, sp, tq).regime != Regime::Critical) p.fail("p", "(n, alpha, p, q) must be critical");
  return [=] {
    auto rep = log_gauge_experiment(sp, tq, alpha, n, radii, eps, spec, cfg);
    KindResult res;
    Table tab({"r", "capacity_lo", "capacity_hi", "content", "ratio"});
    for (const auto& r : rep.rows) tab.row() << r.r << r.capacity_lo << r.capacity_hi << r.content << r.ratio;
    res.table = tab;
    res.exponent = rep.ratio_fit.slope;
    res.pass = rep.pass;
    res.summary = {{"gamma", rep.gamma}, {"epsilon", rep.epsilon}, {"ratio_fit", line_json(rep.ratio_fit)},
                   {"slope_limit", rep.slope_limit}, {"max_ratio", finite_or_null(rep.max_ratio)}};
    res.message = "ratio slope " + fmt(rep.ratio_fit.slope);
    return res;
  };
}

// Validates every parameter and returns the computation; nothing heavy runs here.
Job prepare(const ExperimentConfig& c) {
  Params p(c.params, c.kind);
  std::uint64_t seed = c.seed.value_or(0);
  Job job;
  const std::string& k = c.kind;
  if (k == "kernel-envelope") job = kernel_envelope(p);
  else if (k == "strichartz-R") job = strichartz(p, false, seed);
  else if (k == "strichartz-S") job = strichartz(p, true, seed);
  else if (k == "continuity") job = continuity(p);
  else if (k == "exp-integrability") job = exp_integrability(p, seed);
  else if (k == "holder") job = holder(p, seed);
  else if (k == "capacity-bracket") job = capacity_bracket_job(p);
  else if (k == "capacity-scaling") job = capacity_scaling(p);
  else if (k == "capacity-critical") job = capacity_critical(p);
  else if (k == "capacity-axioms") job = capacity_axioms(p);
  else if (k == "hausdorff-content") job = hausdorff_job(p);
  else if (k == "comparison") job = comparison_job(p);
  else if (k == "log-gauge") job = log_gauge_job(p);
  else throw ConfigError("kind: unknown experiment kind '" + k + "'");
  p.finish();
  return job;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

bool within(double value, double expected, double tol) {
  double scale = expected != 0 ? std::abs(expected) : 1.0;
  return std::abs(value - expected) <= tol * scale;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

std::string code_version() { return FDLAB_VERSION; }

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {
      "kernel-envelope", "strichartz-R",     "strichartz-S",      "continuity",     "exp-integrability",
      "holder",          "capacity-bracket", "capacity-scaling",  "capacity-critical", "capacity-axioms",
      "hausdorff-content", "comparison",     "log-gauge"};
  return kinds;
}

bool is_randomized(const std::string& kind) {
  return kind == "strichartz-R" || kind == "strichartz-S" || kind == "exp-integrability" || kind == "holder";
}

json ExperimentConfig::echo() const {
  json j = params;
  j["kind"] = kind;
  j["name"] = name;
  if (seed) j["seed"] = *seed;
  if (expected_exponent) j["expected_exponent"] = *expected_exponent;
  return j;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("kind: missing required field");
  c.kind = j["kind"].get<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
    throw ConfigError("kind: unknown experiment kind '" + c.kind + "'");
  c.name = c.kind;
  if (j.contains("name")) {
    if (!j["name"].is_string() || j["name"].get<std::string>().empty())
      throw ConfigError("name: expected a non-empty string");
    c.name = j["name"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw ConfigError("seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  } else if (is_randomized(c.kind)) {
    throw ConfigError("seed: missing required field (kind '" + c.kind + "' is randomized)");
  }
  c.output_dir = "fdlab-out/" + c.name;
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output: expected a path string");
    c.output_dir = j["output"].get<std::string>();
  }
  if (j.contains("expected_exponent")) {
    if (!j["expected_exponent"].is_number()) throw ConfigError("expected_exponent: expected a number");
    c.expected_exponent = j["expected_exponent"].get<double>();
  }
  c.params = json::object();
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kMetaKeys.count(it.key()) || it.key() == "exponent_tolerance") c.params[it.key()] = it.value();
  // exponent_tolerance only matters together with expected_exponent.
  if (c.params.contains("exponent_tolerance") && !c.expected_exponent)
    throw ConfigError("exponent_tolerance: given without expected_exponent");
  json kind_params = c.params;
  kind_params.erase("exponent_tolerance");
  ExperimentConfig probe = c;
  probe.params = kind_params;
  prepare(probe);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(parse_json_text(read_file(path), path));
}

RunOutcome run(const ExperimentConfig& config) {
  RunOutcome out;
  const auto start = std::chrono::steady_clock::now();
  double exp_tol = 0.1;
  ExperimentConfig c = config;
  if (c.params.contains("exponent_tolerance")) {
    if (!c.params["exponent_tolerance"].is_number()) {
      out.exit_code = kConfigError;
      out.message = "exponent_tolerance: expected a number";
      return out;
    }
    exp_tol = c.params["exponent_tolerance"].get<double>();
    c.params.erase("exponent_tolerance");
  }
  KindResult res;
  try {
    Job job = prepare(c);
    res = job();
  } catch (const ConfigError& e) {
    out.exit_code = kConfigError;
    out.message = e.what();
  } catch (const ConvergenceError& e) {
    out.exit_code = kNonConvergence;
    out.message = std::string("did not converge: ") + e.what();
  } catch (const InvalidArgument& e) {
    out.exit_code = kConfigError;
    out.message = e.what();
  } catch (const Error& e) {
    out.exit_code = kAssertionFailure;
    out.message = e.what();
  }
  if (out.exit_code != kSuccess) return out;

  out.pass = res.pass;
  out.message = res.message;
  out.fitted_exponent = res.exponent;
  if (c.expected_exponent) {
    if (!res.exponent) {
      out.pass = false;
      out.message += "; kind reports no exponent to compare with expected_exponent";
    } else if (!within(*res.exponent, *c.expected_exponent, exp_tol)) {
      out.pass = false;
      out.message += "; exponent " + fmt(*res.exponent) + " misses expected " + fmt(*c.expected_exponent);
    }
  }
  out.exit_code = out.pass ? kSuccess : kAssertionFailure;

  const json config_echo = config.echo();
  try {
    fs::path dir(c.output_dir);
    fs::create_directories(dir);
    json results = {{"config", config_echo}, {"version", code_version()}, {"result", res.summary}};
    if (res.exponent) results["fitted_exponent"] = *res.exponent;
    write_text(dir / "results.json", results.dump(2) + "\n");
    out.files.push_back((dir / "results.json").string());
    if (res.table) {
      write_text(dir / "results.csv", res.table->str(config_echo));
      out.files.push_back((dir / "results.csv").string());
    }
    for (const auto& [name, body] : res.extra) {
      json wrapped = {{"config", config_echo}, {"version", code_version()}, {"data", body}};
      write_text(dir / name, wrapped.dump(2) + "\n");
      out.files.push_back((dir / name).string());
    }
    json verdict = {{"name", c.name}, {"kind", c.kind}, {"verdict", out.pass ? "PASS" : "FAIL"},
                    {"exit_code", out.exit_code}, {"message", out.message}};
    if (res.exponent) verdict["fitted_exponent"] = *res.exponent;
    if (c.expected_exponent) verdict["expected_exponent"] = *c.expected_exponent;
    write_text(dir / "verdict.json", verdict.dump(2) + "\n");
    out.files.push_back((dir / "verdict.json").string());
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json prov = {{"config", config_echo}, {"code_version", code_version()}, {"wall_time_seconds", wall},
                 {"threads", thread_count()}, {"files", out.files}};
    write_text(dir / "provenance.json", prov.dump(2) + "\n");
  } catch (const std::exception& e) {
    out.exit_code = kAssertionFailure;
    out.pass = false;
    out.message = std::string("could not write results: ") + e.what();
  }
  return out;
}

int verify_all(const std::string& manifest_path, std::ostream& out) {
  json m;
  try {
    m = parse_json_text(read_file(manifest_path), manifest_path);
  } catch (const ConfigError& e) {
    out << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  return verify_all(m, fs::path(manifest_path).parent_path().string(), out);
}

int verify_all(const json& manifest, const std::string& base_dir, std::ostream& out) {
  if (!manifest.is_object() || !manifest.contains("experiments") || !manifest["experiments"].is_array()) {
    out << "config error: manifest needs an \"experiments\" array\n";
    return kConfigError;
  }
  std::string root = manifest.value("output_root", std::string("fdlab-out"));
  bool config_error = false, nonconv = false, mismatch = false;
  out << std::left << std::setw(28) << "experiment" << std::setw(20) << "kind" << std::setw(52) << "anchor"
      << std::setw(9) << "verdict" << std::setw(9) << "expected" << "status\n";
  for (std::size_t i = 0; i < manifest["experiments"].size(); ++i) {
    const json& e = manifest["experiments"][i];
    std::string where = "experiments[" + std::to_string(i) + "]";
    std::string anchor = e.value("anchor", std::string("-"));
    std::string expect = e.value("expect", std::string("PASS"));
    ExperimentConfig cfg;
    RunOutcome r;
    try {
      if (!e.is_object() || !e.contains("config")) throw ConfigError(where + ": missing config");
      json cj = e["config"];
      if (cj.is_string()) {
        fs::path p = fs::path(cj.get<std::string>());
        if (p.is_relative()) p = fs::path(base_dir) / p;
        cj = parse_json_text(read_file(p.string()), p.string());
      }
      if (e.contains("expected_exponent")) cj["expected_exponent"] = e["expected_exponent"];
      cfg = parse_config(cj);
      cfg.output_dir = (fs::path(root) / cfg.name).string();
      r = run(cfg);
    } catch (const ConfigError& ex) {
      r.exit_code = kConfigError;
      r.message = ex.what();
    }
    std::string verdict = r.exit_code == kConfigError    ? "CONFIG"
                          : r.exit_code == kNonConvergence ? "NOCONV"
                          : r.pass                          ? "PASS"
                                                            : "FAIL";
    bool ok = verdict == expect;
    if (!ok) {
      if (r.exit_code == kConfigError) config_error = true;
      else if (r.exit_code == kNonConvergence) nonconv = true;
      else mismatch = true;
    }
    out << std::left << std::setw(28) << (cfg.name.empty() ? where : cfg.name) << std::setw(20)
        << (cfg.kind.empty() ? "-" : cfg.kind) << std::setw(52) << anchor << std::setw(9) << verdict
        << std::setw(9) << expect << (ok ? "ok" : "MISMATCH") << "  " << r.message << "\n";
    out.flush();
  }
  if (config_error) return kConfigError;
  if (nonconv) return kNonConvergence;
  if (mismatch) return kAssertionFailure;
  return kSuccess;
}

}  // namespace fdlab::cli
