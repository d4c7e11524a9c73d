#include "fdlab/hausdorff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>

#include "fdlab/regularity.hpp"

namespace fdlab {

GaugeFn GaugeFn::power(double d) {
  if (!(d > 0.0)) throw InvalidArgument("gauge: power must be positive");
  return {Kind::Power, d};
}

GaugeFn GaugeFn::log_power(double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gauge: log exponent must be positive");
  return {Kind::LogPower, gamma};
}

double GaugeFn::operator()(double r) const {
  if (r <= 0.0) return 0.0;
  if (kind == Kind::Power) return std::pow(r, parameter);
  if (r >= 1.0) return kInf;  // ln_+(1/r) = 0
  return std::pow(std::log(1.0 / r), -parameter);
}

std::string GaugeFn::describe() const {
  std::ostringstream os;
  if (kind == Kind::Power) os << "r^" << parameter;
  else os << "(ln+ 1/r)^-" << parameter;
  return os.str();
}

std::string to_string(CoverMethod m) {
  switch (m) {
    case CoverMethod::SingleBall: return "single-ball";
    case CoverMethod::DyadicGrid: return "dyadic-grid";
    case CoverMethod::Greedy: return "greedy";
    case CoverMethod::Best: return "best";
  }
  return "?";
}

double cover_resolution(const SpaceTimeGrid& grid, double alpha) {
  return std::max(grid.dx(), std::pow(grid.dt(), 1.0 / (2.0 * alpha)));
}

namespace {

struct Sample {
  double t;
  Point x;
};

std::vector<Sample> samples_of(const CompactSet& set) {
  const auto& g = set.grid();
  std::vector<Sample> s;
  s.reserve(set.size());
  for (std::size_t m = 0; m < set.size(); ++m) s.push_back({g.t(set.time_index(m)), g.point(set.space_index(m))});
  return s;
}

bool inside(const ParabolicBall& b, const Sample& s, int n) { return b.contains(s.t, s.x, n); }

double cover_value(const std::vector<ParabolicBall>& balls, const GaugeFn& gauge) {
  double v = 0.0;
  for (const auto& b : balls) v += gauge(b.r);
  return v;
}

constexpr double kShrink = 1.0 - 1e-9;

// Dyadic tiles of scale rho anchored at (t = 0, x = -L/2); one ball per occupied tile.
std::vector<ParabolicBall> dyadic_cover(const SpaceTimeGrid& g, const std::vector<Sample>& pts, double alpha,
                                        double rho) {
  const int n = g.n();
  const double tau = 2.0 * std::pow(rho, 2 * alpha) * kShrink;
  const double side = 2.0 * rho * kShrink / std::sqrt(static_cast<double>(n));
  std::map<std::array<long long, 3>, bool> tiles;
  for (const auto& s : pts) {
    std::array<long long, 3> key{static_cast<long long>(std::floor(s.t / tau)), 0, 0};
    for (int a = 0; a < n; ++a) key[1 + a] = static_cast<long long>(std::floor((s.x[a] + 0.5 * g.L()) / side));
    tiles[key] = true;
  }
  std::vector<ParabolicBall> balls;
  balls.reserve(tiles.size());
  for (const auto& [key, unused] : tiles) {
    ParabolicBall b;
    b.alpha = alpha;
    b.r = rho;
    b.t0 = (key[0] + 0.5) * tau;
    for (int a = 0; a < n; ++a) b.x0[a] = (key[1 + a] + 0.5) * side - 0.5 * g.L();
    balls.push_back(b);
  }
  return balls;
}

std::vector<double> dyadic_scales(double epsilon, double floor_radius) {
  std::vector<double> s;
  for (double rho = epsilon * (1.0 - 1e-12); rho >= floor_radius; rho *= 0.5) s.push_back(rho);
  return s;
}

// Greedy weighted set cover over the given candidate balls.
std::vector<ParabolicBall> greedy_cover(const std::vector<Sample>& pts, int n,
                                        const std::vector<ParabolicBall>& candidates, const GaugeFn& gauge) {
  std::vector<std::vector<std::size_t>> members(candidates.size());
  // Points are time-sorted (CompactSet order), so each ball scans a time window.
  std::vector<double> times(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) times[i] = pts[i].t;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& b = candidates[c];
    const double tr = b.time_radius();
    auto lo = std::lower_bound(times.begin(), times.end(), b.t0 - tr);
    auto hi = std::upper_bound(times.begin(), times.end(), b.t0 + tr);
    for (auto it = lo; it != hi; ++it) {
      std::size_t i = static_cast<std::size_t>(it - times.begin());
      if (inside(b, pts[i], n)) members[c].push_back(i);
    }
  }
  std::vector<char> covered(pts.size(), 0);
  std::size_t remaining = pts.size();
  using Entry = std::pair<double, std::size_t>;  // (efficiency, candidate)
  std::priority_queue<Entry> heap;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double cost = gauge(candidates[c].r);
    if (std::isfinite(cost) && !members[c].empty()) heap.push({members[c].size() / std::max(cost, 1e-300), c});
  }
  std::vector<ParabolicBall> chosen;
  while (remaining > 0 && !heap.empty()) {
    auto [eff, c] = heap.top();
    heap.pop();
    std::size_t fresh = 0;
    for (auto i : members[c]) fresh += !covered[i];
    if (fresh == 0) continue;
    double cost = std::max(gauge(candidates[c].r), 1e-300);
    double now = fresh / cost;
    if (!heap.empty() && now < heap.top().first * (1 - 1e-12)) {
      heap.push({now, c});  // stale: re-queue with the current efficiency
      continue;
    }
    for (auto i : members[c])
      if (!covered[i]) {
        covered[i] = 1;
        --remaining;
      }
    chosen.push_back(candidates[c]);
  }
  if (remaining > 0) return {};
  return chosen;
}

}  // namespace

bool covers(const CompactSet& set, const std::vector<ParabolicBall>& balls) {
  if (set.is_empty()) return true;
  if (balls.empty()) return false;
  const int n = set.grid().n();
  auto pts = samples_of(set);
  std::vector<ParabolicBall> sorted = balls;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.t0 < b.t0; });
  double max_tr = 0.0;
  for (const auto& b : sorted) max_tr = std::max(max_tr, b.time_radius());
  for (const auto& s : pts) {
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), s.t - max_tr,
                               [](const ParabolicBall& b, double t) { return b.t0 < t; });
    bool hit = false;
    for (auto it = lo; it != sorted.end() && it->t0 <= s.t + max_tr; ++it)
      if (inside(*it, s, n)) {
        hit = true;
        break;
      }
    if (!hit) return false;
  }
  return true;
}

CoverResult hausdorff_content(const CompactSet& set, double alpha, const GaugeFn& gauge, double epsilon,
                              CoverMethod method) {
  const auto& g = set.grid();
  const int n = g.n();
  const double res = cover_resolution(g, alpha);
  if (!(epsilon > res)) {
    std::ostringstream os;
    os << "hausdorff_content: epsilon " << epsilon << " does not exceed the grid resolution " << res;
    throw InvalidArgument(os.str());
  }
  CoverResult out;
  out.set_label = set.label;
  out.epsilon = epsilon;
  out.alpha = alpha;
  out.method = method;
  if (set.is_empty()) {
    out.verified = true;
    return out;
  }
  auto pts = samples_of(set);
  if (gauge.kind == GaugeFn::Kind::Power) {
    const double vol = static_cast<double>(set.size()) * g.cell_volume() * g.dt();
    const double omega = n == 1 ? 2.0 : std::numbers::pi;
    const double excess = gauge.parameter - (n + 2 * alpha);
    const double ref = excess <= 0 ? epsilon : res;
    out.volume_bound = vol / (2.0 * omega) * std::pow(ref, excess);
  }

  struct Candidate {
    std::vector<ParabolicBall> balls;
    double value = kInf;
    CoverMethod method;
    double scale = 0;
  };
  std::vector<Candidate> found;

  if (method == CoverMethod::SingleBall || method == CoverMethod::Best) {
    double tmin = pts.front().t, tmax = pts.front().t;
    Point lo = pts.front().x, hi = pts.front().x;
    for (const auto& s : pts) {
      tmin = std::min(tmin, s.t);
      tmax = std::max(tmax, s.t);
      for (int a = 0; a < n; ++a) {
        lo[a] = std::min(lo[a], s.x[a]);
        hi[a] = std::max(hi[a], s.x[a]);
      }
    }
    ParabolicBall b;
    b.alpha = alpha;
    b.t0 = 0.5 * (tmin + tmax);
    for (int a = 0; a < n; ++a) b.x0[a] = 0.5 * (lo[a] + hi[a]);
    double dmax = 0.0;
    for (const auto& s : pts) {
      double d2 = 0.0;
      for (int a = 0; a < n; ++a) d2 += (s.x[a] - b.x0[a]) * (s.x[a] - b.x0[a]);
      dmax = std::max(dmax, std::sqrt(d2));
    }
    const double rt = std::pow(0.5 * (tmax - tmin) * (1 + 1e-9), 1.0 / (2 * alpha));
    b.r = std::max({dmax * (1 + 1e-9), rt, res});
    if (b.r < epsilon) found.push_back({{b}, gauge(b.r), CoverMethod::SingleBall, 0.0});
  }

  const auto scales = dyadic_scales(epsilon, res);
  std::vector<std::vector<ParabolicBall>> tiles;
  if (method != CoverMethod::SingleBall) {
    for (double rho : scales) tiles.push_back(dyadic_cover(g, pts, alpha, rho));
  }
  if (method == CoverMethod::DyadicGrid || method == CoverMethod::Best) {
    for (std::size_t j = 0; j < scales.size(); ++j)
      found.push_back({tiles[j], cover_value(tiles[j], gauge), CoverMethod::DyadicGrid, scales[j]});
  }
  if (method == CoverMethod::Greedy || method == CoverMethod::Best) {
    // One greedy run per top scale keeps the bound monotone along the dyadic epsilon ladder.
    for (std::size_t j0 = 0; j0 < scales.size(); ++j0) {
      std::vector<ParabolicBall> cand;
      for (std::size_t j = j0; j < scales.size(); ++j) cand.insert(cand.end(), tiles[j].begin(), tiles[j].end());
      auto cover = greedy_cover(pts, n, cand, gauge);
      if (!cover.empty()) found.push_back({cover, cover_value(cover, gauge), CoverMethod::Greedy, 0.0});
    }
  }
  if (found.empty()) {
    out.value = kInf;
    return out;
  }
  auto best = std::min_element(found.begin(), found.end(),
                               [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  out.balls = std::move(best->balls);
  out.value = best->value;
  out.method = best->method;
  out.scale = best->scale;
  out.verified = covers(set, out.balls);
  if (!out.verified) throw Error("hausdorff_content: internal cover does not cover the set");
  return out;
}

// ------------------------------------------------------------- experiments

namespace {

struct BoxOnGrid {
  SpaceTimeGrid grid;
  CompactSet set;
};

BoxOnGrid product_set_on_grid(const ProductSet& base, double s, double alpha, int n, const BallGridSpec& spec) {
  const double th = base.t_half * std::pow(s, 2 * alpha);
  const double xh = base.x_half * s;
  const double dx = xh / spec.cells_per_radius;
  const double dt = th / spec.steps_per_time_radius;
  int N = std::max(8, 2 * static_cast<int>(std::lround(0.5 * spec.L / dx)));
  int M = std::max(2, static_cast<int>(std::ceil((base.t_center + th + 2 * dt) / dt)));
  SpaceTimeGrid g(n, spec.L, N, M * dt, M);
  const double tc = base.t_center + 0.185 * g.dt();
  const Point xc{0.305 * g.dx(), n == 2 ? 0.195 * g.dx() : 0.0};
  if (xh > 0.5 * spec.L - g.dx()) throw InvalidArgument("comparison: box does not fit the grid");
  std::vector<std::size_t> pts;
  for (int k = 0; k <= g.M(); ++k) {
    if (!(std::abs(g.t(k) - tc) < th)) continue;
    for (std::size_t i = 0; i < g.slice_size(); ++i) {
      Point x = g.point(i);
      bool in = true;
      for (int a = 0; a < n; ++a) in = in && std::abs(x[a] - xc[a]) < xh;
      if (in) pts.push_back(k * g.slice_size() + i);
    }
  }
  auto K = CompactSet::from_points(g, std::move(pts));
  std::ostringstream os;
  os << "box(shrink=" << s << ")";
  K.label = os.str();
  return {g, K};
}

}  // namespace

ComparisonReport comparison_experiment(const ProductSet& base, double p, double q, double alpha, int n,
                                       double p_tilde, double q_tilde, double delta,
                                       const std::vector<double>& shrinks, const BallGridSpec& spec,
                                       const SolverConfig& cfg) {
  if (!(1.0 <= p && p < p_tilde && std::isfinite(p_tilde)))
    throw InvalidArgument("comparison: need 1 <= p < p~ < inf");
  if (!(1.0 < q && q < q_tilde && std::isfinite(q_tilde)))
    throw InvalidArgument("comparison: need 1 < q < q~ < inf");
  const double residual = strichartz_relation_residual(n, alpha, p, q, p_tilde, q_tilde);
  if (std::abs(residual) > 1e-12) {
    std::ostringstream os;
    os << "comparison: exponent relation violated (residual " << residual << ")";
    throw InvalidArgument(os.str());
  }
  if (shrinks.size() < 3) throw InvalidArgument("comparison: need at least three shrinks");
  for (std::size_t i = 1; i < shrinks.size(); ++i)
    if (!(shrinks[i] < shrinks[i - 1])) throw InvalidArgument("comparison: shrinks must be strictly decreasing");
  ComparisonReport rep;
  rep.n = n;
  rep.alpha = alpha;
  rep.p = p;
  rep.q = q;
  rep.p_tilde = p_tilde;
  rep.q_tilde = q_tilde;
  rep.delta = delta;
  const double pq = power_min(p, q);
  rep.beta = pq * (n / p + 2 * alpha / q - 2 * alpha);
  if (!(rep.beta > 0)) throw InvalidArgument("comparison: beta must be positive");
  rep.lebesgue_exponent = pq * (2 * alpha / q_tilde + n / p_tilde);
  rep.exponent_identity = std::abs(rep.lebesgue_exponent - rep.beta) <= 1e-12;

  const auto gauge = GaugeFn::power(rep.beta);
  std::vector<std::pair<double, double>> leb, cap, con;
  for (double s : shrinks) {
    auto box = product_set_on_grid(base, s, alpha, n, spec);
    SemigroupPlan plan(box.grid, alpha);
    auto br = capacity_bracket(box.set, p, q, plan, cfg);
    auto cover = hausdorff_content(box.set, alpha, gauge, delta);
    ComparisonRow row;
    row.shrink = s;
    const double la = 2 * base.t_half * std::pow(s, 2 * alpha);
    const double lb = std::pow(2 * base.x_half * s, n);
    row.lebesgue = std::pow(la, pq / q_tilde) * std::pow(lb, pq / p_tilde);
    row.capacity_lo = br.dual_value;
    row.capacity_hi = br.primal_value;
    row.content = cover.value;
    rep.rows.push_back(row);
    leb.emplace_back(s, row.lebesgue);
    cap.emplace_back(s, br.midpoint());
    con.emplace_back(s, row.content);
  }
  rep.lebesgue_slope = fit_power_law(leb).fitted_exponent;
  rep.capacity_slope = fit_power_law(cap).fitted_exponent;
  rep.content_slope = fit_power_law(con).fitted_exponent;
  auto near = [&](double slope) { return std::abs(slope - rep.beta) <= rep.tolerance * rep.beta; };
  rep.pass = rep.exponent_identity && std::abs(rep.lebesgue_slope - rep.beta) <= 1e-9 &&
             near(rep.capacity_slope) && near(rep.content_slope);
  return rep;
}

LogGaugeReport log_gauge_experiment(double p, double q, double alpha, int n, const std::vector<double>& radii,
                                    double epsilon, const BallGridSpec& spec, const SolverConfig& cfg) {
  auto regime = classify(n, alpha, p, q);
  if (regime.regime != Regime::Critical)
    throw InvalidArgument("log_gauge_experiment: exponents are not critical (" + to_string(regime.regime) + ")");
  if (radii.size() < 3) throw InvalidArgument("log_gauge_experiment: need at least three radii");
  if (!(epsilon > 0 && epsilon < 1)) throw InvalidArgument("log_gauge_experiment: epsilon must lie in (0,1)");
  LogGaugeReport rep;
  rep.n = n;
  rep.alpha = alpha;
  rep.p = p;
  rep.q = q;
  rep.epsilon = epsilon;
  rep.gamma = power_min(p, q) * (1.0 - 1.0 / q);
  const auto gauge = GaugeFn::log_power(rep.gamma);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double r = radii[i];
    if (i > 0 && !(r < radii[i - 1])) throw InvalidArgument("log_gauge_experiment: radii must decrease");
    if (!(r < epsilon)) throw InvalidArgument("log_gauge_experiment: radii must be below epsilon");
    auto rb = resolved_ball(n, alpha, r, spec);
    SemigroupPlan plan(rb.grid, alpha);
    auto K = CompactSet::from_ball(rb.grid, rb.ball);
    auto br = capacity_bracket(K, p, q, plan, cfg);
    auto cover = hausdorff_content(K, alpha, gauge, epsilon);
    LogGaugeRow row;
    row.r = r;
    row.capacity_lo = br.dual_value;
    row.capacity_hi = br.primal_value;
    row.content = cover.value;
    row.ratio = br.midpoint() / cover.value;
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(row);
    lx.push_back(std::log(std::log(1.0 / r)));
    ly.push_back(std::log(row.ratio));
  }
  rep.ratio_fit = fit_line(lx, ly);
  rep.pass = std::isfinite(rep.max_ratio) && rep.ratio_fit.slope <= rep.slope_limit;
  return rep;
}

}  // namespace fdlab
