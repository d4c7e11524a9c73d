#include "fdlab/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fdlab {

// ---------------------------------------------------------------- CompactSet

CompactSet::CompactSet(const SpaceTimeGrid& grid, std::vector<std::size_t> points)
    : grid_(grid), points_(std::move(points)) {
  std::sort(points_.begin(), points_.end());
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
  if (!points_.empty() && points_.back() >= grid_.size())
    throw InvalidArgument("compact set: point index outside the grid");
  auto first_positive = std::lower_bound(points_.begin(), points_.end(), grid_.slice_size());
  dropped_initial_ = static_cast<std::size_t>(first_positive - points_.begin());
  points_.erase(points_.begin(), first_positive);
}

CompactSet CompactSet::empty(const SpaceTimeGrid& grid) { return CompactSet(grid, {}); }

CompactSet CompactSet::from_points(const SpaceTimeGrid& grid, std::vector<std::size_t> points) {
  return CompactSet(grid, std::move(points));
}

CompactSet CompactSet::from_mask(const Field& mask) {
  if (mask.is_slice()) throw InvalidArgument("compact set: mask must be a space-time field");
  std::vector<std::size_t> pts;
  auto v = mask.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) pts.push_back(i);
  return CompactSet(mask.grid(), std::move(pts));
}

CompactSet CompactSet::from_ball(const SpaceTimeGrid& grid, const ParabolicBall& ball) {
  CompactSet s = from_mask(ball_mask(grid, ball));
  std::ostringstream os;
  os << "ball(t0=" << ball.t0 << ",x0=" << ball.x0[0];
  if (grid.n() == 2) os << "," << ball.x0[1];
  os << ",r=" << ball.r << ")";
  s.label = os.str();
  return s;
}

int CompactSet::last_time_index() const {
  return points_.empty() ? 0 : static_cast<int>(points_.back() / grid_.slice_size());
}

CompactSet::Box CompactSet::bounding_box() const {
  Box b;
  if (points_.empty()) return b;
  b.k_min = time_index(0);
  b.k_max = last_time_index();
  b.lo = {grid_.N(), grid_.N()};
  b.hi = {-1, -1};
  for (std::size_t m = 0; m < points_.size(); ++m) {
    auto a = grid_.axis_indices(space_index(m));
    for (int i = 0; i < grid_.n(); ++i) {
      b.lo[i] = std::min(b.lo[i], a[i]);
      b.hi[i] = std::max(b.hi[i], a[i]);
    }
  }
  return b;
}

CompactSet CompactSet::translated(int cells0, int cells1) const {
  const int N = grid_.N();
  auto wrap = [N](int i) { return ((i % N) + N) % N; };
  std::vector<std::size_t> pts;
  pts.reserve(points_.size());
  for (std::size_t m = 0; m < points_.size(); ++m) {
    auto a = grid_.axis_indices(space_index(m));
    std::size_t idx = grid_.n() == 1 ? grid_.flat_index(wrap(a[0] + cells0))
                                     : grid_.flat_index(wrap(a[0] + cells0), wrap(a[1] + cells1));
    pts.push_back(time_index(m) * grid_.slice_size() + idx);
  }
  CompactSet s(grid_, std::move(pts));
  s.label = label + "+shift";
  return s;
}

CompactSet CompactSet::united(const CompactSet& other) const {
  require_same_grid(grid_, other.grid_);
  std::vector<std::size_t> pts = points_;
  pts.insert(pts.end(), other.points_.begin(), other.points_.end());
  CompactSet s(grid_, std::move(pts));
  s.label = label + "|" + other.label;
  return s;
}

bool CompactSet::subset_of(const CompactSet& other) const {
  require_same_grid(grid_, other.grid_);
  return std::includes(other.points_.begin(), other.points_.end(), points_.begin(), points_.end());
}

Field CompactSet::mask() const {
  Field f = Field::space_time(grid_);
  for (auto p : points_) f.values()[p] = 1.0;
  return f;
}

double DiscreteMeasure::total_mass() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

// ------------------------------------------------------- RestrictedDuhamel

RestrictedDuhamel::RestrictedDuhamel(const SemigroupPlan& plan, const CompactSet& set)
    : plan_(&plan), set_(&set) {
  require_same_grid(plan.grid(), set.grid());
  const auto& g = plan.grid();
  k_end_ = set.last_time_index();
  variables_ = static_cast<std::size_t>(k_end_ + 1) * g.slice_size();
  weights_.resize(set.size());
  for (std::size_t m = 0; m < set.size(); ++m)
    weights_[m] = g.time_weight(set.time_index(m)) * g.cell_volume();
}

void RestrictedDuhamel::forward(std::span<const double> F, std::span<double> out) const {
  if (F.size() != variables_ || out.size() != set_->size())
    throw InvalidArgument("restricted operator: size mismatch");
  std::vector<double> full(variables_);
  duhamel_levels(*plan_, F, k_end_, full);
  const auto& pts = set_->points();
  for (std::size_t m = 0; m < pts.size(); ++m) out[m] = full[pts[m]];
}

void RestrictedDuhamel::adjoint(std::span<const double> lambda, std::span<double> out) const {
  if (lambda.size() != set_->size() || out.size() != variables_)
    throw InvalidArgument("restricted operator: size mismatch");
  std::vector<double> G(variables_, 0.0);
  const auto& pts = set_->points();
  for (std::size_t m = 0; m < pts.size(); ++m) G[pts[m]] = lambda[m] / weights_[m];
  adjoint_duhamel_levels(*plan_, G, k_end_, out);
}

double RestrictedDuhamel::inner(std::span<const double> a, std::span<const double> b) const {
  const auto& g = plan_->grid();
  const std::size_t S = g.slice_size();
  double total = 0.0;
  for (int k = 0; k <= k_end_; ++k) {
    double s = 0.0;
    for (std::size_t i = k * S; i < (k + 1) * S; ++i) s += a[i] * b[i];
    total += g.time_weight(k) * s;
  }
  return total * g.cell_volume();
}

Eigen::MatrixXd RestrictedDuhamel::materialize(std::size_t budget) const {
  const std::size_t rows = set_->size(), cols = variables_;
  if (rows * cols > budget) {
    std::ostringstream os;
    os << "materialize: " << rows << " x " << cols << " exceeds budget " << budget
       << "; use the matrix-free forward/adjoint actions";
    throw InvalidArgument(os.str());
  }
  Eigen::MatrixXd M(rows, cols);
  std::vector<double> e(cols, 0.0), out(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    e[c] = 1.0;
    forward(e, out);
    for (std::size_t r = 0; r < rows; ++r) M(r, c) = out[r];
    e[c] = 0.0;
  }
  return M;
}

Eigen::MatrixXd RestrictedDuhamel::gram() const {
  const std::size_t m = set_->size();
  Eigen::MatrixXd Q(m, m);
  std::vector<double> e(m, 0.0), g(variables_), col(m);
  for (std::size_t j = 0; j < m; ++j) {
    e[j] = 1.0;
    adjoint(e, g);
    forward(g, col);
    for (std::size_t i = 0; i < m; ++i) Q(i, j) = col[i];
    e[j] = 0.0;
  }
  return 0.5 * (Q + Q.transpose());
}

Field RestrictedDuhamel::to_field(std::span<const double> F) const {
  Field out = Field::space_time(plan_->grid());
  std::copy(F.begin(), F.end(), out.values().begin());
  return out;
}

Eigen::MatrixXd materialize_operator(const SemigroupPlan& plan, const CompactSet& set,
                                     std::size_t budget) {
  return RestrictedDuhamel(plan, set).materialize(budget);
}

// ------------------------------------------------------------ certificates

double power_min(double p, double q) { return std::min(p, q); }

double primal_bound(const RestrictedDuhamel& A, std::vector<double>& F, double p, double q) {
  std::vector<double> AF(A.constraint_count());
  A.forward(F, AF);
  double mn = *std::min_element(AF.begin(), AF.end());
  if (!(mn > 0.0)) return kInf;
  for (double& v : F) v /= mn;
  const auto& g = A.plan().grid();
  return mixed_norm_levels(g, F, A.k_end(), p, q);
}

double dual_bound(const RestrictedDuhamel& A, std::vector<double>& mu, double p, double q) {
  std::vector<double> ATmu(A.variable_count());
  A.adjoint(mu, ATmu);
  double phi = mixed_norm_levels(A.plan().grid(), ATmu, A.k_end(), conjugate(p), conjugate(q));
  if (!(phi > 0.0)) return 0.0;
  for (double& v : mu) v /= phi;
  return std::accumulate(mu.begin(), mu.end(), 0.0);
}

double certificate_value(const CompactSet& set, const Field& F, double p, double q,
                         const SemigroupPlan& plan, double* min_potential) {
  require_same_grid(plan.grid(), F.grid());
  if (set.is_empty()) return 0.0;
  RestrictedDuhamel A(plan, set);
  std::vector<double> v(F.values().begin(), F.values().begin() + A.variable_count());
  for (double x : v)
    if (x < 0.0) throw InvalidArgument("certificate_value: F must be non-negative");
  std::vector<double> AF(A.constraint_count());
  A.forward(v, AF);
  double mn = *std::min_element(AF.begin(), AF.end());
  if (min_potential) *min_potential = mn;
  if (!(mn > 0.0)) return kInf;
  // Mass after K's last level cannot help, so the full field norm is used.
  return std::pow(mixed_norm(F, p, q) / mn, power_min(p, q));
}

namespace {

// ------------------------------------------------------------------ prox

// Solves x + c x^r = u for x in [0, u] (u >= 0, c >= 0, r > 0).
double solve_monotone(double u, double c, double r) {
  if (u <= 0.0) return 0.0;
  if (c == 0.0) return u;
  if (r == 1.0) return u / (1.0 + c);
  double lo = 0.0, hi = u, x = u / (1.0 + c * std::pow(u, r - 1.0));
  for (int it = 0; it < 100; ++it) {
    double f = x + c * std::pow(x, r) - u;
    if (f > 0) hi = x; else lo = x;
    if (std::abs(f) <= 1e-15 * u) break;
    double df = 1.0 + c * r * std::pow(x, r - 1.0);
    double nx = x - f / df;
    x = (nx > lo && nx < hi && std::isfinite(nx)) ? nx : 0.5 * (lo + hi);
  }
  return x;
}

// argmin_{f >= 0} (tau/q) ||f||_p^q + 1/2 ||f - v||^2 (Euclidean l^p), in place.
void prox_slice(std::span<double> v, double tau, double p, double q) {
  for (double& x : v) x = std::max(x, 0.0);
  double vmax = *std::max_element(v.begin(), v.end());
  if (vmax == 0.0) return;
  if (p == 2.0) {
    double nu = 0.0;
    for (double x : v) nu += x * x;
    nu = std::sqrt(nu);
    double s = solve_monotone(nu, tau, q - 1.0);
    for (double& x : v) x *= s / nu;
    return;
  }
  if (p == q) {
    for (double& x : v) x = solve_monotone(x, tau, q - 1.0);
    return;
  }
  if (p == 1.0) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    std::vector<double> prefix(u.size() + 1, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) prefix[i + 1] = prefix[i] + u[i];
    auto positive_part_sum = [&](double theta) {
      auto it = std::upper_bound(u.begin(), u.end(), theta, std::greater<>());
      std::size_t m = static_cast<std::size_t>(it - u.begin());
      return prefix[m] - m * theta;
    };
    double lo = 0.0, hi = prefix.back();
    for (int it = 0; it < 200 && hi - lo > 1e-16 * prefix.back(); ++it) {
      double s = 0.5 * (lo + hi);
      if (s - positive_part_sum(tau * std::pow(s, q - 1.0)) > 0) hi = s; else lo = s;
    }
    double theta = tau * std::pow(0.5 * (lo + hi), q - 1.0);
    for (double& x : v) x = std::max(x - theta, 0.0);
    return;
  }
  // General p: the slice norm s solves s = ||f(s)||_p with f_i + tau s^(q-p) f_i^(p-1) = v_i.
  std::vector<double> u(v.begin(), v.end()), f(v.size());
  auto lp = [p](const std::vector<double>& a) {
    double m = *std::max_element(a.begin(), a.end());
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (double x : a) s += std::pow(x / m, p);
    return m * std::pow(s, 1.0 / p);
  };
  auto fill = [&](double s) {
    double c = tau * std::pow(s, q - p);
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = solve_monotone(u[i], c, p - 1.0);
  };
  // Illinois false position on g(s) = ||f(s)||_p - s, positive below the root.
  double a = 0.0, b = lp(u), ga = b, gb = 0.0;
  fill(b);
  gb = lp(f) - b;
  int side = 0;
  double s = b;
  for (int it = 0; it < 100 && b - a > 1e-14 * b; ++it) {
    s = (a * gb - b * ga) / (gb - ga);
    if (!(s > a && s < b)) s = 0.5 * (a + b);
    fill(s);
    double gs = lp(f) - s;
    if (gs == 0.0) break;
    if (gs > 0) {
      a = s;
      ga = gs;
      if (side == 1) gb *= 0.5;
      side = 1;
    } else {
      b = s;
      gb = gs;
      if (side == -1) ga *= 0.5;
      side = -1;
    }
  }
  fill(s);
  std::copy(f.begin(), f.end(), v.begin());
}

void prox(const RestrictedDuhamel& A, std::vector<double>& v, double tau, double p, double q) {
  const auto& g = A.plan().grid();
  const std::size_t S = g.slice_size();
  const double tau_eff = tau * std::pow(g.cell_volume(), q / p - 1.0);
  for (int k = 0; k <= A.k_end(); ++k)
    prox_slice(std::span<double>(v).subspan(k * S, S), tau_eff, p, q);
}

double operator_norm(const RestrictedDuhamel& A, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Start from A^T w with seeded positive weights on the set points, so the start
  // moves with the set under translation (a field-wide random start would not).
  std::vector<double> x(A.variable_count()), y(A.constraint_count());
  for (double& v : y) v = 1.0 + 0.5 * u(rng);
  A.adjoint(y, x);
  double est = 0.0;
  for (int it = 0; it < 40; ++it) {
    double nx = std::sqrt(A.inner(x, x));
    for (double& v : x) v /= nx;
    A.forward(x, y);
    A.adjoint(y, x);
    double next = std::sqrt(std::sqrt(A.inner(x, x)));
    if (it > 5 && std::abs(next - est) <= 1e-6 * next) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

double euclid(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

void project_simplex(std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

struct Tracker {
  Tracker(double p_, double q_, double pq_) : p(p_), q(q_), pq(pq_) {}
  double p, q, pq;
  double best_ub = kInf;  // norm level
  double best_lb = 0.0;   // mass level
  std::vector<double> best_F, best_mu;

  void offer_primal(std::vector<double> F, double norm) {
    if (norm < best_ub) {
      best_ub = norm;
      best_F = std::move(F);
    }
  }
  void offer_dual(std::vector<double> mu, double mass) {
    if (mass > best_lb) {
      best_lb = mass;
      best_mu = std::move(mu);
    }
  }
  double rel_gap() const {
    if (!std::isfinite(best_ub)) return kInf;
    double up = std::pow(best_ub, pq), lo = std::pow(best_lb, pq);
    return up > 0 ? (up - lo) / up : 0.0;
  }
};

CapacityResult make_result(const CompactSet& set, double p, double q, const SemigroupPlan& plan) {
  CapacityResult r;
  r.set_label = set.label;
  r.p = p;
  r.q = q;
  r.alpha = plan.alpha();
  r.n = plan.grid().n();
  r.set_size = set.size();
  return r;
}

void finish(CapacityResult& r, const Tracker& t) {
  r.primal.norm = t.best_ub;
  r.primal.F = t.best_F;
  r.dual.mass = t.best_lb;
  r.dual.mu = t.best_mu;
  r.primal_value = std::isfinite(t.best_ub) ? std::pow(t.best_ub, t.pq) : kInf;
  r.dual_value = std::pow(t.best_lb, t.pq);
  r.gap = r.primal_value - r.dual_value;
  r.relative_gap = t.rel_gap();
}

void check_exponents(double p, double q) {
  if (!(p >= 1.0 && std::isfinite(p))) throw InvalidArgument("capacity: p must lie in [1, inf)");
  if (!(q > 1.0 && std::isfinite(q))) throw InvalidArgument("capacity: q must lie in (1, inf)");
}

}  // namespace

// ------------------------------------------------------------- primal PDHG

CapacityResult primal_capacity(const CompactSet& set, double p, double q, const SemigroupPlan& plan,
                               const SolverConfig& cfg) {
  check_exponents(p, q);
  require_same_grid(plan.grid(), set.grid());
  CapacityResult res = make_result(set, p, q, plan);
  if (set.is_empty()) {
    res.sub_resolution = true;
    res.converged = true;
    return res;
  }
  RestrictedDuhamel A(plan, set);
  const std::size_t V = A.variable_count(), m = A.constraint_count();
  Tracker tr{p, q, power_min(p, q)};
  SolverReport rep;
  rep.method = "primal-dual splitting";

  // Feasible start: F0 = A^dagger 1 scaled onto the constraint.
  std::vector<double> ones(m, 1.0), F(V), AF(m), ATl(V);
  A.adjoint(ones, F);
  for (double& v : F) v = std::max(v, 0.0);
  A.forward(F, AF);
  double mn = *std::min_element(AF.begin(), AF.end());
  if (mn > 0) {
    for (double& v : F) v /= mn;
    for (double& v : AF) v /= mn;
  }
  double F0norm = std::sqrt(A.inner(F, F));
  {
    std::vector<double> Fc = F;
    tr.offer_primal(Fc, mixed_norm_levels(plan.grid(), Fc, A.k_end(), p, q));
  }
  const double Lnorm = operator_norm(A, cfg.seed);
  // Multiplier scale guess: uniform weights carrying the start value as mass.
  double cap0 = std::pow(tr.best_ub, q);
  std::vector<double> lambda(m, cap0 / m);
  double ratio = euclid(lambda) / std::max(F0norm, 1e-300);
  double tau = std::sqrt(0.95 * ratio) / Lnorm;
  double sigma = std::sqrt(0.95 / ratio) / Lnorm;
  double adapt = 0.5;

  std::vector<double> F_prev = F, AF_prev = AF, lam_new(m), F_new(V), AF_new(m), ybar(m);
  const double pd = conjugate(p), qd = conjugate(q);
  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      ybar[i] = 2.0 * AF[i] - AF_prev[i];
      lam_new[i] = std::max(0.0, lambda[i] + sigma * (1.0 - ybar[i]));
    }
    A.adjoint(lam_new, ATl);
    for (std::size_t i = 0; i < V; ++i) F_new[i] = F[i] + tau * ATl[i];
    prox(A, F_new, tau, p, q);
    A.forward(F_new, AF_new);

    if (cfg.adaptive && adapt > 1e-3) {
      std::vector<double> dF(V);
      for (std::size_t i = 0; i < V; ++i) dF[i] = (F[i] - F_new[i]) / tau;
      double pres = std::sqrt(A.inner(dF, dF));
      double dres = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double d = (lambda[i] - lam_new[i]) / sigma + (ybar[i] - AF_new[i]);
        dres += d * d;
      }
      dres = std::sqrt(dres);
      if (pres > 1.5 * dres) {
        tau /= (1.0 - adapt);
        sigma *= (1.0 - adapt);
        adapt *= 0.95;
      } else if (dres > 1.5 * pres) {
        tau *= (1.0 - adapt);
        sigma /= (1.0 - adapt);
        adapt *= 0.95;
      }
    }
    F_prev.swap(F);
    F.swap(F_new);
    AF_prev.swap(AF);
    AF.swap(AF_new);
    lambda.swap(lam_new);

    if (it % cfg.report_every == 0 || it == cfg.max_iterations) {
      double amin = *std::min_element(AF.begin(), AF.end());
      if (amin > 0) {
        std::vector<double> Fc(F);
        for (double& v : Fc) v /= amin;
        tr.offer_primal(std::move(Fc), mixed_norm_levels(plan.grid(), F, A.k_end(), p, q) / amin);
      }
      double phi = mixed_norm_levels(plan.grid(), ATl, A.k_end(), pd, qd);
      double mass = std::accumulate(lambda.begin(), lambda.end(), 0.0);
      if (phi > 0 && mass > 0) {
        std::vector<double> mu(lambda);
        for (double& v : mu) v /= phi;
        tr.offer_dual(std::move(mu), mass / phi);
        if (p > 1.0) {
          // Norming element of the multiplier potential, a second primal candidate.
          std::vector<double> J = duality_map(plan.grid(), ATl, A.k_end(), pd, qd);
          for (double& v : J) v = std::max(v, 0.0);
          double norm = primal_bound(A, J, p, q);
          if (std::isfinite(norm)) tr.offer_primal(std::move(J), norm);
        }
      }
      rep.history.push_back(tr.rel_gap());
      if (!cfg.fixed_iterations && tr.rel_gap() <= cfg.rel_gap_tol) break;
    }
  }
  rep.iterations = std::min(it, cfg.max_iterations);
  rep.converged = tr.rel_gap() <= cfg.rel_gap_tol;
  rep.bound = tr.best_ub;
  {
    double amin = *std::min_element(AF.begin(), AF.end());
    rep.residual = std::max(0.0, 1.0 - amin);
  }
  finish(res, tr);
  res.converged = rep.converged;
  res.reports.push_back(rep);
  return res;
}

// --------------------------------------------------------------- dual FISTA

CapacityResult dual_capacity(const CompactSet& set, double p, double q, const SemigroupPlan& plan,
                             const SolverConfig& cfg) {
  check_exponents(p, q);
  require_same_grid(plan.grid(), set.grid());
  CapacityResult res = make_result(set, p, q, plan);
  if (set.is_empty()) {
    res.sub_resolution = true;
    res.converged = true;
    return res;
  }
  RestrictedDuhamel A(plan, set);
  const auto& g = plan.grid();
  const std::size_t V = A.variable_count(), m = A.constraint_count();
  const double pd_exact = conjugate(p), qd = conjugate(q);
  const double pd = std::isfinite(pd_exact) ? pd_exact : cfg.p1_dual_exponent;
  Tracker tr{p, q, power_min(p, q)};
  SolverReport rep;
  rep.method = "accelerated projected descent";

  // psi(mu) = 1/2 ||A^dagger mu||^2 in the (smoothed) dual norm.
  std::vector<double> ATmu(V);
  auto psi = [&](const std::vector<double>& mu, std::vector<double>& AT) {
    A.adjoint(mu, AT);
    double phi = mixed_norm_levels(g, AT, A.k_end(), pd, qd);
    return 0.5 * phi * phi;
  };
  auto gradient = [&](const std::vector<double>& AT, double psi_val, std::vector<double>& grad) {
    std::vector<double> J = duality_map(g, AT, A.k_end(), pd, qd);
    A.forward(J, grad);
    double phi = std::sqrt(2.0 * psi_val);
    for (double& v : grad) v *= phi;
  };

  std::vector<double> mu(m, 1.0 / m), y = mu, mu_new(m), grad(m), ATy(V), ATnew(V);
  double psi_mu = psi(mu, ATmu);
  const double Lnorm = operator_norm(A, cfg.seed);
  double Lip = Lnorm * Lnorm;
  double tk = 1.0;
  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    double psi_y = psi(y, ATy);
    gradient(ATy, psi_y, grad);
    double psi_new = 0.0;
    Lip *= 0.9;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < m; ++i) mu_new[i] = y[i] - grad[i] / Lip;
      project_simplex(mu_new);
      psi_new = psi(mu_new, ATnew);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double d = mu_new[i] - y[i];
        lin += grad[i] * d;
        sq += d * d;
      }
      if (psi_new <= psi_y + lin + 0.5 * Lip * sq + 1e-15 * std::abs(psi_y)) break;
      Lip *= 2.0;
    }
    if (psi_new > psi_mu) {
      // Function-value restart.
      tk = 1.0;
      y = mu;
    } else {
      double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      for (std::size_t i = 0; i < m; ++i) y[i] = mu_new[i] + ((tk - 1.0) / tn) * (mu_new[i] - mu[i]);
      tk = tn;
      mu.swap(mu_new);
      ATmu.swap(ATnew);
      psi_mu = psi_new;
    }

    if (it % cfg.report_every == 0 || it == cfg.max_iterations || it == 1) {
      double phi = mixed_norm_levels(g, ATmu, A.k_end(), pd_exact, qd);
      if (phi > 0) {
        std::vector<double> mc(mu);
        for (double& v : mc) v /= phi;
        tr.offer_dual(std::move(mc), 1.0 / phi);
      }
      std::vector<double> J = duality_map(g, ATmu, A.k_end(), pd, qd);
      for (double& v : J) v = std::max(v, 0.0);
      double norm = primal_bound(A, J, p, q);
      if (std::isfinite(norm)) tr.offer_primal(std::move(J), norm);
      rep.history.push_back(tr.rel_gap());
      if (!cfg.fixed_iterations && tr.rel_gap() <= cfg.rel_gap_tol) break;
    }
  }
  rep.iterations = std::min(it, cfg.max_iterations);
  rep.converged = tr.rel_gap() <= cfg.rel_gap_tol;
  rep.bound = tr.best_lb;
  rep.residual = 0.0;
  finish(res, tr);
  res.converged = rep.converged;
  res.reports.push_back(rep);
  return res;
}

// ------------------------------------------------------------ Gram solver

namespace {

// min 1/2 x'Qx - 1'x subject to x >= 0: projected-gradient warm start followed
// by Lawson-Hanson style active-set steps on the free variables.
Eigen::VectorXd solve_nnqp(const Eigen::MatrixXd& Q, int* steps, double* kkt) {
  const Eigen::Index m = Q.rows();
  Eigen::VectorXd b = Eigen::VectorXd::Ones(m);
  // Largest eigenvalue by power iteration.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
  double Lmax = 0.0;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd w = Q * v;
    double nl = w.norm() / v.norm();
    v = w / w.norm();
    if (std::abs(nl - Lmax) <= 1e-8 * nl) {
      Lmax = nl;
      break;
    }
    Lmax = nl;
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m), y = x, xn(m);
  double t = 1.0;
  int fista = std::min<int>(3000, 50 + 4 * static_cast<int>(m));
  for (int it = 0; it < fista; ++it) {
    xn = (y - (Q * y - b) / Lmax).cwiseMax(0.0);
    double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    y = xn + ((t - 1) / tn) * (xn - x);
    if ((xn - x).dot(Q * (xn - x)) < 0) t = 1.0;
    x = xn;
    t = tn;
  }
  const double scale = b.cwiseAbs().maxCoeff();
  std::vector<char> free(m, 0);
  const double xmax = std::max(x.maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < m; ++i) free[i] = x(i) > 1e-9 * xmax;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!free[i]) x(i) = 0.0;

  auto kkt_residual = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd gr = Q * z - b;
    double r = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      r = std::max(r, z(i) > 0 ? std::abs(gr(i)) : std::max(0.0, -gr(i)));
    return r / scale;
  };
  int step = 0;
  for (; step < 4 * m + 20; ++step) {
    std::vector<Eigen::Index> P;
    for (Eigen::Index i = 0; i < m; ++i)
      if (free[i]) P.push_back(i);
    if (P.empty()) {
      Eigen::VectorXd gr = Q * x - b;
      Eigen::Index j;
      gr.minCoeff(&j);
      free[j] = 1;
      continue;
    }
    Eigen::MatrixXd QP(P.size(), P.size());
    for (std::size_t a = 0; a < P.size(); ++a)
      for (std::size_t c = 0; c < P.size(); ++c) QP(a, c) = Q(P[a], P[c]);
    Eigen::VectorXd z = QP.ldlt().solve(Eigen::VectorXd::Ones(P.size()));
    double alpha = 1.0;
    Eigen::Index block = -1;
    for (std::size_t a = 0; a < P.size(); ++a) {
      if (z(a) <= 0.0) {
        double xa = x(P[a]);
        double s = xa / (xa - z(a));
        if (s < alpha) {
          alpha = s;
          block = static_cast<Eigen::Index>(a);
        }
      }
    }
    for (std::size_t a = 0; a < P.size(); ++a) x(P[a]) += alpha * (z(a) - x(P[a]));
    if (block >= 0) {
      for (std::size_t a = 0; a < P.size(); ++a)
        if (x(P[a]) <= 1e-14 * xmax || static_cast<Eigen::Index>(a) == block) {
          x(P[a]) = 0.0;
          free[P[a]] = 0;
        }
      continue;
    }
    Eigen::VectorXd gr = Q * x - b;
    Eigen::Index j = -1;
    double worst = -1e-12 * scale;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!free[i] && gr(i) < worst) {
        worst = gr(i);
        j = i;
      }
    if (j < 0) break;
    free[j] = 1;
  }
  *steps = step;
  *kkt = kkt_residual(x);
  return x;
}

}  // namespace

CapacityResult gram_capacity(const CompactSet& set, const SemigroupPlan& plan,
                             const SolverConfig& cfg) {
  require_same_grid(plan.grid(), set.grid());
  CapacityResult res = make_result(set, 2.0, 2.0, plan);
  if (set.is_empty()) {
    res.sub_resolution = true;
    res.converged = true;
    return res;
  }
  if (set.size() > cfg.gram_limit)
    throw InvalidArgument("gram_capacity: set larger than the configured Gram limit");
  RestrictedDuhamel A(plan, set);
  Eigen::MatrixXd Q = A.gram();
  SolverReport rep;
  rep.method = "gram active set";
  Eigen::VectorXd lam = solve_nnqp(Q, &rep.iterations, &rep.residual);
  Tracker tr{2.0, 2.0, 2.0};
  std::vector<double> mu(lam.data(), lam.data() + lam.size());
  std::vector<double> F(A.variable_count());
  A.adjoint(mu, F);
  for (double& v : F) v = std::max(v, 0.0);
  double norm = primal_bound(A, F, 2.0, 2.0);
  tr.offer_primal(std::move(F), norm);
  double mass = dual_bound(A, mu, 2.0, 2.0);
  tr.offer_dual(std::move(mu), mass);
  rep.bound = tr.best_ub;
  rep.converged = tr.rel_gap() <= cfg.rel_gap_tol;
  rep.history.push_back(tr.rel_gap());
  finish(res, tr);
  res.converged = rep.converged;
  res.reports.push_back(rep);
  return res;
}

// ----------------------------------------------------------------- bracket

CapacityResult capacity_bracket(const CompactSet& set, double p, double q, const SemigroupPlan& plan,
                                const SolverConfig& cfg) {
  check_exponents(p, q);
  CapacityResult res = make_result(set, p, q, plan);
  if (set.is_empty()) {
    res.sub_resolution = true;
    res.converged = true;
    return res;
  }
  Tracker tr{p, q, power_min(p, q)};
  auto absorb = [&](CapacityResult&& r) {
    tr.offer_primal(std::move(r.primal.F), r.primal.norm);
    tr.offer_dual(std::move(r.dual.mu), r.dual.mass);
    for (auto& rep : r.reports) res.reports.push_back(std::move(rep));
  };
  SolverConfig sub = cfg;
  if (p == 2.0 && q == 2.0 && set.size() <= cfg.gram_limit) {
    absorb(gram_capacity(set, plan, cfg));
    // Cross-check with the first-order routes on a reduced budget.
    sub.max_iterations = std::min(cfg.max_iterations, 4 * cfg.report_every);
  }
  absorb(primal_capacity(set, p, q, plan, sub));
  absorb(dual_capacity(set, p, q, plan, sub));
  finish(res, tr);
  if (res.gap < -1e-9 * res.primal_value) {
    std::ostringstream os;
    os << "capacity_bracket: weak duality violated (primal " << res.primal_value << ", dual "
       << res.dual_value << ")";
    throw Error(os.str());
  }
  res.converged = res.relative_gap <= cfg.rel_gap_tol;
  return res;
}

}  // namespace fdlab
