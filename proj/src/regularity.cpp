#include "fdlab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fdlab {
namespace {

Rational normalize(__int128 num, __int128 den) {
  if (den == 0) throw InvalidArgument("rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num, b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  const __int128 lim = static_cast<__int128>(1) << 62;
  if (num > lim || num < -lim || den > lim) throw InvalidArgument("rational: overflow");
  return Rational{static_cast<long long>(num), static_cast<long long>(den)};
}

}  // namespace

Rational operator+(Rational a, Rational b) {
  return normalize(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                   static_cast<__int128>(a.den) * b.den);
}
Rational operator-(Rational a, Rational b) { return a + Rational{-b.num, b.den}; }
Rational operator*(Rational a, Rational b) {
  return normalize(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
}
Rational operator/(Rational a, Rational b) {
  return normalize(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
}
bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }

bool to_rational(double x, Rational* out, long long max_den) {
  if (!std::isfinite(x)) return false;
  // Continued-fraction convergents.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    double a = std::floor(r);
    if (std::abs(a) > 1e15) return false;
    long long ai = static_cast<long long>(a);
    long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) return false;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    double approx = static_cast<double>(h1) / static_cast<double>(k1);
    if (std::abs(approx - x) <= 1e-12 * std::max(1.0, std::abs(x))) {
      *out = normalize(h1, k1);
      return true;
    }
    double frac = r - a;
    if (frac == 0.0) return false;
    r = 1.0 / frac;
  }
  return false;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Supercritical: return "supercritical";
    case Regime::Critical: return "critical";
    case Regime::Subcritical: return "subcritical";
  }
  return "unknown";
}

RegularityRegime classify(int n, double alpha, double p, double q) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("classify: p must lie in [1, inf)");
  if (!(q > 1.0) || !std::isfinite(q)) throw InvalidArgument("classify: q must lie in (1, inf)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("classify: alpha must lie in (0,1)");
  RegularityRegime reg;
  reg.n = n;
  reg.alpha = alpha;
  reg.p = p;
  reg.q = q;
  reg.criticality = n / p + 2.0 * alpha / q - 2.0 * alpha;
  Rational ra, rp, rq;
  if (to_rational(alpha, &ra) && to_rational(p, &rp) && to_rational(q, &rq)) {
    Rational two_a = Rational{2, 1} * ra;
    reg.criticality_exact = Rational{n, 1} / rp + two_a / rq - two_a;
    reg.exact = true;
    int s = reg.criticality_exact.sign();
    reg.regime = s > 0 ? Regime::Supercritical : s < 0 ? Regime::Subcritical : Regime::Critical;
  } else {
    double c = reg.criticality;
    reg.regime = c > 1e-12 ? Regime::Supercritical : c < -1e-12 ? Regime::Subcritical : Regime::Critical;
  }
  return reg;
}

ExpIntegrability exp_integrability_check(const RegularityRegime& regime, const SemigroupPlan& plan,
                                         const Field& F, ParabolicBall ball, double threshold) {
  if (regime.regime != Regime::Critical)
    throw InvalidArgument("exp_integrability_check: regime must be critical");
  require_same_grid(plan.grid(), F.grid());
  if (!(threshold > 1.0)) throw InvalidArgument("exp_integrability_check: threshold must exceed 1");
  const auto& g = plan.grid();
  ExpIntegrability res;
  res.threshold = threshold;
  res.norm = mixed_norm(F, regime.p, regime.q);
  if (!(res.norm > 0.0) || !std::isfinite(res.norm))
    throw InvalidArgument("exp_integrability_check: F must have finite non-zero norm");
  if (!(ball.t0 > 0.0)) throw InvalidArgument("exp_integrability_check: t0 must be positive");
  ball.alpha = regime.alpha;
  ball.r = std::pow(ball.t0, 1.0 / (2.0 * regime.alpha));
  Field mask = ball_mask(g, ball);
  Field S = duhamel_all(plan, F);

  std::vector<double> v, logw;
  double wsum = 0.0;
  for (int k = 0; k <= g.M(); ++k) {
    double w = g.time_weight(k) * g.cell_volume();
    auto m = mask.at_time(k);
    auto s = S.at_time(k);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0.0) continue;
      v.push_back(std::max(s[i], 0.0) / res.norm);
      logw.push_back(std::log(w));
      wsum += w;
      res.sup_potential = std::max(res.sup_potential, s[i]);
    }
  }
  res.ball_points = v.size();
  if (v.empty()) throw InvalidArgument("exp_integrability_check: ball contains no grid points");
  const double qd = regime.q / (regime.q - 1.0);
  const double log_target = std::log(threshold);
  auto log_mean = [&](double C) {
    double mx = -kInf;
    std::vector<double> e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      e[i] = std::pow(v[i] / C, qd) + logw[i];
      mx = std::max(mx, e[i]);
    }
    double s = 0.0;
    for (double x : e) s += std::exp(x - mx);
    return mx + std::log(s) - std::log(wsum);
  };
  for (int k = -40; k <= 60; ++k) {
    double C = std::ldexp(1.0, k);
    double lm = log_mean(C);
    if (lm <= log_target) {
      res.c_star = C;
      res.c_exponent = k;
      res.mean_exp = std::exp(lm);
      return res;
    }
  }
  throw ConvergenceError("exp_integrability_check: no dyadic C up to 2^60 meets the threshold");
}

double holder_theory_exponent(const RegularityRegime& regime, Direction d) {
  double s = 2.0 * regime.alpha - regime.n / regime.p - 2.0 * regime.alpha / regime.q;
  return d == Direction::Space ? s : s / (2.0 * regime.alpha);
}

HolderFit holder_fit_from_potential(const RegularityRegime& regime, const Field& potential,
                                    int base_k, std::size_t base_index, Direction direction,
                                    double tolerance) {
  if (regime.regime != Regime::Subcritical)
    throw InvalidArgument("holder_fit: regime must be subcritical");
  const auto& g = potential.grid();
  if (base_k <= 0 || base_k > g.M() || base_index >= g.slice_size())
    throw InvalidArgument("holder_fit: base point must be interior with t0 > 0");
  HolderFit fit;
  fit.direction = direction;
  fit.theory_exponent = holder_theory_exponent(regime, direction);
  const double base = potential(base_k, base_index);
  auto axes = g.axis_indices(base_index);
  // Local modulus of continuity: the largest increment over all offsets up to h,
  // on both sides of the base point.
  double envelope = 0.0;
  if (direction == Direction::Space) {
    int next = 2;
    for (int s = 1; s * g.dx() <= g.L() / 16.0 + 1e-12; ++s) {
      for (int sign : {1, -1}) {
        int j = ((axes[0] + sign * s) % g.N() + g.N()) % g.N();
        envelope = std::max(envelope, std::abs(potential(base_k, g.flat_index(j, axes[1])) - base));
      }
      if (s == next) {
        fit.samples.emplace_back(s * g.dx(), envelope);
        next *= 2;
      }
    }
  } else {
    int next = 2;
    for (int s = 1; s * g.dt() <= g.T() / 8.0 + 1e-12; ++s) {
      bool any = false;
      for (int k : {base_k + s, base_k - s}) {
        if (k < 0 || k > g.M()) continue;
        any = true;
        envelope = std::max(envelope, std::abs(potential(k, base_index) - base));
      }
      if (!any) break;
      if (s == next) {
        fit.samples.emplace_back(s * g.dt(), envelope);
        next *= 2;
      }
    }
  }
  double largest = 0.0;
  for (auto& [h, d] : fit.samples) largest = std::max(largest, d);
  if (largest < 1e-12) {
    fit.vacuous = true;
    fit.pass = true;
    return fit;
  }
  std::vector<double> x, y;
  for (auto& [h, d] : fit.samples) {
    if (d <= 0.0) continue;
    x.push_back(std::log(h));
    y.push_back(std::log(d));
  }
  if (x.size() < 3) throw InvalidArgument("holder_fit: fewer than three usable offsets");
  auto line = fit_line(x, y);
  fit.fitted_exponent = line.slope;
  fit.r_squared = line.r_squared;
  fit.pass = fit.fitted_exponent >= fit.theory_exponent * (1.0 - tolerance);
  return fit;
}

HolderFit holder_fit(const RegularityRegime& regime, const SemigroupPlan& plan, const Field& F,
                     int base_k, std::size_t base_index, Direction direction, double tolerance) {
  require_same_grid(plan.grid(), F.grid());
  return holder_fit_from_potential(regime, duhamel_all(plan, F), base_k, base_index, direction,
                                   tolerance);
}

ContinuityResult continuity_check(const SemigroupPlan& plan, const Field& f, double t,
                                  const std::vector<double>& increments) {
  if (!(t > 0.0)) throw InvalidArgument("continuity_check: t must be positive");
  if (increments.size() < 3) throw InvalidArgument("continuity_check: need three increments");
  ContinuityResult res;
  res.t = t;
  Field base = apply_semigroup(plan, f, t);
  std::vector<double> x, y;
  for (double h : increments) {
    if (!(h > 0.0)) throw InvalidArgument("continuity_check: increments must be positive");
    Field moved = apply_semigroup(plan, f, t + h);
    double m = 0.0;
    for (std::size_t i = 0; i < base.values().size(); ++i)
      m = std::max(m, std::abs(moved.values()[i] - base.values()[i]));
    res.samples.emplace_back(h, m);
    if (m > 0.0) {
      x.push_back(std::log(h));
      y.push_back(std::log(m));
    }
  }
  res.decreasing = true;
  for (std::size_t i = 1; i < res.samples.size(); ++i)
    if (!(res.samples[i].second < res.samples[i - 1].second)) res.decreasing = false;
  if (x.size() >= 2) res.fitted_exponent = fit_line(x, y).slope;
  return res;
}


std::string to_string(SourceFamily f) {
  switch (f) {
    case SourceFamily::SmoothBump: return "smooth-bump";
    case SourceFamily::Cylinder: return "cylinder";
    case SourceFamily::CylinderSum: return "cylinder-sum";
  }
  return "?";
}

SourceFamily parse_source_family(const std::string& name) {
  if (name == "smooth-bump") return SourceFamily::SmoothBump;
  if (name == "cylinder") return SourceFamily::Cylinder;
  if (name == "cylinder-sum") return SourceFamily::CylinderSum;
  throw InvalidArgument("unknown source family '" + name + "'");
}

Field regularity_source(const SpaceTimeGrid& grid, SourceFamily family, std::uint64_t seed) {
  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(sq);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const double L = grid.L(), T = grid.T();
  const int n = grid.n();
  Field F = Field::space_time(grid);
  auto add_shape = [&](bool smooth, double tc, double wt, Point xc, double wx) {
    for (int k = 0; k <= grid.M(); ++k) {
      const double u = (grid.t(k) - tc) / wt;
      if (std::abs(u) >= 1.0) continue;
      auto slice = F.at_time(k);
      for (std::size_t i = 0; i < grid.slice_size(); ++i) {
        Point x = grid.point(i);
        double b = u * u, box = 0.0;
        for (int a = 0; a < n; ++a) {
          double v = (x[a] - xc[a]) / wx;
          b += v * v;
          box = std::max(box, std::abs(v));
        }
        if (smooth) {
          if (b < 1.0) slice[i] += std::exp(1.0 - 1.0 / (1.0 - b));
        } else if (box < 1.0) {
          slice[i] += 1.0;
        }
      }
    }
  };
  const int pieces = family == SourceFamily::CylinderSum ? 3 : 1;
  for (int j = 0; j < pieces; ++j) {
    const double tc = T * U(0.25, 0.4);
    const double wt = T * U(0.12, 0.2);
    Point xc{L * U(-1.0 / 32, 1.0 / 32), n == 2 ? L * U(-1.0 / 32, 1.0 / 32) : 0.0};
    const double wx = L * U(1.0 / 16, 1.0 / 10);
    add_shape(family == SourceFamily::SmoothBump, tc, wt, xc, wx);
  }
  return F;
}

ExpIntegrabilityStudy exp_integrability_study(const RegularityRegime& regime, const SpaceTimeGrid& base,
                                              int refinements, SourceFamily family, std::uint64_t seed,
                                              int trials, double threshold) {
  if (refinements < 1) throw InvalidArgument("exp_integrability_study: need at least one refinement");
  if (trials < 1) throw InvalidArgument("exp_integrability_study: need at least one trial");
  ExpIntegrabilityStudy st;
  st.family = family;
  st.seed = seed;
  st.trials = trials;
  st.exponents.assign(trials, {});
  st.c_star.assign(trials, {});
  for (int level = 0; level <= refinements; ++level) {
    const int N = base.N() << level, M = base.M() << level;
    SpaceTimeGrid g(base.n(), base.L(), N, base.T(), M);
    st.levels_N.push_back(N);
    SemigroupPlan plan(g, regime.alpha);
    ParabolicBall ball;
    ball.alpha = regime.alpha;
    ball.t0 = 0.5 * base.T();
    for (int t = 0; t < trials; ++t) {
      Field F = regularity_source(g, family, seed + t);
      auto r = exp_integrability_check(regime, plan, F, ball, threshold);
      st.exponents[t].push_back(r.c_exponent);
      st.c_star[t].push_back(r.c_star);
    }
  }
  for (const auto& e : st.exponents) {
    auto [mn, mx] = std::minmax_element(e.begin(), e.end());
    st.max_spread = std::max(st.max_spread, *mx - *mn);
  }
  st.stable = st.max_spread <= 1;
  return st;
}

HolderStudy holder_study(const RegularityRegime& regime, const SemigroupPlan& plan, SourceFamily family,
                         std::uint64_t seed, int trials, double tolerance) {
  if (trials < 1) throw InvalidArgument("holder_study: need at least one trial");
  const auto& g = plan.grid();
  HolderStudy st;
  st.family = family;
  st.seed = seed;
  const int base_k = g.M() / 2;
  const std::size_t base_i = g.n() == 1 ? g.flat_index(g.N() / 2) : g.flat_index(g.N() / 2, g.N() / 2);
  st.min_space = st.min_time = kInf;
  st.pass = true;
  for (int t = 0; t < trials; ++t) {
    Field S = duhamel_all(plan, regularity_source(g, family, seed + t));
    auto hs = holder_fit_from_potential(regime, S, base_k, base_i, Direction::Space, tolerance);
    auto ht = holder_fit_from_potential(regime, S, base_k, base_i, Direction::Time, tolerance);
    if (!hs.vacuous) st.min_space = std::min(st.min_space, hs.fitted_exponent);
    if (!ht.vacuous) st.min_time = std::min(st.min_time, ht.fitted_exponent);
    st.pass = st.pass && hs.pass && ht.pass;
    st.space.push_back(std::move(hs));
    st.time.push_back(std::move(ht));
  }
  return st;
}

}  // namespace fdlab
