#include "fdlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "fdlab/parallel.hpp"

namespace fdlab {
namespace {

bool finite_exponent(double p) { return std::isfinite(p); }

// Power sum sum |v_i|^p * weight_i computed relative to the max to avoid
// overflow for large p; returns (scale, sum) with norm = scale * sum^(1/p).
template <typename Get>
double scaled_lp(std::size_t count, Get get, double p, double weight) {
  double m = 0.0;
  for (std::size_t i = 0; i < count; ++i) m = std::max(m, std::abs(get(i)));
  if (m == 0.0) return 0.0;
  if (!finite_exponent(p)) return m;
  double s = 0.0;
  if (p == 1.0) {
    for (std::size_t i = 0; i < count; ++i) s += std::abs(get(i));
    return weight * s;
  }
  if (p == 2.0) {
    for (std::size_t i = 0; i < count; ++i) {
      double r = get(i) / m;
      s += r * r;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) s += std::pow(std::abs(get(i)) / m, p);
  }
  return m * std::pow(weight * s, 1.0 / p);
}

std::vector<double> slice_norms(const SpaceTimeGrid& grid, std::span<const double> values,
                                int k_end, double p) {
  const std::size_t S = grid.slice_size();
  std::vector<double> a(k_end + 1);
  for (int k = 0; k <= k_end; ++k) a[k] = slice_norm(grid, values.subspan(k * S, S), p);
  return a;
}

}  // namespace

double conjugate(double p) {
  if (p == 1.0) return kInf;
  if (!finite_exponent(p)) return 1.0;
  return p / (p - 1.0);
}

void validate_exponents(double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw InvalidArgument("exponents must satisfy p, q >= 1");
}

double slice_norm(const SpaceTimeGrid& grid, std::span<const double> slice, double p) {
  return scaled_lp(slice.size(), [&](std::size_t i) { return slice[i]; }, p, grid.cell_volume());
}

double mixed_norm_levels(const SpaceTimeGrid& grid, std::span<const double> values, int k_end,
                         double p, double q) {
  validate_exponents(p, q);
  if (values.size() != static_cast<std::size_t>(k_end + 1) * grid.slice_size())
    throw InvalidArgument("mixed_norm: buffer size mismatch");
  auto a = slice_norms(grid, values, k_end, p);
  double m = *std::max_element(a.begin(), a.end());
  if (m == 0.0) return 0.0;
  if (!finite_exponent(q)) return m;
  double s = 0.0;
  for (int k = 0; k <= k_end; ++k) s += grid.time_weight(k) * std::pow(a[k] / m, q);
  return m * std::pow(s, 1.0 / q);
}

double mixed_norm(const Field& F, double p, double q) {
  if (F.is_slice()) throw InvalidArgument("mixed_norm: expected a space-time field");
  return mixed_norm_levels(F.grid(), F.values(), F.grid().M(), p, q);
}

std::vector<double> duality_map(const SpaceTimeGrid& grid, std::span<const double> values,
                                int k_end, double p, double q) {
  validate_exponents(p, q);
  if (!finite_exponent(p) || !finite_exponent(q))
    throw InvalidArgument("duality_map: exponents must be finite");
  const std::size_t S = grid.slice_size();
  auto a = slice_norms(grid, values, k_end, p);
  double total = mixed_norm_levels(grid, values, k_end, p, q);
  std::vector<double> J(values.size(), 0.0);
  if (total == 0.0) return J;
  for (int k = 0; k <= k_end; ++k) {
    if (a[k] == 0.0) continue;
    // |g|^(p-1) a^(q-p) / N^(q-1), written with ratios to stay in range.
    double slice_factor = std::pow(a[k] / total, q - 1.0);
    for (std::size_t i = 0; i < S; ++i) {
      double g = values[k * S + i];
      if (g == 0.0) continue;
      double mag = p == 1.0 ? 1.0 : std::pow(std::abs(g) / a[k], p - 1.0);
      J[k * S + i] = std::copysign(mag * slice_factor, g);
    }
  }
  return J;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line: need two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return f;
}

ScalingFit fit_power_law(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 3) throw InvalidArgument("scaling fit: need at least three samples");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto [s, v] = samples[i];
    if (!(s > 0.0) || !(v > 0.0)) throw InvalidArgument("scaling fit: scales and values must be positive");
    if (i > 0 && !(s < samples[i - 1].first))
      throw InvalidArgument("scaling fit: scales must be strictly decreasing");
    x.push_back(std::log(s));
    y.push_back(std::log(v));
  }
  auto line = fit_line(x, y);
  ScalingFit fit;
  fit.samples = std::move(samples);
  fit.fitted_exponent = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  return fit;
}

Field semigroup_orbit(const SemigroupPlan& plan, const Field& f) {
  require_same_grid(plan.grid(), f.grid());
  if (!f.is_slice()) throw InvalidArgument("semigroup_orbit: expected a slice");
  const auto& g = plan.grid();
  Field out = Field::space_time(g);
  auto fft = plan.transform();
  std::vector<Complex> spec(fft->spectrum_size());
  fft->forward(f.values(), spec);
  auto E = plan.step_multiplier();
  std::copy(f.values().begin(), f.values().end(), out.at_time(0).begin());
  for (int k = 1; k <= g.M(); ++k) {
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= E[i];
    fft->inverse(spec, out.at_time(k));
  }
  return out;
}

double strichartz_q_tilde(int n, double alpha, double p, double p_tilde, bool* unrestricted) {
  if (!(p >= 1.0) || !(p_tilde >= p))
    throw InvalidArgument("strichartz R: need 1 <= p <= p~");
  bool open = 2.0 * alpha >= n;
  if (unrestricted) *unrestricted = open;
  if (!open) {
    double limit = n * p / (n - 2.0 * alpha);
    if (!(p_tilde < limit)) {
      std::ostringstream os;
      os << "strichartz R: p~ = " << p_tilde << " must be below n p/(n - 2 alpha) = " << limit;
      throw InvalidArgument(os.str());
    }
  }
  double inv = (n / (2.0 * alpha)) * (1.0 / p - 1.0 / p_tilde);
  if (inv > 1.0 + 1e-12) throw InvalidArgument("strichartz R: implied time exponent below 1");
  return inv <= 0.0 ? kInf : 1.0 / inv;
}

double strichartz_relation_residual(int n, double alpha, double p, double q, double p_tilde,
                                    double q_tilde) {
  auto inv = [](double e) { return std::isfinite(e) ? 1.0 / e : 0.0; };
  return (inv(q) - inv(q_tilde)) + (n / (2.0 * alpha)) * (inv(p) - inv(p_tilde)) - 1.0;
}

double StrichartzResult::relative_change() const {
  return std::abs(ratio_refined - ratio) / ratio;
}

SpaceTimeGrid refine_space_time(const SpaceTimeGrid& g) {
  return SpaceTimeGrid(g.n(), g.L(), 2 * g.N(), g.T(), 2 * g.M());
}

namespace {

const char* kFamilies[] = {"spike", "trig-poly", "ball"};

std::mt19937_64 trial_rng(std::uint64_t seed, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), 0x5eedu};
  return std::mt19937_64(seq);
}

// Parameters of one trial, expressed in units of L and T so the same trial is
// produced on every resolution of (and every parabolic rescaling of) a grid.
struct Trial {
  int family = 0;
  Point centre{};       // fraction of L
  double radius = 0;    // fraction of L
  double t_lo = 0, t_hi = 0, t_centre = 0;  // fractions of T
  std::vector<std::array<int, 2>> modes;
  std::vector<std::complex<double>> coeffs;
};

Trial draw_trial(std::uint64_t seed, int index, int n) {
  auto rng = trial_rng(seed, index);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Trial tr;
  tr.family = index % 3;
  for (int i = 0; i < n; ++i) tr.centre[i] = (u(rng) - 0.5) / 8.0;
  tr.radius = std::exp(std::log(1.0 / 512) + u(rng) * std::log(32.0));
  double a = 0.5 * u(rng);
  double len = std::exp(std::log(1.0 / 64) + u(rng) * std::log(32.0));
  tr.t_lo = a;
  tr.t_hi = std::min(1.0, a + len);
  tr.t_centre = 0.25 + 0.5 * u(rng);
  int terms = 1 + static_cast<int>(u(rng) * 4);
  for (int m = 0; m < terms; ++m) {
    tr.modes.push_back({static_cast<int>(u(rng) * 9), n == 2 ? static_cast<int>(u(rng) * 9) : 0});
    tr.coeffs.emplace_back(z(rng), z(rng));
  }
  return tr;
}

double spatial_profile(const Trial& tr, const SpaceTimeGrid& g, const Point& x) {
  const double L = g.L();
  if (tr.family == 1) {
    std::complex<double> s = 0;
    for (std::size_t m = 0; m < tr.modes.size(); ++m) {
      double phase = 2.0 * std::numbers::pi *
                     (tr.modes[m][0] * x[0] + (g.n() == 2 ? tr.modes[m][1] * x[1] : 0.0)) / L;
      s += tr.coeffs[m] * std::polar(1.0, phase);
    }
    return std::norm(s);
  }
  double d2 = 0;
  for (int i = 0; i < g.n(); ++i) d2 += std::pow(x[i] - tr.centre[i] * L, 2);
  return d2 < std::pow(tr.radius * L, 2) ? 1.0 : 0.0;
}

Field trial_slice(const Trial& tr, const SpaceTimeGrid& g) {
  Field f = Field::slice(g);
  if (tr.family == 0) {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < g.slice_size(); ++i) {
      Point x = g.point(i);
      double d = 0;
      for (int a = 0; a < g.n(); ++a) d += std::pow(x[a] - tr.centre[a] * g.L(), 2);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    f.values()[best] = 1.0 / g.cell_volume();
    return f;
  }
  for (std::size_t i = 0; i < g.slice_size(); ++i) f.values()[i] = spatial_profile(tr, g, g.point(i));
  return f;
}

Field trial_space_time(const Trial& tr, const SpaceTimeGrid& g, double alpha) {
  Field F = Field::space_time(g);
  if (tr.family == 2) {
    double r = tr.radius * g.L();
    ParabolicBall b{tr.t_centre * g.T(), {tr.centre[0] * g.L(), tr.centre[1] * g.L()}, r, alpha};
    double tr2 = b.time_radius();
    for (int k = 0; k <= g.M(); ++k) {
      if (!(std::abs(g.t(k) - b.t0) < tr2)) continue;
      auto s = F.at_time(k);
      for (std::size_t i = 0; i < g.slice_size(); ++i)
        if (b.contains(g.t(k), g.point(i), g.n())) s[i] = 1.0;
    }
    return F;
  }
  Field profile = trial_slice(tr, g);
  for (int k = 0; k <= g.M(); ++k) {
    double t = g.t(k) / g.T();
    if (t < tr.t_lo || t > tr.t_hi) continue;
    std::copy(profile.values().begin(), profile.values().end(), F.at_time(k).begin());
  }
  return F;
}

double pick_best(const std::vector<double>& ratios, const std::vector<int>& families,
                 std::string* best_family) {
  double best = 0;
  int fam = -1;
  for (std::size_t i = 0; i < ratios.size(); ++i)
    if (ratios[i] > best) {
      best = ratios[i];
      fam = families[i];
    }
  if (best_family) *best_family = fam >= 0 ? kFamilies[fam] : "";
  return best;
}

}  // namespace

double strichartz_ratio_R(double alpha, double p, double p_tilde, const SpaceTimeGrid& grid,
                          int trial_count, std::uint64_t seed, std::string* best_family) {
  double q_tilde = strichartz_q_tilde(grid.n(), alpha, p, p_tilde);
  if (trial_count < 1) throw InvalidArgument("strichartz R: trial_count must be positive");
  SemigroupPlan plan(grid, alpha);
  std::vector<double> ratios(trial_count, 0.0);
  std::vector<int> families(trial_count, 0);
  parallel_for(trial_count, [&](std::size_t i) {
    Trial tr = draw_trial(seed, static_cast<int>(i), grid.n());
    families[i] = tr.family;
    Field f = trial_slice(tr, grid);
    double den = slice_norm(grid, f.values(), p);
    if (den == 0.0) return;
    Field u = semigroup_orbit(plan, f);
    ratios[i] = mixed_norm(u, p_tilde, q_tilde) / den;
  });
  return pick_best(ratios, families, best_family);
}

double strichartz_ratio_S(double alpha, double p, double q, double p_tilde, double q_tilde,
                          const SpaceTimeGrid& grid, int trial_count, std::uint64_t seed,
                          std::string* best_family, int* skipped) {
  if (!(p >= 1.0 && p < p_tilde)) throw InvalidArgument("strichartz S: need 1 <= p < p~ <= inf");
  if (!(q > 1.0 && q < q_tilde && std::isfinite(q_tilde)))
    throw InvalidArgument("strichartz S: need 1 < q < q~ < inf");
  double res = strichartz_relation_residual(grid.n(), alpha, p, q, p_tilde, q_tilde);
  if (std::abs(res) > 1e-12) {
    std::ostringstream os;
    os << "strichartz S: scaling relation violated, residual " << res;
    throw InvalidArgument(os.str());
  }
  if (trial_count < 1) throw InvalidArgument("strichartz S: trial_count must be positive");
  SemigroupPlan plan(grid, alpha);
  std::vector<double> ratios(trial_count, 0.0);
  std::vector<int> families(trial_count, 0);
  std::vector<int> zero(trial_count, 0);
  parallel_for(trial_count, [&](std::size_t i) {
    Trial tr = draw_trial(seed, static_cast<int>(i), grid.n());
    families[i] = tr.family;
    Field F = trial_space_time(tr, grid, alpha);
    double den = mixed_norm(F, p, q);
    if (den == 0.0) {
      zero[i] = 1;
      return;
    }
    ratios[i] = mixed_norm(duhamel_all(plan, F), p_tilde, q_tilde) / den;
  });
  if (skipped) *skipped = static_cast<int>(std::count(zero.begin(), zero.end(), 1));
  return pick_best(ratios, families, best_family);
}

StrichartzResult strichartz_study_R(double alpha, double p, double p_tilde,
                                    const SpaceTimeGrid& grid, int trial_count,
                                    std::uint64_t seed) {
  StrichartzResult r;
  r.estimate = "R";
  r.n = grid.n();
  r.alpha = alpha;
  r.p = p;
  r.p_tilde = p_tilde;
  r.q_tilde = strichartz_q_tilde(grid.n(), alpha, p, p_tilde, &r.range_unrestricted);
  r.trials = trial_count;
  r.seed = seed;
  r.ratio = strichartz_ratio_R(alpha, p, p_tilde, grid, trial_count, seed, &r.best_family);
  r.ratio_refined =
      strichartz_ratio_R(alpha, p, p_tilde, refine_space_time(grid), trial_count, seed);
  return r;
}

StrichartzResult strichartz_study_S(double alpha, double p, double q, double p_tilde,
                                    double q_tilde, const SpaceTimeGrid& grid, int trial_count,
                                    std::uint64_t seed) {
  StrichartzResult r;
  r.estimate = "S";
  r.n = grid.n();
  r.alpha = alpha;
  r.p = p;
  r.q = q;
  r.p_tilde = p_tilde;
  r.q_tilde = q_tilde;
  r.trials = trial_count;
  r.seed = seed;
  r.ratio = strichartz_ratio_S(alpha, p, q, p_tilde, q_tilde, grid, trial_count, seed,
                               &r.best_family, &r.skipped);
  r.ratio_refined = strichartz_ratio_S(alpha, p, q, p_tilde, q_tilde, refine_space_time(grid),
                                       trial_count, seed);
  return r;
}

}  // namespace fdlab
