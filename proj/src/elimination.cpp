#include "nmzi/elimination.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nmzi/error.hpp"

namespace nmzi {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kZeroAmplitude = 1e-14;

// c0 + sum_j coef_j * trig(m_phi * phi + m_chi * chi)
struct TrigTerm {
  double coef;
  int m_phi;
  int m_chi;
  bool is_sin;
};

struct TrigSum {
  double constant = 0.0;
  std::array<TrigTerm, 3> terms{};
  int count = 0;

  void add(double coef, int m_phi, int m_chi, bool is_sin) { terms[count++] = {coef, m_phi, m_chi, is_sin}; }

  double value(double phi, double chi) const {
    double v = constant;
    for (int j = 0; j < count; ++j) {
      const auto& t = terms[j];
      const double arg = t.m_phi * phi + t.m_chi * chi;
      v += t.coef * (t.is_sin ? std::sin(arg) : std::cos(arg));
    }
    return v;
  }

  PhaseGradient gradient(double phi, double chi) const {
    PhaseGradient g{0.0, 0.0};
    for (int j = 0; j < count; ++j) {
      const auto& t = terms[j];
      const double arg = t.m_phi * phi + t.m_chi * chi;
      const double d = t.is_sin ? t.coef * std::cos(arg) : -t.coef * std::sin(arg);
      g.d_phi += d * t.m_phi;
      g.d_chi += d * t.m_chi;
    }
    return g;
  }
};

constexpr bool kSin = true;
constexpr bool kCos = false;

TrigSum residual_form(EliminationTarget target, const PathAmplitudes& amps, SignConvention conv) {
  const auto [a, b, c] = amps;
  const double s = c_path_sign(conv);
  TrigSum f;
  switch (target) {
    case EliminationTarget::ARe:  // s c sin(phi - chi) - b sin chi
      f.add(s * c, 1, -1, kSin);
      f.add(-b, 0, 1, kSin);
      break;
    case EliminationTarget::AIm:  // -(a + b cos chi + s c cos(phi - chi))
      f.constant = -a;
      f.add(-b, 0, 1, kCos);
      f.add(-s * c, 1, -1, kCos);
      break;
    case EliminationTarget::BRe:  // a sin chi + s c sin phi
      f.add(a, 0, 1, kSin);
      f.add(s * c, 1, 0, kSin);
      break;
    case EliminationTarget::BIm:  // -(a cos chi + b + s c cos phi)
      f.constant = -b;
      f.add(-a, 0, 1, kCos);
      f.add(-s * c, 1, 0, kCos);
      break;
    case EliminationTarget::CRe:  // -s (a sin(phi - chi) + b sin phi)
      f.add(-s * a, 1, -1, kSin);
      f.add(-s * b, 1, 0, kSin);
      break;
    case EliminationTarget::CIm:  // -s (a cos(phi - chi) + b cos phi) - c
      f.constant = -c;
      f.add(-s * a, 1, -1, kCos);
      f.add(-s * b, 1, 0, kCos);
      break;
    case EliminationTarget::EFRe:  // ab sin chi - s ac sin(phi - chi)
      f.add(a * b, 0, 1, kSin);
      f.add(-s * a * c, 1, -1, kSin);
      break;
    case EliminationTarget::EFIm:  // -(ab cos chi + s ac cos(phi - chi) + b^2 + c^2 + 2 s bc cos phi)
      f.constant = -(b * b + c * c);
      f.add(-a * b, 0, 1, kCos);
      f.add(-s * a * c, 1, -1, kCos);
      f.add(-2.0 * s * b * c, 1, 0, kCos);
      break;
  }
  return f;
}

double wrap_phase(double x) {
  double w = std::remainder(x, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;  // land in (-pi, pi]
  return w;
}

double periodic_distance(double x, double y) { return std::abs(wrap_phase(x - y)); }

struct Objective {
  std::vector<TrigSum> forms;

  double max_abs(double phi, double chi) const {
    double m = 0.0;
    for (const auto& f : forms) m = std::max(m, std::abs(f.value(phi, chi)));
    return m;
  }
  double norm2(double phi, double chi) const {
    double n = 0.0;
    for (const auto& f : forms) {
      const double v = f.value(phi, chi);
      n += v * v;
    }
    return n;
  }
};

struct Point {
  double phi;
  double chi;
};

// Damped Gauss-Newton on any number of residuals in two unknowns.
Point levenberg_marquardt(const Objective& obj, Point p, int iterations, double target) {
  double lambda = 1e-6;
  double cost = obj.norm2(p.phi, p.chi);
  for (int it = 0; it < iterations && std::sqrt(cost) > target; ++it) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
    for (const auto& f : obj.forms) {
      const double r = f.value(p.phi, p.chi);
      const auto j = f.gradient(p.phi, p.chi);
      jtj00 += j.d_phi * j.d_phi;
      jtj01 += j.d_phi * j.d_chi;
      jtj11 += j.d_chi * j.d_chi;
      g0 += j.d_phi * r;
      g1 += j.d_chi * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      const double m00 = jtj00 + lambda * (1.0 + jtj00);
      const double m11 = jtj11 + lambda * (1.0 + jtj11);
      const double det = m00 * m11 - jtj01 * jtj01;
      if (det == 0.0) {
        lambda *= 4.0;
        continue;
      }
      const Point trial{p.phi - (m11 * g0 - jtj01 * g1) / det, p.chi - (m00 * g1 - jtj01 * g0) / det};
      const double trial_cost = obj.norm2(trial.phi, trial.chi);
      if (trial_cost < cost) {
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-15);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return p;
}

// Plain Newton on a square 2x2 system; nullopt on non-convergence.
std::optional<Point> newton_2d(const Objective& obj, Point p, int iterations, double tol) {
  for (int it = 0; it < iterations; ++it) {
    const double r0 = obj.forms[0].value(p.phi, p.chi);
    const double r1 = obj.forms[1].value(p.phi, p.chi);
    if (std::max(std::abs(r0), std::abs(r1)) <= tol * 1e-3) return p;
    const auto j0 = obj.forms[0].gradient(p.phi, p.chi);
    const auto j1 = obj.forms[1].gradient(p.phi, p.chi);
    const double det = j0.d_phi * j1.d_chi - j0.d_chi * j1.d_phi;
    const double scale = std::hypot(j0.d_phi, j0.d_chi) * std::hypot(j1.d_phi, j1.d_chi);
    if (std::abs(det) <= 1e-12 * scale || scale == 0.0) return std::nullopt;
    double dphi = -(j1.d_chi * r0 - j0.d_chi * r1) / det;
    double dchi = -(-j1.d_phi * r0 + j0.d_phi * r1) / det;
    const double len = std::hypot(dphi, dchi);
    if (len > 0.5) {
      dphi *= 0.5 / len;
      dchi *= 0.5 / len;
    }
    p = {p.phi + dphi, p.chi + dchi};
    if (len < 1e-16) break;
  }
  if (obj.max_abs(p.phi, p.chi) <= tol) return p;
  return std::nullopt;
}

void insert_unique(std::vector<PhaseSolution>& roots, PhaseSolution s, double distance) {
  for (const auto& r : roots) {
    if (std::hypot(periodic_distance(r.phi, s.phi), periodic_distance(r.chi, s.chi)) < distance) return;
  }
  roots.push_back(s);
}

void require_not_vacuous(std::span<const EliminationTarget> targets, const PathAmplitudes& amps) {
  for (auto t : targets) {
    if (condition_is_vacuous(t, amps)) {
      throw DomainError(ErrorCode::DegenerateAmplitude,
                        std::string(to_string(t)) + " holds identically for these ratios");
    }
  }
}

std::vector<PhaseSolution> solve_pinned(EliminationTarget target, const SplitRatios& ratios,
                                        PhasePin pin, SignConvention conv,
                                        const SolverOptions& opt) {
  const auto form = residual_form(target, path_amplitudes(ratios), conv);
  const bool free_phi = pin.which == PhasePin::Which::Chi;
  auto at = [&](double x) { return free_phi ? Point{x, pin.value} : Point{pin.value, x}; };
  auto f = [&](double x) {
    const auto p = at(x);
    return form.value(p.phi, p.chi);
  };
  auto df = [&](double x) {
    const auto p = at(x);
    const auto g = form.gradient(p.phi, p.chi);
    return free_phi ? g.d_phi : g.d_chi;
  };

  const int n = opt.scan_points;
  std::vector<double> xs(n + 1), fs(n + 1);
  double largest = 0.0;
  for (int k = 0; k <= n; ++k) {
    xs[k] = -kPi + 2.0 * kPi * k / n;
    fs[k] = f(xs[k]);
    largest = std::max(largest, std::abs(fs[k]));
  }
  if (largest <= opt.tolerance) {
    throw DomainError(ErrorCode::DegenerateAmplitude,
                      std::string(to_string(target)) + " vanishes identically on the pinned slice");
  }

  std::vector<double> found;
  for (int k = 0; k < n; ++k) {
    if (fs[k] == 0.0) found.push_back(xs[k]);
    if (fs[k] * fs[k + 1] < 0.0) {
      double lo = xs[k], hi = xs[k + 1], flo = fs[k];
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      found.push_back(std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi);
    }
  }
  if (fs[n] == 0.0) found.push_back(xs[n]);

  // Tangential roots never change sign; polish local minima of |f| instead.
  for (int k = 1; k < n; ++k) {
    const double v = std::abs(fs[k]);
    if (v <= std::abs(fs[k - 1]) && v <= std::abs(fs[k + 1]) && fs[k - 1] * fs[k + 1] > 0.0 &&
        fs[k] * fs[k - 1] > 0.0) {
      double x = xs[k];
      for (int it = 0; it < 4 * opt.newton_iterations && std::abs(f(x)) > opt.tolerance * 1e-3; ++it) {
        const double d = df(x);
        if (d == 0.0) break;
        const double step = std::clamp(-f(x) / d, -0.5, 0.5);
        x += step;
      }
      found.push_back(x);
    }
  }

  std::vector<PhaseSolution> roots;
  for (double x : found) {
    const double w = wrap_phase(x);
    const double r = std::abs(f(w));
    if (r > opt.tolerance) continue;
    const auto p = at(w);
    insert_unique(roots, {p.phi, p.chi, r}, 1e-9);
  }
  std::sort(roots.begin(), roots.end(), [&](const PhaseSolution& l, const PhaseSolution& r) {
    return free_phi ? l.phi < r.phi : l.chi < r.chi;
  });
  return roots;
}

std::vector<PhaseSolution> solve_pair(EliminationTarget t0, EliminationTarget t1,
                                      const SplitRatios& ratios, SignConvention conv,
                                      const SolverOptions& opt) {
  const auto amps = path_amplitudes(ratios);
  Objective obj{{residual_form(t0, amps, conv), residual_form(t1, amps, conv)}};

  const int g = opt.grid_points;
  const int stride = g + 1;
  auto node = [&](int k) { return -kPi + 2.0 * kPi * k / g; };
  std::vector<double> r0(stride * stride), r1(stride * stride);
  for (int i = 0; i <= g; ++i) {
    for (int j = 0; j <= g; ++j) {
      r0[i * stride + j] = obj.forms[0].value(node(i), node(j));
      r1[i * stride + j] = obj.forms[1].value(node(i), node(j));
    }
  }

  std::vector<Point> starts;
  auto brackets = [&](const std::vector<double>& r, int i, int j) {
    const double v[4] = {r[i * stride + j], r[(i + 1) * stride + j], r[i * stride + j + 1],
                         r[(i + 1) * stride + j + 1]};
    return *std::min_element(v, v + 4) <= 0.0 && *std::max_element(v, v + 4) >= 0.0;
  };
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      if (brackets(r0, i, j) && brackets(r1, i, j)) {
        starts.push_back({0.5 * (node(i) + node(i + 1)), 0.5 * (node(j) + node(j + 1))});
      }
    }
  }
  // Local minima of |r|^2 catch tangential intersections that never bracket.
  auto norm_at = [&](int i, int j) {
    i = (i + g) % g;
    j = (j + g) % g;
    return r0[i * stride + j] * r0[i * stride + j] + r1[i * stride + j] * r1[i * stride + j];
  };
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double v = norm_at(i, j);
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di || dj) && norm_at(i + di, j + dj) < v) {
            minimum = false;
            break;
          }
        }
      }
      if (minimum) starts.push_back({node(i), node(j)});
    }
  }

  std::vector<PhaseSolution> candidates;
  for (const auto& start : starts) {
    auto p = newton_2d(obj, start, opt.newton_iterations, opt.tolerance);
    if (!p) {
      // Singular Jacobian (tangential intersection): drive the residual to
      // its floor so the candidates collapse onto the actual point.
      const auto q = levenberg_marquardt(obj, start, 400, 0.0);
      if (obj.max_abs(q.phi, q.chi) <= opt.tolerance) p = q;
    }
    if (!p) continue;
    const double phi = wrap_phase(p->phi), chi = wrap_phase(p->chi);
    const double r = obj.max_abs(phi, chi);
    if (r <= opt.tolerance) candidates.push_back({phi, chi, r});
  }

  // Near a degenerate intersection the tolerance admits a small patch of
  // points; keep the best one per patch.
  std::sort(candidates.begin(), candidates.end(),
            [](const PhaseSolution& l, const PhaseSolution& r) { return l.residual_after < r.residual_after; });
  auto same_patch = [&](const PhaseSolution& x, const PhaseSolution& y) {
    const double dphi = wrap_phase(y.phi - x.phi), dchi = wrap_phase(y.chi - x.chi);
    if (std::hypot(dphi, dchi) > 1e-3) return false;
    for (int k = 1; k < 8; ++k) {
      if (obj.max_abs(x.phi + dphi * k / 8.0, x.chi + dchi * k / 8.0) > opt.tolerance) return false;
    }
    return true;
  };
  std::vector<PhaseSolution> roots;
  for (const auto& cand : candidates) {
    const bool merged = std::any_of(roots.begin(), roots.end(), [&](const PhaseSolution& r) {
      return std::hypot(periodic_distance(r.phi, cand.phi), periodic_distance(r.chi, cand.chi)) <
                 opt.dedup_distance ||
             same_patch(r, cand);
    });
    if (!merged) roots.push_back(cand);
  }
  std::sort(roots.begin(), roots.end(), [](const PhaseSolution& l, const PhaseSolution& r) {
    return l.phi != r.phi ? l.phi < r.phi : l.chi < r.chi;
  });
  return roots;
}

std::vector<EliminationTarget> unique_targets(std::span<const EliminationTarget> targets) {
  std::vector<EliminationTarget> out;
  for (auto t : targets) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

const PhaseSolution* closest_to_origin(const std::vector<PhaseSolution>& roots) {
  const PhaseSolution* best = nullptr;
  for (const auto& r : roots) {
    if (!best || std::hypot(r.phi, r.chi) < std::hypot(best->phi, best->chi)) best = &r;
  }
  return best;
}

}  // namespace

std::string_view to_string(EliminationTarget t) noexcept {
  switch (t) {
    case EliminationTarget::ARe: return "a_re";
    case EliminationTarget::AIm: return "a_im";
    case EliminationTarget::BRe: return "b_re";
    case EliminationTarget::BIm: return "b_im";
    case EliminationTarget::CRe: return "c_re";
    case EliminationTarget::CIm: return "c_im";
    case EliminationTarget::EFRe: return "ef_re";
    case EliminationTarget::EFIm: return "ef_im";
  }
  return "?";
}

std::optional<EliminationTarget> target_from_string(std::string_view s) noexcept {
  for (auto t : kAllTargets) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

Mirror target_mirror(EliminationTarget t) noexcept {
  switch (t) {
    case EliminationTarget::ARe:
    case EliminationTarget::AIm: return Mirror::A;
    case EliminationTarget::BRe:
    case EliminationTarget::BIm: return Mirror::B;
    case EliminationTarget::CRe:
    case EliminationTarget::CIm: return Mirror::C;
    default: return Mirror::E;
  }
}

bool target_is_real_channel(EliminationTarget t) noexcept {
  return t == EliminationTarget::ARe || t == EliminationTarget::BRe ||
         t == EliminationTarget::CRe || t == EliminationTarget::EFRe;
}

double amplitude_prefactor(EliminationTarget t, const PathAmplitudes& amps) noexcept {
  switch (target_mirror(t)) {
    case Mirror::A: return amps.a;
    case Mirror::B: return amps.b;
    case Mirror::C: return amps.c;
    default: return 1.0;
  }
}

bool condition_is_vacuous(EliminationTarget t, const PathAmplitudes& amps) noexcept {
  const bool a0 = amps.a <= kZeroAmplitude;
  const bool b0 = amps.b <= kZeroAmplitude;
  const bool c0 = amps.c <= kZeroAmplitude;
  switch (t) {
    case EliminationTarget::ARe: return a0 || (b0 && c0);
    case EliminationTarget::AIm: return a0;
    case EliminationTarget::BRe: return b0 || (a0 && c0);
    case EliminationTarget::BIm: return b0;
    case EliminationTarget::CRe: return c0 || (a0 && b0);
    case EliminationTarget::CIm: return c0;
    case EliminationTarget::EFRe: return a0 || (b0 && c0);
    case EliminationTarget::EFIm: return b0 && c0;
  }
  return false;
}

bool targets_dependent(EliminationTarget x, EliminationTarget y) noexcept {
  using T = EliminationTarget;
  return x == y || (x == T::ARe && y == T::EFRe) || (x == T::EFRe && y == T::ARe);
}

ConditionResidual condition_residual(EliminationTarget target, const NmziConfig& config) noexcept {
  const auto form = residual_form(target, path_amplitudes(config.ratios), config.convention);
  return {target, form.value(config.phi, config.chi)};
}

PhaseGradient condition_phase_gradient(EliminationTarget target, const NmziConfig& config) noexcept {
  const auto form = residual_form(target, path_amplitudes(config.ratios), config.convention);
  return form.gradient(config.phi, config.chi);
}

std::vector<PhaseSolution> solve_phases(std::span<const EliminationTarget> targets,
                                        const SplitRatios& ratios, std::optional<PhasePin> pin,
                                        SignConvention convention, const SolverOptions& options) {
  const auto unique = unique_targets(targets);
  if (unique.empty() || unique.size() > 2) {
    throw std::invalid_argument("solve_phases takes one or two distinct targets");
  }
  if (pin && !std::isfinite(pin->value)) {
    throw DomainError(ErrorCode::NoSolution, "pinned phase must be finite");
  }
  if (unique.size() == 1 && !pin) {
    throw DomainError(ErrorCode::NoSolution, "a single condition needs one pinned phase");
  }
  if (unique.size() == 2 && pin) {
    throw DomainError(ErrorCode::NoSolution, "two conditions leave no phase to pin");
  }
  require_not_vacuous(unique, path_amplitudes(ratios));
  if (unique.size() == 1) return solve_pinned(unique[0], ratios, *pin, convention, options);
  if (targets_dependent(unique[0], unique[1])) {
    throw DomainError(ErrorCode::DependentConditions,
                      std::string(to_string(unique[0])) + " and " +
                          std::string(to_string(unique[1])) + " share one zero set");
  }
  return solve_pair(unique[0], unique[1], ratios, convention, options);
}

Feasibility feasibility(std::span<const EliminationTarget> targets, const SplitRatios& ratios,
                        SignConvention convention, const SolverOptions& options) {
  if (targets.empty() || targets.size() > 3) {
    throw std::invalid_argument("feasibility takes one to three targets");
  }
  const auto amps = path_amplitudes(ratios);
  std::vector<EliminationTarget> active;
  for (auto t : unique_targets(targets)) {
    if (condition_is_vacuous(t, amps)) continue;
    const bool redundant = std::any_of(active.begin(), active.end(),
                                       [&](EliminationTarget u) { return targets_dependent(t, u); });
    if (!redundant) active.push_back(t);
  }
  if (active.empty()) return {true, PhaseSolution{0.0, 0.0, 0.0}};

  if (active.size() == 1) {
    std::vector<double> pins{0.0};
    for (int k = 0; k < 64; ++k) pins.push_back(-kPi + 2.0 * kPi * k / 64);
    for (double chi : pins) {
      std::vector<PhaseSolution> roots;
      try {
        roots = solve_pinned(active[0], ratios, {PhasePin::Which::Chi, chi}, convention, options);
      } catch (const DomainError&) {
        return {true, PhaseSolution{0.0, chi, 0.0}};  // the whole slice satisfies it
      }
      if (!roots.empty()) return {true, *closest_to_origin(roots)};
    }
    return {};
  }

  if (active.size() == 2) {
    const auto roots = solve_pair(active[0], active[1], ratios, convention, options);
    if (roots.empty()) return {};
    return {true, *closest_to_origin(roots)};
  }

  Objective all;
  for (auto t : active) all.forms.push_back(residual_form(t, amps, convention));
  std::vector<PhaseSolution> common;
  constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& pr : pairs) {
    for (const auto& root : solve_pair(active[pr[0]], active[pr[1]], ratios, convention, options)) {
      const auto p = levenberg_marquardt(all, {root.phi, root.chi}, 100, 1e-14);
      if (std::sqrt(all.norm2(p.phi, p.chi)) <= 1e-8) {
        const double phi = wrap_phase(p.phi), chi = wrap_phase(p.chi);
        insert_unique(common, {phi, chi, all.max_abs(phi, chi)}, options.dedup_distance);
      }
    }
  }
  if (common.empty()) return {};
  return {true, *closest_to_origin(common)};
}

std::vector<SweepRow> sweep_curve(EliminationTarget target, const SplitRatios& ratios,
                                  std::span<const double> r2_values,
                                  std::span<const double> chi_grid, SignConvention convention,
                                  const SolverOptions& options) {
  std::vector<SweepRow> rows;
  rows.reserve(r2_values.size() * chi_grid.size());
  for (double r2 : r2_values) {
    if (!(r2 > 0.0 && r2 < 1.0)) {
      throw std::invalid_argument("r2 values must lie in (0, 1)");
    }
    auto swept = ratios;
    swept.bs2 = SplitRatio::from_reflectivity(r2);
    for (double chi : chi_grid) {
      SweepRow row{r2, chi, std::nullopt};
      try {
        const auto roots = solve_phases(std::span(&target, 1), swept,
                                        PhasePin{PhasePin::Which::Chi, chi}, convention, options);
        for (const auto& root : roots) {
          if (!row.phi || std::abs(root.phi) < std::abs(*row.phi)) row.phi = root.phi;
        }
      } catch (const DomainError&) {
        // vacuous slice: leave the row absent
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace nmzi
