#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "nmzi/elimination.hpp"
#include "nmzi/error.hpp"
#include "test_support.hpp"

using namespace nmzi;
using nmzi::testing::ConfigGenerator;
using nmzi::testing::equal_intensity;
using nmzi::testing::kPi;

namespace {

constexpr auto kAsWritten = SignConvention::AsWritten;
constexpr auto kMatched = SignConvention::ExperimentMatched;
using T = EliminationTarget;

double residual(T t, const SplitRatios& r, double phi, double chi, SignConvention conv) {
  return condition_residual(t, NmziConfig{r, phi, chi, conv}).value;
}

double coefficient(T t, const NmziConfig& c) {
  const auto w = first_order_coefficients(c)[target_mirror(t)];
  return target_is_real_channel(t) ? w.d_re : w.d_im;
}

double angular_distance(double x, double y) {
  return std::abs(std::remainder(x - y, 2.0 * kPi));
}

double torus_distance(const PhaseSolution& s, double phi, double chi) {
  return std::max(angular_distance(s.phi, phi), angular_distance(s.chi, chi));
}

template <typename Fn>
ErrorCode domain_code(Fn&& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    return e.code();
  }
  FAIL("expected a DomainError");
  return ErrorCode::NoSolution;
}

// Independent 2-D root polish: Newton with a forward-difference Jacobian.
std::optional<std::array<double, 2>> oracle_newton(T x, T y, const SplitRatios& r,
                                                   SignConvention conv, double phi, double chi) {
  for (int it = 0; it < 200; ++it) {
    const double f0 = residual(x, r, phi, chi, conv), g0 = residual(y, r, phi, chi, conv);
    if (std::hypot(f0, g0) <= 1e-13) return std::array{phi, chi};
    const double h = 1e-7;
    const double fp = (residual(x, r, phi + h, chi, conv) - f0) / h;
    const double fc = (residual(x, r, phi, chi + h, conv) - f0) / h;
    const double gp = (residual(y, r, phi + h, chi, conv) - g0) / h;
    const double gc = (residual(y, r, phi, chi + h, conv) - g0) / h;
    const double det = fp * gc - fc * gp;
    if (std::abs(det) < 1e-300) return std::nullopt;
    phi -= (f0 * gc - fc * g0) / det;
    chi -= (fp * g0 - f0 * gp) / det;
  }
  return std::nullopt;
}

// Walks an n x n node grid row by row. A cell whose corners change sign in
// both residuals is polished by the oracle Newton; every root it reaches must
// have a solver root close by.
void check_grid_completeness(T x, T y, const SplitRatios& r, SignConvention conv, int n,
                             const std::vector<PhaseSolution>& roots) {
  const double step = 2.0 * kPi / n;
  auto node = [&](int k) { return -kPi + k * step; };
  std::vector<double> fx_prev(n + 1), fy_prev(n + 1), fx_cur(n + 1), fy_cur(n + 1);
  auto fill = [&](int row, std::vector<double>& fx, std::vector<double>& fy) {
    for (int j = 0; j <= n; ++j) {
      fx[j] = residual(x, r, node(j), node(row), conv);
      fy[j] = residual(y, r, node(j), node(row), conv);
    }
  };
  auto brackets = [](double p, double q, double s, double t) {
    const double lo = std::min({p, q, s, t}), hi = std::max({p, q, s, t});
    return lo <= 0.0 && hi >= 0.0;
  };
  fill(0, fx_prev, fy_prev);
  int candidates = 0, missed = 0;
  for (int i = 1; i <= n; ++i) {
    fill(i, fx_cur, fy_cur);
    for (int j = 0; j < n; ++j) {
      if (!brackets(fx_prev[j], fx_prev[j + 1], fx_cur[j], fx_cur[j + 1])) continue;
      if (!brackets(fy_prev[j], fy_prev[j + 1], fy_cur[j], fy_cur[j + 1])) continue;
      ++candidates;
      const auto root = oracle_newton(x, y, r, conv, node(j) + step / 2, node(i) - step / 2);
      if (!root) continue;
      const bool covered = std::any_of(roots.begin(), roots.end(), [&](const PhaseSolution& s) {
        return torus_distance(s, (*root)[0], (*root)[1]) <= 1e-3;
      });
      if (!covered) ++missed;
    }
    std::swap(fx_prev, fx_cur);
    std::swap(fy_prev, fy_cur);
  }
  CHECK(candidates > 0);
  CHECK(missed == 0);
}

}  // namespace

TEST_CASE("target names") {
  for (T t : kAllTargets) CHECK(target_from_string(to_string(t)) == t);
  CHECK_FALSE(target_from_string("a").has_value());
  CHECK(target_mirror(T::EFIm) == Mirror::E);
  CHECK(target_is_real_channel(T::CRe));
  CHECK_FALSE(target_is_real_channel(T::CIm));
}

TEST_CASE("residual examples") {
  ConfigGenerator gen(1);
  for (int k = 0; k < 50; ++k) {
    const auto r = gen.ratios();
    CHECK(residual(T::ARe, r, 0.0, 0.0, kAsWritten) == 0.0);
    CHECK(residual(T::ARe, r, 0.0, 0.0, kMatched) == 0.0);
  }
  const auto equal = equal_intensity_ratios();
  CHECK(std::abs(residual(T::ARe, equal, 0.22, 0.11, kMatched)) <= 1e-3);
  CHECK(std::abs(residual(T::ARe, equal, 0.22, 0.11, kMatched)) <= 1e-15);
  // Under the other sign the same point is far from the root.
  CHECK(std::abs(residual(T::ARe, equal, 0.22, 0.11, kAsWritten)) > 0.05);
}

TEST_CASE("residuals are the scaled trace coefficients") {
  ConfigGenerator gen(2);
  int compared = 0;
  for (auto conv : {kAsWritten, kMatched}) {
    for (int k = 0; k < 1000; ++k) {
      const auto c = gen.config(conv);
      const auto amps = path_amplitudes(c);
      for (T t : kAllTargets) {
        const double pre = amplitude_prefactor(t, amps);
        if (pre <= 1e-6) continue;
        ++compared;
        CHECK(std::abs(condition_residual(t, c).value - coefficient(t, c) / (2.0 * pre)) <= 1e-12);
      }
    }
  }
  CHECK(compared == 16000);
}

TEST_CASE("phase gradient of the residual matches finite differences") {
  ConfigGenerator gen(3);
  for (int k = 0; k < 300; ++k) {
    const auto c = gen.config(k % 2 ? kAsWritten : kMatched);
    for (T t : kAllTargets) {
      const auto g = condition_phase_gradient(t, c);
      const double h = 1e-6;
      auto at = [&](double dp, double dc) {
        return condition_residual(t, NmziConfig{c.ratios, c.phi + dp, c.chi + dc, c.convention}).value;
      };
      CHECK(g.d_phi == doctest::Approx((at(h, 0) - at(-h, 0)) / (2 * h)).epsilon(1e-7));
      CHECK(g.d_chi == doctest::Approx((at(0, h) - at(0, -h)) / (2 * h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("mirror A root pinned at chi = 0.11") {
  const std::array targets{T::ARe};
  const auto roots = solve_phases(targets, equal_intensity_ratios(),
                                  PhasePin{PhasePin::Which::Chi, 0.11}, kMatched);
  // sin(chi) = sin(phi - chi) has the root phi = 2 chi.
  const auto it = std::find_if(roots.begin(), roots.end(),
                               [](const PhaseSolution& s) { return std::abs(s.phi - 0.22) <= 1e-9; });
  REQUIRE(it != roots.end());
  CHECK(std::abs(it->phi - 0.223) <= 0.01);
  CHECK(it->chi == 0.11);
  CHECK(std::is_sorted(roots.begin(), roots.end(),
                       [](const PhaseSolution& l, const PhaseSolution& r) { return l.phi < r.phi; }));
}

TEST_CASE("pinned chi = 0 always admits phi = 0") {
  ConfigGenerator gen(4);
  const std::array targets{T::ARe};
  for (int k = 0; k < 30; ++k) {
    for (auto conv : {kAsWritten, kMatched}) {
      const auto roots =
          solve_phases(targets, gen.ratios(), PhasePin{PhasePin::Which::Chi, 0.0}, conv);
      CHECK(std::any_of(roots.begin(), roots.end(),
                        [](const PhaseSolution& s) { return std::abs(s.phi) <= 1e-9; }));
    }
  }
}

TEST_CASE("two-condition solve at equal intensity, confirmed by a brute-force grid") {
  const std::array targets{T::ARe, T::BRe};
  const auto equal = equal_intensity_ratios();
  const auto roots = solve_phases(targets, equal, std::nullopt, kMatched);
  REQUIRE_FALSE(roots.empty());
  for (const auto& s : roots) {
    CHECK(s.residual_after <= 1e-10);
    CHECK(std::abs(residual(T::ARe, equal, s.phi, s.chi, kMatched)) <= 1e-10);
    CHECK(std::abs(residual(T::BRe, equal, s.phi, s.chi, kMatched)) <= 1e-10);
  }
  check_grid_completeness(T::ARe, T::BRe, equal, kMatched, 6284, roots);
}

TEST_CASE("two-condition solves on random ratios, confirmed by a coarser grid") {
  ConfigGenerator gen(5);
  const std::array<std::array<T, 2>, 4> pairs{{{T::ARe, T::CRe}, {T::BIm, T::CRe},
                                               {T::EFRe, T::EFIm}, {T::AIm, T::BRe}}};
  for (const auto& pair : pairs) {
    const auto r = gen.ratios();
    const auto conv = gen.uniform(0, 1) < 0.5 ? kAsWritten : kMatched;
    const auto roots = solve_phases(pair, r, std::nullopt, conv);
    for (const auto& s : roots) {
      CHECK(std::abs(residual(pair[0], r, s.phi, s.chi, conv)) <= 1e-10);
      CHECK(std::abs(residual(pair[1], r, s.phi, s.chi, conv)) <= 1e-10);
    }
    if (!roots.empty()) check_grid_completeness(pair[0], pair[1], r, conv, 1500, roots);
  }
}

TEST_CASE("every returned root re-evaluates below tolerance") {
  ConfigGenerator gen(6);
  for (int k = 0; k < 60; ++k) {
    const auto r = gen.ratios();
    const auto conv = k % 2 ? kAsWritten : kMatched;
    const T x = kAllTargets[k % 8], y = kAllTargets[(k * 3 + 1) % 8];
    const std::array one{x};
    const auto pin = PhasePin{k % 3 ? PhasePin::Which::Chi : PhasePin::Which::Phi,
                              gen.uniform(-kPi, kPi)};
    for (const auto& s : solve_phases(one, r, pin, conv)) {
      CHECK(std::abs(residual(x, r, s.phi, s.chi, conv)) <= 1e-10);
    }
    if (x == y || targets_dependent(x, y)) continue;
    const std::array two{x, y};
    for (const auto& s : solve_phases(two, r, std::nullopt, conv)) {
      CHECK(std::abs(residual(x, r, s.phi, s.chi, conv)) <= 1e-10);
      CHECK(std::abs(residual(y, r, s.phi, s.chi, conv)) <= 1e-10);
    }
  }
}

TEST_CASE("1-D scan oracle: each sign change brackets exactly one root") {
  ConfigGenerator gen(7);
  constexpr int kScan = 2000;
  int brackets = 0;
  for (int k = 0; k < 200; ++k) {
    const auto r = gen.ratios();
    const auto conv = k % 2 ? kAsWritten : kMatched;
    const T t = kAllTargets[k % 8];
    const bool pin_chi = k % 4 < 2;
    const double pinned = gen.uniform(-kPi, kPi);
    const std::array one{t};
    const auto roots = solve_phases(
        one, r, PhasePin{pin_chi ? PhasePin::Which::Chi : PhasePin::Which::Phi, pinned}, conv);
    auto f = [&](double x) {
      return pin_chi ? residual(t, r, x, pinned, conv) : residual(t, r, pinned, x, conv);
    };
    auto free_of = [&](const PhaseSolution& s) { return pin_chi ? s.phi : s.chi; };
    double x0 = -kPi, f0 = f(x0);
    for (int i = 1; i <= kScan; ++i) {
      const double x1 = -kPi + 2.0 * kPi * i / kScan, f1 = f(x1);
      if (f0 * f1 < 0.0) {
        ++brackets;
        const auto inside = std::count_if(roots.begin(), roots.end(), [&](const PhaseSolution& s) {
          return free_of(s) >= x0 - 1e-12 && free_of(s) <= x1 + 1e-12;
        });
        CHECK(inside == 1);
      }
      x0 = x1;
      f0 = f1;
    }
  }
  CHECK(brackets > 200);
}

TEST_CASE("solver preconditions") {
  const auto equal = equal_intensity_ratios();
  const std::array one{T::ARe};
  const std::array two{T::ARe, T::BIm};
  const std::array three{T::ARe, T::BIm, T::CRe};
  const std::array<T, 0> none{};
  const PhasePin pin{PhasePin::Which::Chi, 0.1};

  CHECK_THROWS_AS(solve_phases(none, equal, std::nullopt, kMatched), std::invalid_argument);
  CHECK_THROWS_AS(solve_phases(three, equal, std::nullopt, kMatched), std::invalid_argument);
  CHECK(domain_code([&] { solve_phases(one, equal, std::nullopt, kMatched); }) ==
        ErrorCode::NoSolution);
  CHECK(domain_code([&] { solve_phases(two, equal, pin, kMatched); }) == ErrorCode::NoSolution);
  CHECK(domain_code([&] {
          solve_phases(one, equal, PhasePin{PhasePin::Which::Phi, std::nan("")}, kMatched);
        }) == ErrorCode::NoSolution);

  const std::array dependent{T::ARe, T::EFRe};
  CHECK(domain_code([&] { solve_phases(dependent, equal, std::nullopt, kMatched); }) ==
        ErrorCode::DependentConditions);

  SplitRatios dark_inner = equal;
  dark_inner.bs1 = SplitRatio::from_transmissivity(1.0);
  CHECK(domain_code([&] { solve_phases(one, dark_inner, pin, kMatched); }) ==
        ErrorCode::DegenerateAmplitude);
  SplitRatios dark_outer = equal;
  dark_outer.bs1 = SplitRatio::from_transmissivity(0.0);
  const std::array a_im{T::AIm};
  CHECK(domain_code([&] { solve_phases(a_im, dark_outer, pin, kMatched); }) ==
        ErrorCode::DegenerateAmplitude);
}

TEST_CASE("an empty root list is a valid answer") {
  // a > b + c: the A trace cannot be cancelled in the Im channel.
  SplitRatios r{SplitRatio::from_transmissivity(0.9), SplitRatio::from_transmissivity(0.7),
                SplitRatio::from_transmissivity(0.7), SplitRatio::from_transmissivity(0.5)};
  const auto amps = path_amplitudes(r);
  REQUIRE(amps.a > amps.b + amps.c);
  const std::array pair{T::ARe, T::AIm};
  CHECK(solve_phases(pair, r, std::nullopt, kMatched).empty());
}

TEST_CASE("feasibility") {
  const auto equal = equal_intensity_ratios();
  SUBCASE("single condition has the origin as witness") {
    ConfigGenerator gen(8);
    for (int k = 0; k < 20; ++k) {
      const std::array one{T::ARe};
      const auto f = feasibility(one, gen.ratios(), k % 2 ? kAsWritten : kMatched);
      REQUIRE(f.feasible);
      REQUIRE(f.witness.has_value());
      CHECK(std::abs(f.witness->phi) <= 1e-9);
      CHECK(std::abs(f.witness->chi) <= 1e-9);
    }
  }
  SUBCASE("both channels of one mirror force a dark detector") {
    ConfigGenerator gen(9);
    int feasible = 0;
    for (int k = 0; k < 60; ++k) {
      const auto r = k == 0 ? equal : gen.ratios();
      const auto conv = k % 2 ? kAsWritten : kMatched;
      for (auto pair : {std::array{T::ARe, T::AIm}, std::array{T::BRe, T::BIm},
                        std::array{T::CRe, T::CIm}}) {
        const auto f = feasibility(pair, r, conv);
        if (!f.feasible) continue;
        ++feasible;
        const NmziConfig c{r, f.witness->phi, f.witness->chi, conv};
        CHECK(std::norm(detector_field(c)) <= 1e-12);
        CHECK(detector_power_exact(c) <= 1e-12);
      }
    }
    CHECK(feasible >= 10);
  }
  SUBCASE("three conditions at equal intensity") {
    const std::array three{T::ARe, T::BRe, T::CRe};
    const auto f = feasibility(three, equal, kMatched);
    // Grid oracle: phi = chi = 0 zeroes all three, so a common root exists.
    double best = 1e300;
    for (int i = 0; i < 2000; ++i) {
      for (int j = 0; j < 2000; j += 1) {
        const double phi = -kPi + 2 * kPi * i / 2000, chi = -kPi + 2 * kPi * j / 2000;
        double norm = 0.0;
        for (T t : three) norm += std::pow(residual(t, equal, phi, chi, kMatched), 2);
        best = std::min(best, norm);
      }
    }
    REQUIRE(best <= 1e-16);
    REQUIRE(f.feasible);
    for (T t : three) CHECK(std::abs(residual(t, equal, f.witness->phi, f.witness->chi, kMatched)) <= 1e-8);
  }
  SUBCASE("an infeasible pair makes the triple infeasible") {
    SplitRatios r{SplitRatio::from_transmissivity(0.9), SplitRatio::from_transmissivity(0.7),
                  SplitRatio::from_transmissivity(0.7), SplitRatio::from_transmissivity(0.5)};
    const std::array three{T::ARe, T::AIm, T::BRe};
    const auto f = feasibility(three, r, kMatched);
    CHECK_FALSE(f.feasible);
    CHECK_FALSE(f.witness.has_value());
  }
}

TEST_CASE("sweep at b = c follows phi = 2 chi") {
  const std::array r2{std::sqrt(0.5)};
  std::vector<double> chis;
  for (int k = 0; k <= 20; ++k) chis.push_back(0.01 * k);
  const auto rows = sweep_curve(T::ARe, equal_intensity_ratios(), r2, chis, kMatched);
  REQUIRE(rows.size() == chis.size());
  for (const auto& row : rows) {
    REQUIRE(row.phi.has_value());
    CHECK(std::abs(*row.phi - 2.0 * row.chi) <= 1e-9);
  }
}

TEST_CASE("sweep origin slope is 1 + b/c") {
  const std::array r2s{0.5, 0.6, 0.7, 0.8};
  const std::array chis{0.0, 1e-4};
  const auto rows = sweep_curve(T::ARe, equal_intensity_ratios(), r2s, chis, kMatched);
  REQUIRE(rows.size() == 8);
  for (std::size_t k = 0; k < r2s.size(); ++k) {
    const auto& origin = rows[2 * k];
    const auto& next = rows[2 * k + 1];
    CHECK(origin.r2 == r2s[k]);
    REQUIRE(origin.phi.has_value());
    REQUIRE(next.phi.has_value());
    CHECK(*origin.phi == doctest::Approx(0.0).epsilon(1e-12));
    auto r = equal_intensity_ratios();
    r.bs2 = SplitRatio::from_reflectivity(r2s[k]);
    const auto amps = path_amplitudes(r);
    const double slope = (*next.phi - *origin.phi) / (next.chi - origin.chi);
    CHECK(std::abs(slope - (1.0 + amps.b / amps.c)) <= 1e-3);
  }
}

TEST_CASE("sweep marks rows without a root") {
  // b/c ~ 10: c sin(phi - chi) cannot reach b sin(chi) once sin(chi) > c/b.
  const std::array r2{0.1};
  const std::array chis{0.0, 1.0};
  const auto rows = sweep_curve(T::ARe, equal_intensity_ratios(), r2, chis, kMatched);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].phi.has_value());
  CHECK_FALSE(rows[1].phi.has_value());
  const std::array bad{1.0};
  CHECK_THROWS_AS(sweep_curve(T::ARe, equal_intensity_ratios(), bad, chis, kMatched),
                  std::invalid_argument);
}
