#pragma once

// Shared fixtures and independent oracles for the unit and acceptance suites.
// Nothing here calls into the code paths it is used to check.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "nmzi/optics.hpp"

namespace nmzi::testing {

inline constexpr double kPi = std::numbers::pi;

/// Uniform t_i in [0.05, 0.95], phi and chi in [-pi, pi].
class ConfigGenerator {
 public:
  explicit ConfigGenerator(std::uint64_t seed) : rng_(seed) {}

  SplitRatios ratios() {
    std::uniform_real_distribution<double> t(0.05, 0.95);
    return {SplitRatio::from_transmissivity(t(rng_)), SplitRatio::from_transmissivity(t(rng_)),
            SplitRatio::from_transmissivity(t(rng_)), SplitRatio::from_transmissivity(t(rng_))};
  }

  NmziConfig config(SignConvention conv = SignConvention::ExperimentMatched) {
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    NmziConfig c;
    c.ratios = ratios();
    c.phi = phase(rng_);
    c.chi = phase(rng_);
    c.convention = conv;
    return c;
  }

  MirrorPerturbation perturbation(double scale, bool with_imaginary) {
    std::uniform_real_distribution<double> u(-scale, scale);
    MirrorPerturbation p;
    for (Mirror m : kAllMirrors) p[m] = {u(rng_), with_imaginary ? u(rng_) : 0.0};
    return p;
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline NmziConfig equal_intensity(double phi, double chi, SignConvention conv) {
  return {equal_intensity_ratios(), phi, chi, conv};
}

/// Three-route detector power written out directly from the route amplitudes.
inline double three_route_power(const NmziConfig& c, const MirrorPerturbation& p) {
  using C = std::complex<double>;
  const C i{0.0, 1.0};
  const double t1 = c.ratios.bs1.t(), r1 = std::sqrt(1 - t1 * t1);
  const double t2 = c.ratios.bs2.t(), r2 = std::sqrt(1 - t2 * t2);
  const double t3 = c.ratios.bs3.t(), r3 = std::sqrt(1 - t3 * t3);
  const double t4 = c.ratios.bs4.t(), r4 = std::sqrt(1 - t4 * t4);
  const double a = t1 * r4, b = r1 * t2 * t3 * t4, cc = r1 * r2 * r3 * t4;
  const double s = c.convention == SignConvention::AsWritten ? -1.0 : 1.0;
  const C field = a * std::exp(i * (c.chi + p[Mirror::A])) +
                  b * std::exp(i * (p[Mirror::E] + p[Mirror::B] + p[Mirror::F])) +
                  s * cc * std::exp(i * (p[Mirror::E] + p[Mirror::C] + p[Mirror::F] + c.phi));
  return std::norm(field);
}

/// Central difference of an arbitrary scalar function.
template <typename F>
double central_difference(F&& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

}  // namespace nmzi::testing
