#include "nmzi/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nmzi/error.hpp"

namespace nmzi {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerate = 1e-12;

double inner_sign(SignConvention c) noexcept { return -c_path_sign(c); }

double checked_acos(double x) {
  if (!(std::abs(x) <= 1.0 + kFringeSlack)) {
    throw DomainError(ErrorCode::OutOfFringeRange,
                      "fringe argument " + std::to_string(x) + " outside [-1, 1]");
  }
  return std::acos(std::clamp(x, -1.0, 1.0));
}

double wrap(double x) {
  double w = std::remainder(x, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double out1_offset(const SplitRatios& q) noexcept {
  const double r1 = q.bs1.r(), t2 = q.bs2.t(), r2 = q.bs2.r(), t3 = q.bs3.t(), r3 = q.bs3.r();
  return r1 * r1 * (t2 * t2 * r3 * r3 + r2 * r2 * t3 * t3);
}

double out1_swing(const SplitRatios& q) noexcept {
  const double r1 = q.bs1.r();
  return 2.0 * r1 * r1 * q.bs2.t() * q.bs2.r() * q.bs3.t() * q.bs3.r();
}

double inner_modulus_squared(double phi, const SplitRatios& q, SignConvention conv) noexcept {
  const double r2r3 = q.bs2.r() * q.bs3.r(), t2t3 = q.bs2.t() * q.bs3.t();
  return std::max(0.0, r2r3 * r2r3 + t2t3 * t2t3 - 2.0 * inner_sign(conv) * r2r3 * t2t3 * std::cos(phi));
}

}  // namespace

double power_out1(const NmziConfig& config) noexcept {
  return out1_offset(config.ratios) +
         inner_sign(config.convention) * out1_swing(config.ratios) * std::cos(config.phi);
}

double power_out2(const NmziConfig& config) noexcept {
  const auto& q = config.ratios;
  const double t1 = q.bs1.t(), r1 = q.bs1.r(), t4 = q.bs4.t(), r4 = q.bs4.r();
  const double r2r3 = q.bs2.r() * q.bs3.r(), t2t3 = q.bs2.t() * q.bs3.t();
  const double sigma = inner_sign(config.convention);
  return t1 * t1 * t4 * t4 +
         r1 * r1 * r4 * r4 * (r2r3 * r2r3 + t2t3 * t2t3 - 2.0 * sigma * r2r3 * t2t3 * std::cos(config.phi)) +
         2.0 * t1 * t4 * r1 * r4 *
             (sigma * r2r3 * std::cos(config.chi - config.phi) - t2t3 * std::cos(config.chi));
}

AuxiliaryPowers auxiliary_powers(const NmziConfig& config) noexcept {
  return {power_out1(config), power_out2(config)};
}

double out1_fringe_max(const SplitRatios& ratios) noexcept { return out1_offset(ratios) + out1_swing(ratios); }
double out1_fringe_min(const SplitRatios& ratios) noexcept { return out1_offset(ratios) - out1_swing(ratios); }

double fringe_offset(double phi, const SplitRatios& q, SignConvention convention) noexcept {
  const double r2r3 = q.bs2.r() * q.bs3.r(), t2t3 = q.bs2.t() * q.bs3.t();
  const double sigma = inner_sign(convention);
  return wrap(-std::atan2(sigma * r2r3 * std::sin(phi), sigma * r2r3 * std::cos(phi) - t2t3));
}

double recover_phi(double p_d2, const SplitRatios& ratios, SignConvention convention) {
  const double swing = out1_swing(ratios);
  if (swing < kDegenerate) {
    throw DomainError(ErrorCode::DegenerateInnerMzi, "inner interferometer shows no fringe");
  }
  return checked_acos((p_d2 - out1_offset(ratios)) / (inner_sign(convention) * swing));
}

RecoveredPhases recover_chi(double p_d3, double phi, const SplitRatios& q, SignConvention convention) {
  const double t1 = q.bs1.t(), r1 = q.bs1.r(), t4 = q.bs4.t(), r4 = q.bs4.r();
  const double m2 = inner_modulus_squared(phi, q, convention);
  const double denom = 2.0 * r1 * t1 * r4 * t4 * std::sqrt(m2);
  if (denom < kDegenerate) {
    throw DomainError(ErrorCode::DegenerateOuterMzi, "outer interferometer shows no fringe");
  }
  const double theta = checked_acos((p_d3 - t1 * t1 * t4 * t4 - r1 * r1 * r4 * r4 * m2) / denom);
  const double beta = fringe_offset(phi, q, convention);

  auto in_range = [](double x) { return x >= -1e-12 && x <= kPi + 1e-12; };
  double chi = wrap(theta - beta);
  if (!in_range(chi)) chi = wrap(-theta - beta);
  // Neither preimage in [0, pi] (the true chi was negative): nearest end.
  return {phi, std::clamp(chi, 0.0, kPi), beta};
}

RecoveredPhases recover(const AuxiliaryPowers& powers, const SplitRatios& ratios,
                        SignConvention convention) {
  if (!(powers.p_d2 >= 0.0 && powers.p_d2 <= 1.0 && powers.p_d3 >= 0.0 && powers.p_d3 <= 1.0)) {
    throw std::invalid_argument("auxiliary powers must lie in [0, 1]");
  }
  const double phi = recover_phi(powers.p_d2, ratios, convention);
  return recover_chi(powers.p_d3, phi, ratios, convention);
}

}  // namespace nmzi
