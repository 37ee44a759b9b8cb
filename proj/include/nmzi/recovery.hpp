#pragma once

// Auxiliary detectors: D2 watches out1 (the inner interferometer's spare
// port), D3 watches out2 (BS4's spare port). Their fringes determine the
// two interferometer phases up to the arccos branch.
//
// With sigma = +1 (AsWritten) or -1 (ExperimentMatched):
//   P_D2 = r1^2 (t2^2 r3^2 + r2^2 t3^2) + 2 sigma r1^2 t2 r2 t3 r3 cos(phi)
//   P_D3 = t1^2 t4^2 + r1^2 r4^2 M^2 + 2 t1 t4 r1 r4 M cos(chi + beta)
// where M e^{-i beta} = sigma r2 r3 e^{i phi} - t2 t3 is the inner field
// heading for BS4.

#include "nmzi/optics.hpp"

namespace nmzi {

struct AuxiliaryPowers {
  double p_d2 = 0.0;
  double p_d3 = 0.0;
};

struct RecoveredPhases {
  double phi = 0.0;   // [0, pi]
  double chi = 0.0;   // [0, pi]
  double beta = 0.0;  // offset of the D3 fringe, radians in (-pi, pi]
};

/// Slack allowed outside [-1, 1] before an arccos argument is an error.
inline constexpr double kFringeSlack = 1e-9;

double power_out1(const NmziConfig& config) noexcept;
double power_out2(const NmziConfig& config) noexcept;
AuxiliaryPowers auxiliary_powers(const NmziConfig& config) noexcept;

/// Fringe extremes of P_D2 over phi.
double out1_fringe_max(const SplitRatios& ratios) noexcept;
double out1_fringe_min(const SplitRatios& ratios) noexcept;

/// Offset beta of the D3 fringe for a given inner phase.
double fringe_offset(double phi, const SplitRatios& ratios, SignConvention convention) noexcept;

/// Throws DomainError(OutOfFringeRange) or DomainError(DegenerateInnerMzi).
double recover_phi(double p_d2, const SplitRatios& ratios, SignConvention convention);

/// Principal-branch chi in [0, pi]. Of the two preimages chi = +-theta - beta
/// the +theta one is returned when it lies in [0, pi], else the -theta one;
/// if neither does, the result is clamped to the nearer end of [0, pi].
/// Throws DomainError(OutOfFringeRange) or DomainError(DegenerateOuterMzi).
RecoveredPhases recover_chi(double p_d3, double phi, const SplitRatios& ratios,
                            SignConvention convention);

RecoveredPhases recover(const AuxiliaryPowers& powers, const SplitRatios& ratios,
                        SignConvention convention);

}  // namespace nmzi
