#pragma once

// Weak-trace elimination conditions and solvers over the phases (phi, chi).
//
// Each target zeroes one channel of one mirror's trace. The residual of a
// target is the matching WeakTraceVector component divided by twice its
// amplitude prefactor (a for mirror A, b for B, c for C, 1 for the joint E/F
// rows), which leaves a trigonometric polynomial in phi and chi.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nmzi/optics.hpp"

namespace nmzi {

enum class EliminationTarget { ARe, AIm, BRe, BIm, CRe, CIm, EFRe, EFIm };

inline constexpr std::array<EliminationTarget, 8> kAllTargets = {
    EliminationTarget::ARe, EliminationTarget::AIm, EliminationTarget::BRe,
    EliminationTarget::BIm, EliminationTarget::CRe, EliminationTarget::CIm,
    EliminationTarget::EFRe, EliminationTarget::EFIm};

std::string_view to_string(EliminationTarget t) noexcept;
std::optional<EliminationTarget> target_from_string(std::string_view s) noexcept;

/// Mirror whose coefficient the target reads (E for the joint E/F rows).
Mirror target_mirror(EliminationTarget t) noexcept;
bool target_is_real_channel(EliminationTarget t) noexcept;

/// Amplitude the coefficient is divided by (twice this value).
double amplitude_prefactor(EliminationTarget t, const PathAmplitudes& amps) noexcept;

/// True when the condition holds identically in (phi, chi) for these ratios.
bool condition_is_vacuous(EliminationTarget t, const PathAmplitudes& amps) noexcept;

/// True when two targets describe the same zero set for every ratio choice
/// (A_RE and EF_RE: a global phase leaves P_D unchanged, so the real-channel
/// coefficients of A and E sum to zero).
bool targets_dependent(EliminationTarget x, EliminationTarget y) noexcept;

struct ConditionResidual {
  EliminationTarget target;
  double value;
};

ConditionResidual condition_residual(EliminationTarget target, const NmziConfig& config) noexcept;

struct PhaseGradient {
  double d_phi;
  double d_chi;
};

PhaseGradient condition_phase_gradient(EliminationTarget target, const NmziConfig& config) noexcept;

struct PhaseSolution {
  double phi;
  double chi;
  double residual_after;  // max |residual| over the solved targets
};

struct PhasePin {
  enum class Which { Phi, Chi };
  Which which;
  double value;
};

struct SolverOptions {
  int scan_points = 4096;     // 1-D scan intervals over [-pi, pi]
  int grid_points = 360;      // 2-D grid cells per axis
  int newton_iterations = 50;
  double tolerance = 1e-10;
  double dedup_distance = 1e-6;
};

/// One target with a pinned phase: 1-D scan plus bisection, every root in
/// [-pi, pi] sorted ascending. Two targets, no pin: 2-D grid plus Newton.
/// An empty result is a successful "no root". Throws DomainError(NoSolution)
/// for an invalid pin combination, DegenerateAmplitude when a condition is
/// vacuous, DependentConditions for a dependent pair; std::invalid_argument
/// for a target count outside {1, 2}.
std::vector<PhaseSolution> solve_phases(std::span<const EliminationTarget> targets,
                                        const SplitRatios& ratios, std::optional<PhasePin> pin,
                                        SignConvention convention,
                                        const SolverOptions& options = {});

struct Feasibility {
  bool feasible = false;
  std::optional<PhaseSolution> witness;
};

/// Up to three targets. With three targets and two free phases a common root
/// must reach combined residual norm 1e-8.
Feasibility feasibility(std::span<const EliminationTarget> targets, const SplitRatios& ratios,
                        SignConvention convention, const SolverOptions& options = {});

struct SweepRow {
  double r2;
  double chi;
  std::optional<double> phi;  // smallest-|phi| root; empty when none exists
};

/// Replaces BS2's reflectivity by each r2 and solves pinned at each chi.
std::vector<SweepRow> sweep_curve(EliminationTarget target, const SplitRatios& ratios,
                                  std::span<const double> r2_values,
                                  std::span<const double> chi_grid, SignConvention convention,
                                  const SolverOptions& options = {});

}  // namespace nmzi
