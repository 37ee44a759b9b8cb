#include "nmzi/optics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nmzi/error.hpp"

namespace nmzi {

namespace {

constexpr Complex kI{0.0, 1.0};

Complex phase_factor(Complex phase) { return std::exp(kI * phase); }

}  // namespace

SplitRatio SplitRatio::from_transmissivity(double t) {
  if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
    throw std::invalid_argument("transmissivity must lie in [0, 1], got " + std::to_string(t));
  }
  return SplitRatio(t);
}

SplitRatio SplitRatio::from_reflectivity(double r) {
  if (!std::isfinite(r) || r < 0.0 || r > 1.0) {
    throw std::invalid_argument("reflectivity must lie in [0, 1], got " + std::to_string(r));
  }
  return SplitRatio(std::sqrt(1.0 - r * r));
}

double SplitRatio::r() const noexcept { return std::sqrt(1.0 - t_ * t_); }

SplitRatios equal_intensity_ratios() {
  const auto outer = SplitRatio::from_transmissivity(std::sqrt(1.0 / 3.0));
  const auto inner = SplitRatio::from_transmissivity(std::sqrt(0.5));
  return {outer, inner, inner, outer};
}

char mirror_name(Mirror m) noexcept {
  constexpr std::array<char, 5> names = {'A', 'B', 'C', 'E', 'F'};
  return names[index(m)];
}

std::optional<Mirror> mirror_from_name(std::string_view name) noexcept {
  if (name.size() != 1) return std::nullopt;
  for (Mirror m : kAllMirrors) {
    if (mirror_name(m) == name[0]) return m;
  }
  return std::nullopt;
}

std::string_view to_string(SignConvention c) noexcept {
  return c == SignConvention::AsWritten ? "as_written" : "experiment_matched";
}

std::optional<SignConvention> convention_from_string(std::string_view s) noexcept {
  if (s == "as_written") return SignConvention::AsWritten;
  if (s == "experiment_matched") return SignConvention::ExperimentMatched;
  return std::nullopt;
}

double c_path_sign(SignConvention c) noexcept {
  return c == SignConvention::AsWritten ? -1.0 : 1.0;
}

double MirrorPerturbation::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& p : phases_) m = std::max(m, std::abs(p));
  return m;
}

MirrorPerturbation MirrorPerturbation::scaled(double s) const noexcept {
  MirrorPerturbation out = *this;
  for (auto& p : out.phases_) p *= s;
  return out;
}

MirrorPerturbation MirrorPerturbation::single(Mirror m, Complex phase) noexcept {
  MirrorPerturbation out;
  out[m] = phase;
  return out;
}

double OutputState::total_power() const noexcept {
  return std::norm(detector) + std::norm(out1) + std::norm(out2);
}

PathAmplitudes path_amplitudes(const SplitRatios& q) noexcept {
  const double t1 = q.bs1.t(), r1 = q.bs1.r();
  const double t2 = q.bs2.t(), r2 = q.bs2.r();
  const double t3 = q.bs3.t(), r3 = q.bs3.r();
  const double t4 = q.bs4.t(), r4 = q.bs4.r();
  return {t1 * r4, r1 * t2 * t3 * t4, r1 * r2 * r3 * t4};
}

OutputState propagate(const NmziConfig& config, const MirrorPerturbation& pert) {
  const auto& q = config.ratios;

  // The c route picks up -1 relative to the b route through the two
  // reflections at BS2 and BS3; ExperimentMatched cancels it with a pi offset.
  const double lower_arm_sign = -c_path_sign(config.convention);

  // BS1
  Complex upper = q.bs1.t();
  Complex lower = kI * q.bs1.r();

  upper *= phase_factor(config.chi) * phase_factor(pert[Mirror::A]);
  // E and F both multiply the whole lower arm. E is applied at the inner
  // loop's exits instead of its entry (the loop is linear), so D sees the
  // single factor exp(i (phi_e + phi_f)) and swapping E with F is exact.
  const Complex e_factor = phase_factor(pert[Mirror::E]);

  // BS2
  Complex inner_upper = q.bs2.t() * lower;
  Complex inner_lower = kI * q.bs2.r() * lower;

  inner_upper *= phase_factor(pert[Mirror::B]);
  inner_lower *= phase_factor(pert[Mirror::C]) * phase_factor(config.phi) * lower_arm_sign;

  // BS3
  const Complex out1 = (kI * q.bs3.r() * inner_upper + q.bs3.t() * inner_lower) * e_factor;
  Complex recombined = q.bs3.t() * inner_upper + kI * q.bs3.r() * inner_lower;

  recombined *= phase_factor(pert[Mirror::E] + pert[Mirror::F]);

  // BS4
  const Complex detector = kI * q.bs4.r() * upper + q.bs4.t() * recombined;
  const Complex out2 = q.bs4.t() * upper + kI * q.bs4.r() * recombined;

  return {detector, out1, out2};
}

double detector_power_exact(const NmziConfig& config, const MirrorPerturbation& pert) {
  return std::norm(propagate(config, pert).detector);
}

Complex detector_field(const NmziConfig& config) noexcept {
  const auto [a, b, c] = path_amplitudes(config.ratios);
  const double s = c_path_sign(config.convention);
  return a * phase_factor(config.chi) + b + s * c * phase_factor(config.phi);
}

Complex mirror_route_field(const NmziConfig& config, Mirror m) noexcept {
  const auto [a, b, c] = path_amplitudes(config.ratios);
  const double s = c_path_sign(config.convention);
  switch (m) {
    case Mirror::A: return a * phase_factor(config.chi);
    case Mirror::B: return b;
    case Mirror::C: return s * c * phase_factor(config.phi);
    case Mirror::E:
    case Mirror::F: return b + s * c * phase_factor(config.phi);
  }
  return 0.0;
}

WeakTraceVector first_order_coefficients(const NmziConfig& config) noexcept {
  // P = |F|^2 and dF/dphase_k = i p_k, so dP/dRe = -2 Im(conj(F) p_k) and
  // dP/dIm = -2 Re(conj(F) p_k).
  const Complex field = std::conj(detector_field(config));
  WeakTraceVector out;
  for (Mirror m : kAllMirrors) {
    const Complex overlap = field * mirror_route_field(config, m);
    out[m] = {-2.0 * overlap.imag(), -2.0 * overlap.real()};
  }
  return out;
}

double detector_power_linearized(const NmziConfig& config, const MirrorPerturbation& pert) {
  if (pert.max_abs() > kLinearRegimeLimit) {
    throw DomainError(ErrorCode::PerturbationTooLarge,
                      "max |phase| = " + std::to_string(pert.max_abs()) + " exceeds " +
                          std::to_string(kLinearRegimeLimit));
  }
  const auto coeffs = first_order_coefficients(config);
  double linear = 0.0;
  for (Mirror m : kAllMirrors) {
    linear += coeffs[m].d_re * pert[m].real() + coeffs[m].d_im * pert[m].imag();
  }
  return detector_power_exact(config) + linear;
}

TraceCoefficient finite_difference_gradient(const NmziConfig& config, Mirror mirror,
                                            double step) {
  if (!(step > 0.0 && step <= 1e-3)) {
    throw DomainError(ErrorCode::InvalidStep, "step must lie in (0, 1e-3]");
  }
  auto central = [&](Complex direction) {
    const double up = detector_power_exact(config, MirrorPerturbation::single(mirror, step * direction));
    const double down =
        detector_power_exact(config, MirrorPerturbation::single(mirror, -step * direction));
    return (up - down) / (2.0 * step);
  };
  return {central(1.0), central(kI)};
}

}  // namespace nmzi
