#pragma once

// Field propagation through the nested Mach-Zehnder interferometer.
//
// Topology: BS1 splits the input into the outer upper arm U (mirror A) and
// the outer lower arm L (mirror E). BS2 splits L into the inner arms u
// (mirror B) and l (mirror C); BS3 recombines them into out1 and L'. L'
// passes mirror F and meets U at BS4, whose ports are the main detector D
// and out2. The outer phase chi sits on U, the inner phase phi on l.
//
// Every beam splitter acts as [[t, i r], [i r, t]] on amplitudes.

#include <array>
#include <complex>
#include <optional>
#include <string_view>

namespace nmzi {

using Complex = std::complex<double>;

/// Amplitude splitting ratio. Only t is stored; r = sqrt(1 - t^2).
class SplitRatio {
 public:
  constexpr SplitRatio() = default;

  /// Throws std::invalid_argument unless t is finite and in [0, 1].
  static SplitRatio from_transmissivity(double t);
  static SplitRatio from_reflectivity(double r);

  double t() const noexcept { return t_; }
  double r() const noexcept;

  friend bool operator==(const SplitRatio&, const SplitRatio&) = default;

 private:
  explicit constexpr SplitRatio(double t) : t_(t) {}
  double t_ = 1.0;
};

struct SplitRatios {
  SplitRatio bs1;
  SplitRatio bs2;
  SplitRatio bs3;
  SplitRatio bs4;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

/// t1 = t4 = sqrt(1/3), t2 = t3 = sqrt(1/2): all three routes to D carry
/// equal intensity.
SplitRatios equal_intensity_ratios();

enum class Mirror { A, B, C, E, F };

inline constexpr std::array<Mirror, 5> kAllMirrors = {Mirror::A, Mirror::B, Mirror::C,
                                                      Mirror::E, Mirror::F};

constexpr std::size_t index(Mirror m) noexcept { return static_cast<std::size_t>(m); }
char mirror_name(Mirror m) noexcept;
std::optional<Mirror> mirror_from_name(std::string_view name) noexcept;

/// Relative sign of the lower-inner (c) route at the main detector.
///   AsWritten:         D ~ a e^{i chi} + b - c e^{i phi}
///   ExperimentMatched: D ~ a e^{i chi} + b + c e^{i phi}
enum class SignConvention { AsWritten, ExperimentMatched };

std::string_view to_string(SignConvention c) noexcept;
std::optional<SignConvention> convention_from_string(std::string_view s) noexcept;

/// +1 or -1, the sign multiplying c in the detector field.
double c_path_sign(SignConvention c) noexcept;

struct NmziConfig {
  SplitRatios ratios;
  double phi = 0.0;  // inner phase, radians, unwrapped
  double chi = 0.0;  // outer phase, radians, unwrapped
  SignConvention convention = SignConvention::ExperimentMatched;

  friend bool operator==(const NmziConfig&, const NmziConfig&) = default;
};

/// Complex phase per mirror. Re = optical path phase (rad), Im = intensity
/// proxy; the mirror multiplies its beam by exp(i * phase).
class MirrorPerturbation {
 public:
  Complex& operator[](Mirror m) noexcept { return phases_[index(m)]; }
  const Complex& operator[](Mirror m) const noexcept { return phases_[index(m)]; }

  double max_abs() const noexcept;
  MirrorPerturbation scaled(double s) const noexcept;

  static MirrorPerturbation single(Mirror m, Complex phase) noexcept;

 private:
  std::array<Complex, 5> phases_{};
};

/// Linearized operations refuse perturbations beyond this magnitude.
inline constexpr double kLinearRegimeLimit = 0.1;

struct PathAmplitudes {
  double a = 0.0;  // outer upper route: t1 r4
  double b = 0.0;  // inner upper route: r1 t2 t3 t4
  double c = 0.0;  // inner lower route: r1 r2 r3 t4
};

struct OutputState {
  Complex detector;
  Complex out1;
  Complex out2;

  double total_power() const noexcept;
};

struct TraceCoefficient {
  double d_re = 0.0;  // dP_D / dRe(phase)
  double d_im = 0.0;  // dP_D / dIm(phase)
};

/// First-order sensitivity of the detector power to each mirror, evaluated at
/// zero perturbation.
class WeakTraceVector {
 public:
  TraceCoefficient& operator[](Mirror m) noexcept { return coeffs_[index(m)]; }
  const TraceCoefficient& operator[](Mirror m) const noexcept { return coeffs_[index(m)]; }

 private:
  std::array<TraceCoefficient, 5> coeffs_{};
};

PathAmplitudes path_amplitudes(const SplitRatios& ratios) noexcept;
inline PathAmplitudes path_amplitudes(const NmziConfig& config) noexcept {
  return path_amplitudes(config.ratios);
}

OutputState propagate(const NmziConfig& config, const MirrorPerturbation& pert = {});

double detector_power_exact(const NmziConfig& config, const MirrorPerturbation& pert = {});

/// Zeroth-order power plus the WeakTraceVector applied to the perturbation.
/// Throws DomainError(PerturbationTooLarge) beyond kLinearRegimeLimit.
double detector_power_linearized(const NmziConfig& config, const MirrorPerturbation& pert);

/// Unperturbed detector field with the global factor i removed:
/// a e^{i chi} + b + s c e^{i phi}.
Complex detector_field(const NmziConfig& config) noexcept;

/// Share of detector_field contributed by the routes mirror m touches.
Complex mirror_route_field(const NmziConfig& config, Mirror m) noexcept;

WeakTraceVector first_order_coefficients(const NmziConfig& config) noexcept;

/// Central differences of detector_power_exact in Re and Im of the mirror's
/// phase. Throws DomainError(InvalidStep) unless 0 < step <= 1e-3.
TraceCoefficient finite_difference_gradient(const NmziConfig& config, Mirror mirror, double step);

}  // namespace nmzi
