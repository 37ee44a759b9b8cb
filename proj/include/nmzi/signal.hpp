#pragma once

// Vibrating-mirror experiment: every mirror is driven sinusoidally at its
// own frequency and the detector record is analysed in the frequency domain.
// A mirror's weak trace shows up as a peak at its drive frequency.

#include <cstdint>
#include <span>
#include <vector>

#include "nmzi/optics.hpp"

namespace nmzi {

struct MirrorVibration {
  double freq_hz = 1000.0;
  double amp_phase = 0.0;    // drives Re(phase), radians
  double amp_deflect = 0.0;  // drives Im(phase)

  friend bool operator==(const MirrorVibration&, const MirrorVibration&) = default;
};

/// Drive amplitudes above this are outside the linear regime and rejected.
inline constexpr double kMaxVibrationAmplitude = 0.01;

class VibrationSpec {
 public:
  MirrorVibration& operator[](Mirror m) noexcept { return mirrors_[index(m)]; }
  const MirrorVibration& operator[](Mirror m) const noexcept { return mirrors_[index(m)]; }

  /// 1.1, 1.2, 1.3, 1.4, 1.5 kHz for A, B, C, E, F with the given amplitudes.
  static VibrationSpec staggered(double amp_phase, double amp_deflect);

  friend bool operator==(const VibrationSpec&, const VibrationSpec&) = default;

 private:
  std::array<MirrorVibration, 5> mirrors_{};
};

enum class DetectorModel {
  IntensitySum,          // ordinary photodiode: sees the Re (fringe) channel
  PositionDifferential,  // quad-cell difference: sees the Im (deflection) channel only
};

enum class Window { Rectangular, Hann };

struct SimParams {
  double sample_rate_hz = 50e3;
  double duration_s = 1.0;
  Window window = Window::Hann;
  double noise_amplitude = 0.0;  // standard deviation of additive white noise
  std::uint64_t noise_seed = 0;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

struct Spectrum {
  std::vector<double> freq_hz;
  std::vector<double> amplitude;

  double bin_spacing() const noexcept { return freq_hz.size() > 1 ? freq_hz[1] - freq_hz[0] : 0.0; }
};

std::size_t sample_count(const SimParams& sim) noexcept;

/// Throws DomainError(AmplitudeTooLarge) or DomainError(UnresolvableFrequencies).
void validate(const VibrationSpec& vib, const SimParams& sim);

/// IntensitySum: exact detector power with only the Re drives applied.
/// PositionDifferential: the linear Im-channel signal sum_k d_im(k) Im(phase_k(t)).
std::vector<double> synthesize_timeseries(const NmziConfig& config, const VibrationSpec& vib,
                                          DetectorModel det, const SimParams& sim);

/// Single-sided amplitude spectrum normalised by the window sum, so a
/// bin-centred sinusoid of amplitude s peaks at s under either window.
Spectrum power_spectrum(std::span<const double> samples, const SimParams& sim);

/// Value at the bin when freq sits on one, otherwise the larger of the two
/// bins around it. Throws DomainError(FrequencyOutOfRange).
std::vector<double> peak_amplitudes(const Spectrum& spectrum, std::span<const double> freqs);

inline constexpr double kSuppressionCapDb = 200.0;

/// 20 log10(reference peak / test peak) at the mirror's drive frequency,
/// capped at kSuppressionCapDb. Throws DomainError(ZeroReferencePeak).
double suppression_db(const NmziConfig& test, const NmziConfig& reference, Mirror mirror,
                      const VibrationSpec& vib, DetectorModel det, const SimParams& sim);

}  // namespace nmzi
