#include "nmzi/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "nmzi/error.hpp"

namespace nmzi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kZeroPeak = 1e-12;

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

std::vector<double> window_weights(Window w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  if (w == Window::Hann) {
    // periodic Hann: a bin-centred tone leaks into exactly its two neighbours
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
    }
  }
  return out;
}

}  // namespace

VibrationSpec VibrationSpec::staggered(double amp_phase, double amp_deflect) {
  VibrationSpec v;
  double freq = 1100.0;
  for (Mirror m : kAllMirrors) {
    v[m] = {freq, amp_phase, amp_deflect};
    freq += 100.0;
  }
  return v;
}

std::size_t sample_count(const SimParams& sim) noexcept {
  const double n = std::round(sim.sample_rate_hz * sim.duration_s);
  return n > 0.0 && std::isfinite(n) ? static_cast<std::size_t>(n) : 0;
}

void validate(const VibrationSpec& vib, const SimParams& sim) {
  auto unresolvable = [](const std::string& why) {
    throw DomainError(ErrorCode::UnresolvableFrequencies, why);
  };
  for (Mirror m : kAllMirrors) {
    const auto& v = vib[m];
    if (!(std::abs(v.amp_phase) <= kMaxVibrationAmplitude) ||
        !(std::abs(v.amp_deflect) <= kMaxVibrationAmplitude)) {
      throw DomainError(ErrorCode::AmplitudeTooLarge,
                        std::string("mirror ") + mirror_name(m) + " drive exceeds " +
                            std::to_string(kMaxVibrationAmplitude));
    }
    if (!(v.freq_hz > 0.0) || !std::isfinite(v.freq_hz)) {
      unresolvable(std::string("mirror ") + mirror_name(m) + " frequency must be positive");
    }
  }
  if (!(sim.sample_rate_hz > 0.0) || !(sim.duration_s > 0.0) || !std::isfinite(sim.sample_rate_hz) ||
      !std::isfinite(sim.duration_s)) {
    unresolvable("sample rate and duration must be positive");
  }
  if (sample_count(sim) < 2) unresolvable("fewer than two samples");
  if (!(sim.noise_amplitude >= 0.0)) throw std::invalid_argument("noise amplitude must be >= 0");

  double max_freq = 0.0;
  double min_spacing = std::numeric_limits<double>::infinity();
  for (Mirror m : kAllMirrors) {
    max_freq = std::max(max_freq, vib[m].freq_hz);
    for (Mirror n : kAllMirrors) {
      if (index(n) > index(m)) min_spacing = std::min(min_spacing, std::abs(vib[m].freq_hz - vib[n].freq_hz));
    }
  }
  if (sim.sample_rate_hz < 10.0 * max_freq) {
    unresolvable("sample rate must be at least ten times the highest drive frequency");
  }
  const double resolution = 1.0 / sim.duration_s;
  if (min_spacing < 2.0 * resolution || sim.duration_s * min_spacing < 10.0) {
    unresolvable("drive frequencies closer than the record can resolve (spacing " +
                 std::to_string(min_spacing) + " Hz, duration " + std::to_string(sim.duration_s) +
                 " s)");
  }
}

std::vector<double> synthesize_timeseries(const NmziConfig& config, const VibrationSpec& vib,
                                          DetectorModel det, const SimParams& sim) {
  validate(vib, sim);
  const std::size_t n = sample_count(sim);
  std::vector<double> out(n);

  const auto coeffs = first_order_coefficients(config);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sim.sample_rate_hz;
    if (det == DetectorModel::IntensitySum) {
      MirrorPerturbation pert;
      for (Mirror m : kAllMirrors) pert[m] = vib[m].amp_phase * std::sin(kTwoPi * vib[m].freq_hz * t);
      out[i] = detector_power_exact(config, pert);
    } else {
      double s = 0.0;
      for (Mirror m : kAllMirrors) {
        s += coeffs[m].d_im * vib[m].amp_deflect * std::sin(kTwoPi * vib[m].freq_hz * t);
      }
      out[i] = s;
    }
  }

  if (sim.noise_amplitude > 0.0) {
    std::mt19937_64 rng(sim.noise_seed);
    std::normal_distribution<double> noise(0.0, sim.noise_amplitude);
    for (auto& x : out) x += noise(rng);
  }
  return out;
}

Spectrum power_spectrum(std::span<const double> samples, const SimParams& sim) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("power_spectrum needs at least two samples");
  if (!(sim.sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");

  const auto w = window_weights(sim.window, n);
  double weight_sum = 0.0;
  std::vector<double> in(n);
  for (std::size_t i = 0; i < n; ++i) {
    in[i] = samples[i] * w[i];
    weight_sum += w[i];
  }

  const std::size_t bins = n / 2 + 1;
  std::vector<std::complex<double>> out(bins);
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE));
  }
  if (!plan) throw std::runtime_error("FFTW failed to build a plan");
  fftw_execute(plan.get());

  Spectrum spec;
  spec.freq_hz.resize(bins);
  spec.amplitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const bool folded = k != 0 && !(n % 2 == 0 && k == n / 2);
    spec.freq_hz[k] = static_cast<double>(k) * sim.sample_rate_hz / static_cast<double>(n);
    spec.amplitude[k] = (folded ? 2.0 : 1.0) * std::abs(out[k]) / weight_sum;
  }
  return spec;
}

std::vector<double> peak_amplitudes(const Spectrum& spectrum, std::span<const double> freqs) {
  const double df = spectrum.bin_spacing();
  if (spectrum.amplitude.empty() || df <= 0.0) throw std::invalid_argument("empty spectrum");
  const double top = spectrum.freq_hz.back();
  std::vector<double> out;
  out.reserve(freqs.size());
  for (double f : freqs) {
    if (!(f >= 0.0 && f <= top)) {
      throw DomainError(ErrorCode::FrequencyOutOfRange,
                        std::to_string(f) + " Hz outside [0, " + std::to_string(top) + "]");
    }
    const double pos = f / df;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) <= 1e-9) {
      out.push_back(spectrum.amplitude[static_cast<std::size_t>(nearest)]);
    } else {
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, spectrum.amplitude.size() - 1);
      out.push_back(std::max(spectrum.amplitude[lo], spectrum.amplitude[hi]));
    }
  }
  return out;
}

double suppression_db(const NmziConfig& test, const NmziConfig& reference, Mirror mirror,
                      const VibrationSpec& vib, DetectorModel det, const SimParams& sim) {
  if (!(test.ratios == reference.ratios)) {
    throw std::invalid_argument("test and reference must share splitting ratios");
  }
  const double freq[] = {vib[mirror].freq_hz};
  auto peak = [&](const NmziConfig& config) {
    const auto samples = synthesize_timeseries(config, vib, det, sim);
    return peak_amplitudes(power_spectrum(samples, sim), freq)[0];
  };
  const double ref_peak = peak(reference);
  if (ref_peak <= kZeroPeak) {
    throw DomainError(ErrorCode::ZeroReferencePeak,
                      std::string("reference shows no trace of mirror ") + mirror_name(mirror));
  }
  const double test_peak = peak(test);
  if (test_peak <= ref_peak * std::pow(10.0, -kSuppressionCapDb / 20.0)) return kSuppressionCapDb;
  return 20.0 * std::log10(ref_peak / test_peak);
}

}  // namespace nmzi
