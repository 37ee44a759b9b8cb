#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nmzi/elimination.hpp"
#include "nmzi/error.hpp"
#include "nmzi/experiment_file.hpp"
#include "nmzi/optics.hpp"
#include "nmzi/recovery.hpp"
#include "nmzi/signal.hpp"

namespace nmzi::cli {

namespace {

using json = nlohmann::ordered_json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Overrides shared by every subcommand that needs a device. Flags win over
// values read from an experiment file.
struct DeviceFlags {
  std::optional<double> t[4];
  std::optional<double> phi;
  std::optional<double> chi;
  std::optional<std::string> convention;

  void add_ratio_options(CLI::App* app) {
    for (int i = 0; i < 4; ++i) {
      app->add_option("--t" + std::to_string(i + 1), t[i],
                      "amplitude transmissivity of BS" + std::to_string(i + 1));
    }
    app->add_option("--convention", convention, "as_written | experiment_matched")
        ->check(CLI::IsMember({"as_written", "experiment_matched"}));
  }
  void add_phase_options(CLI::App* app) {
    app->add_option("--phi", phi, "inner phase (rad)");
    app->add_option("--chi", chi, "outer phase (rad)");
  }

  void apply(NmziConfig& config) const {
    SplitRatio* slots[] = {&config.ratios.bs1, &config.ratios.bs2, &config.ratios.bs3, &config.ratios.bs4};
    for (int i = 0; i < 4; ++i) {
      if (!t[i]) continue;
      try {
        *slots[i] = SplitRatio::from_transmissivity(*t[i]);
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--t") + std::to_string(i + 1) + ": " + e.what());
      }
    }
    if (phi) config.phi = *phi;
    if (chi) config.chi = *chi;
    if (convention) config.convention = *convention_from_string(*convention);
  }

  // Device from flags alone: equal-intensity ratios unless overridden.
  NmziConfig standalone() const {
    NmziConfig config;
    config.ratios = equal_intensity_ratios();
    apply(config);
    return config;
  }
};

ExperimentFile load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment(buffer.str());
}

// Writes to --out when given (confirmation on stdout), else to stdout.
void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw UsageError("cannot write " + out_path);
  file << text;
  out << "wrote " << out_path << "\n";
}

std::vector<EliminationTarget> parse_targets(const std::vector<std::string>& names) {
  std::vector<EliminationTarget> out;
  for (const auto& n : names) {
    const auto t = target_from_string(n);
    if (!t) throw UsageError("unknown target '" + n + "'");
    out.push_back(*t);
  }
  return out;
}

std::vector<double> parse_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(piece, &used));
        if (used != piece.size()) throw std::invalid_argument(piece);
      } catch (const std::exception&) {
        throw UsageError("not a number: '" + piece + "'");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- coeffs

struct CoeffsArgs {
  std::string file;
  std::string out;
  double step = 1e-6;
  DeviceFlags device;
};

int cmd_coeffs(const CoeffsArgs& args, std::ostream& out) {
  auto experiment = load(args.file);
  args.device.apply(experiment.config);
  const auto& config = experiment.config;

  const auto analytic = first_order_coefficients(config);
  std::string csv = "mirror,d_re,d_im,fd_re,fd_im,rel_err\n";
  for (Mirror m : kAllMirrors) {
    const auto a = analytic[m];
    const auto fd = finite_difference_gradient(config, m, args.step);
    // Relative above 1e-3, absolute (scaled by 1e-3) below: rel_err <= 1e-6
    // means within max(1e-6 |d|, 1e-9).
    const double rel = std::max(std::abs(a.d_re - fd.d_re) / std::max(std::abs(a.d_re), 1e-3),
                                std::abs(a.d_im - fd.d_im) / std::max(std::abs(a.d_im), 1e-3));
    csv += std::string(1, mirror_name(m)) + "," + fmt17(a.d_re) + "," + fmt17(a.d_im) + "," + fmt17(fd.d_re) +
           "," + fmt17(fd.d_im) + "," + fmt17(rel) + "\n";
  }
  emit(csv, args.out, out);
  return kOk;
}

// ----------------------------------------------------------------- solve

struct SolveArgs {
  std::vector<std::string> targets;
  std::string pin;
  std::string out;
  DeviceFlags device;
};

std::optional<PhasePin> parse_pin(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw UsageError("--pin expects phi=<rad> or chi=<rad>");
  const auto which = text.substr(0, eq);
  PhasePin pin{PhasePin::Which::Chi, 0.0};
  if (which == "phi") {
    pin.which = PhasePin::Which::Phi;
  } else if (which != "chi") {
    throw UsageError("--pin expects phi=<rad> or chi=<rad>");
  }
  const auto value = parse_list({text.substr(eq + 1)});
  if (value.size() != 1) throw UsageError("--pin takes a single value");
  pin.value = value[0];
  return pin;
}

int cmd_solve(const SolveArgs& args, std::ostream& out) {
  const auto targets = parse_targets(args.targets);
  if (targets.empty() || targets.size() > 2) throw UsageError("solve takes one or two --target options");
  const auto pin = parse_pin(args.pin);
  if (targets.size() == 1 && !pin) throw UsageError("a single --target needs --pin phi=.. or chi=..");
  if (targets.size() == 2 && pin) throw UsageError("--pin is not allowed with two targets");

  const auto config = args.device.standalone();
  const auto solutions = solve_phases(targets, config.ratios, pin, config.convention);

  json doc;
  doc["targets"] = json::array();
  for (auto t : targets) doc["targets"].push_back(to_string(t));
  doc["convention"] = to_string(config.convention);
  if (pin) doc["pin"] = {{pin->which == PhasePin::Which::Phi ? "phi" : "chi", pin->value}};
  doc["solutions"] = json::array();
  for (const auto& s : solutions) {
    NmziConfig at = config;
    at.phi = s.phi;
    at.chi = s.chi;
    json residuals;
    for (auto t : targets) residuals[std::string(to_string(t))] = condition_residual(t, at).value;
    doc["solutions"].push_back({{"phi", s.phi}, {"chi", s.chi}, {"residuals", residuals}});
  }
  emit(doc.dump(2) + "\n", args.out, out);
  return solutions.empty() ? kDomainError : kOk;
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string file;
  std::string out;
  double ref_phi = 0.5;
  double ref_chi = 0.3;
  DeviceFlags device;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  auto experiment = load(args.file);
  args.device.apply(experiment.config);
  const auto& vib = experiment.vibrations;
  NmziConfig reference = experiment.config;
  reference.phi = args.ref_phi;
  reference.chi = args.ref_chi;

  const auto spectrum = power_spectrum(
      synthesize_timeseries(experiment.config, vib, experiment.detector, experiment.sim), experiment.sim);
  const auto ref_spectrum =
      power_spectrum(synthesize_timeseries(reference, vib, experiment.detector, experiment.sim), experiment.sim);

  std::string csv = "freq_hz,amplitude\n";
  for (std::size_t k = 0; k < spectrum.freq_hz.size(); ++k) {
    csv += fmt17(spectrum.freq_hz[k]) + "," + fmt17(spectrum.amplitude[k]) + "\n";
  }
  std::ofstream file(args.out, std::ios::binary);
  if (!file) throw UsageError("cannot write " + args.out);
  file << csv;
  err << "wrote spectrum to " << args.out << "\n";

  std::vector<double> freqs;
  for (Mirror m : kAllMirrors) freqs.push_back(vib[m].freq_hz);
  const auto peaks = peak_amplitudes(spectrum, freqs);
  const auto ref_peaks = peak_amplitudes(ref_spectrum, freqs);

  out << "mirror,freq_hz,peak,reference_peak,suppression_db\n";
  for (Mirror m : kAllMirrors) {
    const auto i = index(m);
    std::string db;
    if (ref_peaks[i] > 1e-12) {
      const double ratio = peaks[i] > 0.0 ? ref_peaks[i] / peaks[i] : INFINITY;
      db = fmt17(std::min(20.0 * std::log10(ratio), kSuppressionCapDb));
    }
    out << mirror_name(m) << "," << fmt17(freqs[i]) << "," << fmt17(peaks[i]) << "," << fmt17(ref_peaks[i]) << ","
        << db << "\n";
  }
  return kOk;
}

// ----------------------------------------------------------------- sweep

struct SweepArgs {
  std::string target;
  std::vector<std::string> r2;
  std::vector<std::string> chi;
  std::string chi_range;
  std::string out;
  DeviceFlags device;
};

int cmd_sweep(const SweepArgs& args, std::ostream& out) {
  const auto targets = parse_targets({args.target});
  const auto r2 = parse_list(args.r2);
  auto chi = parse_list(args.chi);
  if (!args.chi_range.empty()) {
    auto parts = args.chi_range;
    std::replace(parts.begin(), parts.end(), ':', ',');
    const auto spec = parse_list({parts});
    if (spec.size() != 3 || spec[2] < 1 || spec[2] != std::floor(spec[2])) {
      throw UsageError("--chi-range expects lo:hi:count");
    }
    const int n = static_cast<int>(spec[2]);
    for (int k = 0; k < n; ++k) chi.push_back(n == 1 ? spec[0] : spec[0] + (spec[1] - spec[0]) * k / (n - 1));
  }
  if (r2.empty() || chi.empty()) throw UsageError("sweep needs --r2 and --chi or --chi-range");
  for (double r : r2) {
    if (!(r > 0.0 && r < 1.0)) throw UsageError("--r2 values must lie in (0, 1)");
  }

  const auto config = args.device.standalone();
  const auto rows = sweep_curve(targets[0], config.ratios, r2, chi, config.convention);
  std::string csv = "r2,chi,phi\n";
  for (const auto& row : rows) {
    csv += fmt17(row.r2) + "," + fmt17(row.chi) + "," + (row.phi ? fmt17(*row.phi) : std::string()) + "\n";
  }
  emit(csv, args.out, out);
  return kOk;
}

// --------------------------------------------------------------- recover

struct RecoverArgs {
  double pd2 = 0.0;
  double pd3 = 0.0;
  std::string out;
  DeviceFlags device;
};

int cmd_recover(const RecoverArgs& args, std::ostream& out) {
  if (!(args.pd2 >= 0.0 && args.pd2 <= 1.0 && args.pd3 >= 0.0 && args.pd3 <= 1.0)) {
    throw UsageError("--pd2 and --pd3 must lie in [0, 1]");
  }
  const auto config = args.device.standalone();
  const auto phases = recover({args.pd2, args.pd3}, config.ratios, config.convention);
  json doc;
  doc["convention"] = to_string(config.convention);
  doc["phi"] = phases.phi;
  doc["chi"] = phases.chi;
  doc["beta"] = phases.beta;
  emit(doc.dump(2) + "\n", args.out, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nested Mach-Zehnder interferometer weak-trace toolkit", "nmzi"};
  app.require_subcommand(1);

  CoeffsArgs coeffs;
  auto* c = app.add_subcommand("coeffs", "first-order weak-trace coefficients with finite-difference check");
  c->add_option("file", coeffs.file, "experiment file")->required();
  c->add_option("--out", coeffs.out, "CSV output path (default stdout)");
  c->add_option("--step", coeffs.step, "finite-difference step")->check(CLI::Range(1e-12, 1e-3));
  coeffs.device.add_ratio_options(c);
  coeffs.device.add_phase_options(c);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "phases that eliminate one or two weak-trace channels");
  s->add_option("--target", solve.targets, "a_re a_im b_re b_im c_re c_im ef_re ef_im")->required();
  s->add_option("--pin", solve.pin, "phi=<rad> or chi=<rad> (single target only)");
  s->add_option("--out", solve.out, "output path (default stdout)");
  solve.device.add_ratio_options(s);

  SimulateArgs simulate;
  auto* m = app.add_subcommand("simulate", "vibrating-mirror spectrum and per-mirror peaks");
  m->add_option("file", simulate.file, "experiment file")->required();
  m->add_option("--out", simulate.out, "spectrum CSV path")->required();
  m->add_option("--ref-phi", simulate.ref_phi, "reference inner phase (rad)");
  m->add_option("--ref-chi", simulate.ref_chi, "reference outer phase (rad)");
  simulate.device.add_ratio_options(m);
  simulate.device.add_phase_options(m);

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "elimination curve phi(chi) across BS2 reflectivities");
  w->add_option("--target", sweep.target, "elimination target")->required();
  w->add_option("--r2", sweep.r2, "BS2 amplitude reflectivities, comma separated")->required();
  w->add_option("--chi", sweep.chi, "outer phases, comma separated");
  w->add_option("--chi-range", sweep.chi_range, "lo:hi:count");
  w->add_option("--out", sweep.out, "CSV output path (default stdout)");
  sweep.device.add_ratio_options(w);

  RecoverArgs rec;
  auto* r = app.add_subcommand("recover", "phases from auxiliary detector powers");
  r->add_option("--pd2", rec.pd2, "power at D2 (out1)")->required();
  r->add_option("--pd3", rec.pd3, "power at D3 (out2)")->required();
  r->add_option("--out", rec.out, "output path (default stdout)");
  rec.device.add_ratio_options(r);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*c) return cmd_coeffs(coeffs, out);
    if (*s) return cmd_solve(solve, out);
    if (*m) return cmd_simulate(simulate, out, err);
    if (*w) return cmd_sweep(sweep, out);
    if (*r) return cmd_recover(rec, out);
  } catch (const ParseError& e) {
    err << e.formatted() << "\n";
    return kUsageError;
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << "\n";
    return kUsageError;
  } catch (const DomainError& e) {
    err << e.what() << "\n";
    return kDomainError;
  } catch (const std::invalid_argument& e) {
    err << "usage: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace nmzi::cli
