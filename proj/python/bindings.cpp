#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "nmzi/elimination.hpp"
#include "nmzi/error.hpp"
#include "nmzi/experiment_file.hpp"
#include "nmzi/optics.hpp"
#include "nmzi/recovery.hpp"
#include "nmzi/signal.hpp"

namespace py = pybind11;
using namespace nmzi;

namespace {

py::dict trace_dict(const WeakTraceVector& w) {
  py::dict out;
  for (Mirror m : kAllMirrors) out[py::str(std::string(1, mirror_name(m)))] = py::make_tuple(w[m].d_re, w[m].d_im);
  return out;
}

MirrorPerturbation perturbation_from(const py::dict& phases) {
  MirrorPerturbation p;
  for (auto [k, v] : phases) {
    const auto m = mirror_from_name(py::cast<std::string>(k));
    if (!m) throw py::key_error("unknown mirror " + py::cast<std::string>(k));
    p[*m] = py::cast<Complex>(v);
  }
  return p;
}

// Exception types live for the lifetime of the interpreter.
PyObject* g_domain_error = nullptr;
PyObject* g_parse_error = nullptr;

}  // namespace

PYBIND11_MODULE(_nmzi, m) {
  m.doc() = "Field propagation, weak-trace elimination, signal simulation and phase recovery";

  g_domain_error = PyErr_NewException("nmzi.DomainError", PyExc_ValueError, nullptr);
  g_parse_error = PyErr_NewException("nmzi.ParseError", PyExc_ValueError, nullptr);
  m.add_object("DomainError", py::handle(g_domain_error));
  m.add_object("ParseError", py::handle(g_parse_error));

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DomainError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(g_domain_error)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(g_domain_error, exc.ptr());
    } catch (const ParseError& e) {
      py::object exc = py::reinterpret_borrow<py::object>(g_parse_error)(e.formatted());
      exc.attr("line") = e.line();
      exc.attr("column") = e.column();
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(g_parse_error, exc.ptr());
    }
  });

  py::enum_<SignConvention>(m, "SignConvention")
      .value("AS_WRITTEN", SignConvention::AsWritten)
      .value("EXPERIMENT_MATCHED", SignConvention::ExperimentMatched);

  py::enum_<Mirror>(m, "Mirror")
      .value("A", Mirror::A)
      .value("B", Mirror::B)
      .value("C", Mirror::C)
      .value("E", Mirror::E)
      .value("F", Mirror::F);

  py::enum_<DetectorModel>(m, "DetectorModel")
      .value("INTENSITY_SUM", DetectorModel::IntensitySum)
      .value("POSITION_DIFFERENTIAL", DetectorModel::PositionDifferential);

  py::enum_<Window>(m, "Window").value("RECTANGULAR", Window::Rectangular).value("HANN", Window::Hann);

  py::class_<SplitRatios>(m, "SplitRatios")
      .def(py::init([](double t1, double t2, double t3, double t4) {
             return SplitRatios{SplitRatio::from_transmissivity(t1), SplitRatio::from_transmissivity(t2),
                                SplitRatio::from_transmissivity(t3), SplitRatio::from_transmissivity(t4)};
           }),
           py::arg("t1"), py::arg("t2"), py::arg("t3"), py::arg("t4"))
      .def_static("equal_intensity", &equal_intensity_ratios)
      .def_property_readonly("t", [](const SplitRatios& r) {
        return py::make_tuple(r.bs1.t(), r.bs2.t(), r.bs3.t(), r.bs4.t());
      })
      .def_property_readonly("r", [](const SplitRatios& r) {
        return py::make_tuple(r.bs1.r(), r.bs2.r(), r.bs3.r(), r.bs4.r());
      })
      .def("__eq__", [](const SplitRatios& l, const SplitRatios& r) { return l == r; })
      .def("__repr__", [](const SplitRatios& r) {
        return "SplitRatios(t1=" + format_shortest(r.bs1.t()) + ", t2=" + format_shortest(r.bs2.t()) +
               ", t3=" + format_shortest(r.bs3.t()) + ", t4=" + format_shortest(r.bs4.t()) + ")";
      });

  py::class_<NmziConfig>(m, "Config")
      .def(py::init([](const SplitRatios& r, double phi, double chi, SignConvention c) {
             return NmziConfig{r, phi, chi, c};
           }),
           py::arg("ratios"), py::arg("phi") = 0.0, py::arg("chi") = 0.0,
           py::arg("convention") = SignConvention::ExperimentMatched)
      .def_readwrite("ratios", &NmziConfig::ratios)
      .def_readwrite("phi", &NmziConfig::phi)
      .def_readwrite("chi", &NmziConfig::chi)
      .def_readwrite("convention", &NmziConfig::convention)
      .def("__eq__", [](const NmziConfig& l, const NmziConfig& r) { return l == r; });

  py::class_<PathAmplitudes>(m, "PathAmplitudes")
      .def_readonly("a", &PathAmplitudes::a)
      .def_readonly("b", &PathAmplitudes::b)
      .def_readonly("c", &PathAmplitudes::c);

  py::class_<OutputState>(m, "OutputState")
      .def_readonly("detector", &OutputState::detector)
      .def_readonly("out1", &OutputState::out1)
      .def_readonly("out2", &OutputState::out2)
      .def("total_power", &OutputState::total_power);

  m.def("path_amplitudes", py::overload_cast<const SplitRatios&>(&path_amplitudes), py::arg("ratios"));
  m.def(
      "propagate",
      [](const NmziConfig& c, const py::dict& phases) { return propagate(c, perturbation_from(phases)); },
      py::arg("config"), py::arg("phases") = py::dict(),
      "Output fields; phases maps mirror names to complex phases.");
  m.def(
      "detector_power",
      [](const NmziConfig& c, const py::dict& phases) { return detector_power_exact(c, perturbation_from(phases)); },
      py::arg("config"), py::arg("phases") = py::dict());
  m.def(
      "detector_power_linearized",
      [](const NmziConfig& c, const py::dict& phases) {
        return detector_power_linearized(c, perturbation_from(phases));
      },
      py::arg("config"), py::arg("phases"));
  m.def(
      "weak_trace", [](const NmziConfig& c) { return trace_dict(first_order_coefficients(c)); }, py::arg("config"),
      "{mirror: (d_re, d_im)}");
  m.def(
      "finite_difference_gradient",
      [](const NmziConfig& c, Mirror mirror, double step) {
        const auto g = finite_difference_gradient(c, mirror, step);
        return py::make_tuple(g.d_re, g.d_im);
      },
      py::arg("config"), py::arg("mirror"), py::arg("step") = 1e-6);

  auto parse_targets = [](const std::vector<std::string>& names) {
    std::vector<EliminationTarget> out;
    for (const auto& n : names) {
      const auto t = target_from_string(n);
      if (!t) throw py::value_error("unknown target " + n);
      out.push_back(*t);
    }
    return out;
  };

  py::class_<PhaseSolution>(m, "PhaseSolution")
      .def_readonly("phi", &PhaseSolution::phi)
      .def_readonly("chi", &PhaseSolution::chi)
      .def_readonly("residual_after", &PhaseSolution::residual_after)
      .def("__repr__", [](const PhaseSolution& s) {
        return "PhaseSolution(phi=" + format_shortest(s.phi) + ", chi=" + format_shortest(s.chi) + ")";
      });

  m.def(
      "condition_residual",
      [parse_targets](const std::string& target, const NmziConfig& c) {
        return condition_residual(parse_targets({target})[0], c).value;
      },
      py::arg("target"), py::arg("config"));
  m.def(
      "solve",
      [parse_targets](const std::vector<std::string>& targets, const SplitRatios& r, std::optional<double> phi,
                      std::optional<double> chi, SignConvention conv) {
        if (phi && chi) throw py::value_error("pin at most one of phi and chi");
        std::optional<PhasePin> pin;
        if (phi) pin = PhasePin{PhasePin::Which::Phi, *phi};
        if (chi) pin = PhasePin{PhasePin::Which::Chi, *chi};
        const auto t = parse_targets(targets);
        return solve_phases(t, r, pin, conv);
      },
      py::arg("targets"), py::arg("ratios"), py::kw_only(), py::arg("phi") = py::none(),
      py::arg("chi") = py::none(), py::arg("convention") = SignConvention::ExperimentMatched,
      "Targets are names such as 'a_re' or 'ef_im'.");
  m.def(
      "feasibility",
      [parse_targets](const std::vector<std::string>& targets, const SplitRatios& r, SignConvention conv) {
        const auto t = parse_targets(targets);
        const auto f = feasibility(t, r, conv);
        return py::make_tuple(f.feasible, f.witness);
      },
      py::arg("targets"), py::arg("ratios"), py::arg("convention") = SignConvention::ExperimentMatched);
  m.def(
      "sweep",
      [parse_targets](const std::string& target, const SplitRatios& r, const std::vector<double>& r2,
                      const std::vector<double>& chi, SignConvention conv) {
        py::list out;
        for (const auto& row : sweep_curve(parse_targets({target})[0], r, r2, chi, conv)) {
          out.append(py::make_tuple(row.r2, row.chi, row.phi));
        }
        return out;
      },
      py::arg("target"), py::arg("ratios"), py::arg("r2"), py::arg("chi"),
      py::arg("convention") = SignConvention::ExperimentMatched, "Rows of (r2, chi, phi or None).");

  py::class_<MirrorVibration>(m, "MirrorVibration")
      .def(py::init<>())
      .def_readwrite("freq_hz", &MirrorVibration::freq_hz)
      .def_readwrite("amp_phase", &MirrorVibration::amp_phase)
      .def_readwrite("amp_deflect", &MirrorVibration::amp_deflect);

  py::class_<VibrationSpec>(m, "VibrationSpec")
      .def(py::init<>())
      .def_static("staggered", &VibrationSpec::staggered, py::arg("amp_phase"), py::arg("amp_deflect") = 0.0)
      .def("__getitem__", [](const VibrationSpec& v, Mirror mirror) { return v[mirror]; })
      .def("__setitem__", [](VibrationSpec& v, Mirror mirror, const MirrorVibration& x) { v[mirror] = x; });

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("sample_rate_hz", &SimParams::sample_rate_hz)
      .def_readwrite("duration_s", &SimParams::duration_s)
      .def_readwrite("window", &SimParams::window)
      .def_readwrite("noise_amplitude", &SimParams::noise_amplitude)
      .def_readwrite("noise_seed", &SimParams::noise_seed);

  m.def("synthesize_timeseries", &synthesize_timeseries, py::arg("config"), py::arg("vibrations"),
        py::arg("detector") = DetectorModel::IntensitySum, py::arg("sim") = SimParams{});
  m.def(
      "spectrum",
      [](const std::vector<double>& samples, const SimParams& sim) {
        const auto s = power_spectrum(samples, sim);
        return py::make_tuple(s.freq_hz, s.amplitude);
      },
      py::arg("samples"), py::arg("sim") = SimParams{}, "(frequencies, amplitudes)");
  m.def("suppression_db", &suppression_db, py::arg("test"), py::arg("reference"), py::arg("mirror"),
        py::arg("vibrations"), py::arg("detector") = DetectorModel::IntensitySum, py::arg("sim") = SimParams{});

  py::class_<RecoveredPhases>(m, "RecoveredPhases")
      .def_readonly("phi", &RecoveredPhases::phi)
      .def_readonly("chi", &RecoveredPhases::chi)
      .def_readonly("beta", &RecoveredPhases::beta);

  m.def(
      "auxiliary_powers",
      [](const NmziConfig& c) {
        const auto p = auxiliary_powers(c);
        return py::make_tuple(p.p_d2, p.p_d3);
      },
      py::arg("config"), "(P_D2, P_D3)");
  m.def(
      "recover",
      [](double p_d2, double p_d3, const SplitRatios& r, SignConvention conv) {
        return recover({p_d2, p_d3}, r, conv);
      },
      py::arg("p_d2"), py::arg("p_d3"), py::arg("ratios"), py::arg("convention") = SignConvention::ExperimentMatched);

  py::class_<ExperimentFile>(m, "Experiment")
      .def_readwrite("config", &ExperimentFile::config)
      .def_readwrite("vibrations", &ExperimentFile::vibrations)
      .def_readwrite("detector", &ExperimentFile::detector)
      .def_readwrite("sim", &ExperimentFile::sim)
      .def("__eq__", [](const ExperimentFile& l, const ExperimentFile& r) { return l == r; });

  m.def("parse_experiment", [](const std::string& text) { return parse_experiment(text); }, py::arg("text"));
  m.def("serialize_experiment", &serialize_experiment, py::arg("experiment"));

  m.attr("__all__") = py::make_tuple(
      "DomainError", "ParseError", "SignConvention", "Mirror", "DetectorModel", "Window", "SplitRatios", "Config",
      "PathAmplitudes", "OutputState", "path_amplitudes", "propagate", "detector_power", "detector_power_linearized",
      "weak_trace", "finite_difference_gradient", "PhaseSolution", "condition_residual", "solve", "feasibility",
      "sweep", "MirrorVibration", "VibrationSpec", "SimParams", "synthesize_timeseries", "spectrum",
      "suppression_db", "RecoveredPhases", "auxiliary_powers", "recover", "Experiment", "parse_experiment",
      "serialize_experiment");
}
