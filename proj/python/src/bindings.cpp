#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmufdi/attack.hpp"
#include "pmufdi/circle_fit.hpp"
#include "pmufdi/detector.hpp"
#include "pmufdi/grid_model.hpp"
#include "pmufdi/harness.hpp"
#include "pmufdi/icon.hpp"
#include "pmufdi/json_io.hpp"
#include "pmufdi/retrieval.hpp"

namespace py = pybind11;
using namespace pmufdi;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

ScenarioConfig config_from(const std::string& text) {
  return merge_config(ScenarioConfig{}, json::parse(text));
}

py::array_t<std::complex<double>> to_array(const MeasurementMatrix& m) {
  py::array_t<std::complex<double>> out({m.rows(), m.channels()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t t = 0; t < m.rows(); ++t) {
    for (std::size_t j = 0; j < m.channels(); ++j) view(t, j) = m(t, j);
  }
  return out;
}

MeasurementMatrix from_array(const ComplexArray& a, double rate_hz) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D (samples x channels) array");
  const auto view = a.unchecked<2>();
  MeasurementMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), rate_hz);
  for (py::ssize_t t = 0; t < a.shape(0); ++t) {
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m.set(static_cast<std::size_t>(t), static_cast<std::size_t>(j), view(t, j));
  }
  return m;
}

std::vector<Phasor> to_points(const ComplexArray& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D array of complex samples");
  return std::vector<Phasor>(a.data(), a.data() + a.size());
}

py::object detection_dict(const Detection& d) {
  return py::dict(py::arg("t") = d.pattern.t_detect, py::arg("channel") = d.pattern.channel,
                  py::arg("d_t") = d.deviation, py::arg("delta") = d.delta,
                  py::arg("pattern") = d.pattern.sequence);
}

SimilarityMode mode_from(const std::string& s) { return similarity_mode_from_string(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synchrophasor FDI attack detection, classification and signal retrieval";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ValueError);
  py::register_exception<DegenerateFitError>(m, "DegenerateFitError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("preset_names", &preset_names);
  m.def("_preset", [](const std::string& name) { return json(preset(name)).dump(); });
  m.def("_normalize_config", [](const std::string& text) { return json(config_from(text)).dump(); });
  m.def(
      "_run_scenario",
      [](const std::string& cfg, int jobs) {
        const auto c = config_from(cfg);
        py::gil_scoped_release release;
        return report_json(run_scenario(c, RunOptions{jobs, std::nullopt})).dump();
      },
      py::arg("config"), py::arg("jobs") = 1);
  m.def(
      "_noise_sweep",
      [](const std::string& cfg, const std::vector<double>& sigmas, int jobs) {
        const auto c = config_from(cfg);
        std::vector<MetricsReport> reports;
        {
          py::gil_scoped_release release;
          reports = noise_sweep(c, sigmas, RunOptions{jobs, std::nullopt});
        }
        json out = json::array();
        for (const auto& r : reports) out.push_back(report_json(r));
        return out.dump();
      },
      py::arg("config"), py::arg("sigmas"), py::arg("jobs") = 1);
  m.def(
      "_generate",
      [](const std::string& cfg) {
        const auto data = generate_scenario(config_from(cfg));
        return py::make_tuple(to_array(data.clean), json(data.model).dump());
      },
      py::arg("config"));
  m.def(
      "_attack",
      [](const std::string& cfg, const ComplexArray& clean) {
        const auto c = config_from(cfg);
        const auto model = make_grid_model(c);
        const auto plan = scenario_plan(c, model);
        const auto res = inject(from_array(clean, c.rate_hz), plan, model);
        py::array_t<int> labels({res.labels.rows(), res.labels.channels()});
        auto view = labels.mutable_unchecked<2>();
        for (std::size_t t = 0; t < res.labels.rows(); ++t) {
          for (std::size_t j = 0; j < res.labels.channels(); ++j) view(t, j) = res.labels(t, j);
        }
        return py::make_tuple(to_array(res.attacked), labels);
      },
      py::arg("config"), py::arg("clean"));

  m.def(
      "fit_circle",
      [](const ComplexArray& pts) {
        const auto fit = fit_circle(to_points(pts));
        return py::make_tuple(fit.center, fit.radius, fit.coeffs, fit.condition);
      },
      py::arg("points"), "Algebraic least-squares circle: (center, radius, (a, b1, b2, c), condition).");

  py::class_<DetectorParams>(m, "DetectorParams")
      .def(py::init([](int window, int queue, double margin, double floor) {
             DetectorParams p{window, queue, margin, floor};
             p.validate();
             return p;
           }),
           py::arg("window") = 15, py::arg("queue") = 10, py::arg("margin") = 2.0,
           py::arg("delta_floor") = 1e-6)
      .def_readonly("window", &DetectorParams::window)
      .def_readonly("queue", &DetectorParams::queue)
      .def_readonly("margin", &DetectorParams::margin)
      .def_readonly("delta_floor", &DetectorParams::delta_floor);

  py::class_<OriginDetector>(m, "OriginDetector")
      .def(py::init<Phasor, double, DetectorParams, int>(), py::arg("baseline"), py::arg("delta"),
           py::arg("params") = DetectorParams{}, py::arg("channel") = 0)
      .def_static(
          "calibrate",
          [](const ComplexArray& training, const DetectorParams& params, int channel) {
            return OriginDetector::calibrate(to_points(training), params, channel);
          },
          py::arg("training"), py::arg("params") = DetectorParams{}, py::arg("channel") = 0)
      .def(
          "step",
          [](OriginDetector& d, Phasor z) -> py::object {
            const auto ev = d.step(z);
            return ev ? detection_dict(*ev) : py::none();
          },
          py::arg("z"))
      .def("reset", &OriginDetector::reset)
      .def_property_readonly("baseline", &OriginDetector::baseline)
      .def_property_readonly("delta", &OriginDetector::delta)
      .def_property_readonly("flag", &OriginDetector::flag)
      .def_property_readonly("deviation", &OriginDetector::deviation)
      .def_property_readonly("center", &OriginDetector::center)
      .def_property_readonly("degenerate_fits", &OriginDetector::degenerate_fits);

  m.def(
      "detect_and_retrieve",
      [](const ComplexArray& attacked, std::int64_t training, const DetectorParams& params,
         const std::string& formula) {
        const auto mm = from_array(attacked, 30.0);
        auto dets = calibrate_detectors(mm, training, params);
        const auto res = retrieve_stream(mm, std::move(dets), retrieval_formula_from_string(formula));
        py::list events;
        for (const auto& e : res.events) events.append(detection_dict(e));
        return py::make_tuple(to_array(res.retrieved), events, res.max_formula_divergence);
      },
      py::arg("attacked"), py::arg("training"), py::arg("params") = DetectorParams{},
      py::arg("formula") = "arctan",
      "Calibrate one detector per channel on the first `training` rows, then detect and retrieve.");
  m.def(
      "retrieve_sample",
      [](Phasor z, double mean_dev, Phasor center, bool active, const std::string& formula) {
        return retrieve_sample(z, RetrievalContext{mean_dev, center, active}, retrieval_formula_from_string(formula)).value;
      },
      py::arg("z"), py::arg("mean_dev"), py::arg("center"), py::arg("active") = true,
      py::arg("formula") = "arctan");

  m.def(
      "cross_correlation",
      [](const std::vector<double>& a, const std::vector<double>& e, bool normalize) {
        return cross_correlation(a, e, normalize);
      },
      py::arg("alpha"), py::arg("eps"), py::arg("normalize") = true);
  m.def(
      "pattern_similarity",
      [](const std::vector<double>& a, const std::vector<double>& e, const std::string& mode) {
        return pattern_similarity(a, e, mode_from(mode));
      },
      py::arg("alpha"), py::arg("eps"), py::arg("mode") = "centered");
  m.def(
      "calibrate_gamma",
      [](const std::vector<std::vector<double>>& patterns, std::optional<std::vector<int>> truth,
         std::optional<std::vector<double>> grid, const std::string& mode, std::size_t memory) {
        std::vector<AttackPattern> pats;
        for (const auto& p : patterns) pats.push_back(AttackPattern{p, 0, 0});
        const auto g = grid ? *grid : default_gamma_grid();
        std::optional<std::span<const int>> t;
        if (truth) t = std::span<const int>(*truth);
        return calibrate_gamma(pats, t, g, mode_from(mode), memory);
      },
      py::arg("patterns"), py::arg("truth") = py::none(), py::arg("grid") = py::none(),
      py::arg("mode") = "centered", py::arg("memory") = 10);

  py::class_<Ensemble>(m, "Ensemble")
      .def(py::init([](double gamma, const std::string& mode, std::size_t memory) {
             return Ensemble(gamma, mode_from(mode), memory);
           }),
           py::arg("gamma"), py::arg("mode") = "centered", py::arg("memory") = 10)
      .def(
          "classify",
          [](Ensemble& e, const std::vector<double>& pattern, std::int64_t t, int channel) {
            const auto c = e.classify(AttackPattern{pattern, channel, t});
            return py::make_tuple(c.label, c.upsilon, c.new_class);
          },
          py::arg("pattern"), py::arg("t") = 0, py::arg("channel") = 0,
          "Returns (label, upsilon, new_class).")
      .def_property_readonly("gamma", &Ensemble::gamma)
      .def_property_readonly("classes_created", &Ensemble::classes_created)
      .def_property_readonly("stored_patterns", &Ensemble::stored_patterns)
      .def("class_sizes", [](const Ensemble& e) {
        std::vector<std::size_t> out;
        for (const auto& c : e.classes()) out.push_back(c.patterns.size());
        return out;
      })
      .def("to_json", [](const Ensemble& e) { return json(e).dump(); });
}
