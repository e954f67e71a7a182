#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "copulacp/archimedean.hpp"
#include "copulacp/calibration.hpp"
#include "copulacp/dvine_compare.hpp"
#include "copulacp/ks_change.hpp"
#include "copulacp/report_json.hpp"
#include "copulacp/spectral_bands.hpp"

namespace py = pybind11;
using namespace copulacp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) {
  Array out(py::ssize_t(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array epochs_to_array(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size(), t = rows.empty() ? 0 : rows[0].size();
  Array out({py::ssize_t(r), py::ssize_t(t)});
  double* dst = out.mutable_data();
  for (const auto& row : rows) dst = std::copy(row.begin(), row.end(), dst);
  return out;
}

py::object json_to_python(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::object detect(const Array& data, double fs, std::size_t channel, std::uint64_t seed,
                  std::size_t replicates, std::size_t blocks, std::size_t grid,
                  std::optional<std::map<std::string, double>> thresholds, std::size_t jobs,
                  const std::string& target) {
  if (data.ndim() != 3) throw std::invalid_argument("data must have shape (channels, epochs, samples)");
  EpochTensor tensor(std::size_t(data.shape(0)), std::size_t(data.shape(1)),
                     std::size_t(data.shape(2)), fs);
  const double* src = data.data();
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t r = 0; r < tensor.epochs(); ++r) {
      auto e = tensor.epoch(c, r);
      std::copy(src, src + e.size(), e.begin());
      src += e.size();
    }
  }
  DetectConfig cfg;
  cfg.bootstrap = {blocks, replicates, seed};
  cfg.grid_size = grid;
  cfg.jobs = jobs;
  cfg.target = ks_target_from_string(target);
  const auto table = thresholds ? *thresholds : reference_thresholds_dgp2().thresholds;
  const auto bands = default_bands();
  std::vector<ChangepointReport> reports;
  {
    py::gil_scoped_release release;
    reports = detect_channel(tensor, channel, bands, cfg, table);
  }
  py::list out;
  for (const auto& r : reports) out.append(json_to_python(to_json(r, false)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_copulacp, m) {
  m.doc() = "Copula-based changepoint detection for band-limited spectral magnitudes";
  m.def("version", &tool_version);

  m.def("fourier_magnitudes", [](const Array& x) {
    return to_array(fourier_magnitudes(to_vector(x)));
  });

  py::class_<CopulaModel>(m, "Copula")
      .def(py::init([](const std::string& family, double theta) {
             return make_copula(copula_family_from_string(family), theta);
           }),
           py::arg("family"), py::arg("theta") = 0.0)
      .def_property_readonly("family", [](const CopulaModel& c) { return to_string(c.family); })
      .def_property_readonly("theta", [](const CopulaModel& c) { return c.theta; })
      .def_property_readonly("tau", [](const CopulaModel& c) {
        return c.family == CopulaFamily::Independent ? 0.0 : theta_to_tau(c.family, c.theta);
      })
      .def("cdf", &copula_cdf)
      .def("pdf", &copula_pdf)
      .def("h", &h_function)
      .def("sample",
           [](const CopulaModel& c, std::size_t n, std::uint64_t seed) {
             auto p = sample(c, n, seed);
             return py::make_tuple(to_array(p.u), to_array(p.v));
           },
           py::arg("n"), py::arg("seed") = 0)
      .def("__repr__", [](const CopulaModel& c) {
        return "Copula('" + to_string(c.family) + "', " + std::to_string(c.theta) + ")";
      });

  m.def("tau_to_theta", [](const std::string& f, double tau) {
    return tau_to_theta(copula_family_from_string(f), tau);
  });
  m.def("kendall_tau", [](const Array& x, const Array& y) {
    return kendall_tau_empirical(to_vector(x), to_vector(y));
  });
  m.def("select_family",
        [](const Array& u, const Array& v, bool mle) {
          return select_family(to_vector(u), to_vector(v), default_panel(),
                               mle ? ThetaSource::Mle : ThetaSource::TauInversion);
        },
        py::arg("u"), py::arg("v"), py::arg("mle") = false);

  m.def("binomial_two_sided_p", &binomial_two_sided_p, py::arg("n"), py::arg("xi"));
  m.def("clarke_test", [](const Array& a, const Array& b) {
    return json_to_python(to_json(clarke_test(to_vector(a), to_vector(b))));
  });

  m.def("simulate_dgp1",
        [](const std::string& variant, std::size_t epochs, std::size_t samples, std::uint64_t seed) {
          if (variant.size() != 1) throw std::invalid_argument("variant must be 'A' or 'B'");
          return epochs_to_array(simulate_dgp1(variant[0], epochs, samples, seed));
        },
        py::arg("variant"), py::arg("epochs"), py::arg("samples") = 1000, py::arg("seed") = 0);
  m.def("simulate_dgp2",
        [](int latent, std::size_t epochs, std::size_t samples, std::uint64_t seed, double rho) {
          return epochs_to_array(simulate_dgp2(latent, epochs, samples, seed, rho));
        },
        py::arg("latent"), py::arg("epochs"), py::arg("samples") = 1000, py::arg("seed") = 0,
        py::arg("rho") = 0.97);

  m.def("detect", &detect, py::arg("data"), py::arg("fs") = 1000.0, py::arg("channel") = 0,
        py::arg("seed") = 0, py::arg("replicates") = 200, py::arg("blocks") = 20,
        py::arg("grid") = 101, py::arg("thresholds") = py::none(), py::arg("jobs") = 1,
        py::arg("target") = "joint");

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const std::invalid_argument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}
