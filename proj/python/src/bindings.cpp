#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dapce/benchmarks.hpp"
#include "dapce/errors.hpp"
#include "dapce/model.hpp"
#include "dapce/polychaos.hpp"
#include "dapce/stochastic.hpp"
#include "dapce/uq.hpp"
#include "dapce/version.hpp"

namespace py = pybind11;
using namespace dapce;

namespace {

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

PYBIND11_MODULE(_dapce, m) {
  m.doc() = "Deep adaptive aPC surrogates, sampling and uncertainty statistics";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::enum_<Family>(m, "Family")
      .value("normal", Family::Normal)
      .value("lognormal", Family::Lognormal)
      .value("gumbel", Family::Gumbel)
      .value("gaussian_mixture", Family::GaussianMixture)
      .value("deterministic", Family::Deterministic)
      .value("uniform", Family::Uniform);

  py::class_<Marginal>(m, "Marginal")
      .def_static("normal", &Marginal::normal, py::arg("mean"), py::arg("std"))
      .def_static("lognormal", &Marginal::lognormal, py::arg("mean"), py::arg("std"))
      .def_static("gumbel", &Marginal::gumbel, py::arg("mean"), py::arg("std"))
      .def_static("from_cov", &Marginal::from_cov, py::arg("family"), py::arg("mean"), py::arg("cov"))
      .def_static(
          "mixture",
          [](const std::vector<std::tuple<double, double, double>>& parts) {
            std::vector<MixtureComponent> c;
            for (const auto& [w, mu, sd] : parts) c.push_back({w, mu, sd});
            return Marginal::mixture(std::move(c));
          },
          py::arg("components"), "Components as (weight, mean, std) tuples.")
      .def_static("deterministic", &Marginal::deterministic, py::arg("value"))
      .def_static("uniform", &Marginal::uniform, py::arg("lower"), py::arg("upper"))
      .def_property_readonly("family", &Marginal::family)
      .def_property_readonly("mean", &Marginal::mean)
      .def_property_readonly("std", &Marginal::std)
      .def("cdf", &Marginal::cdf)
      .def("inverse_cdf", &Marginal::inverse_cdf);

  py::class_<RandomVector>(m, "RandomVector")
      .def(py::init([](std::vector<Marginal> marginals) { return RandomVector{std::move(marginals)}; }))
      .def_readonly("marginals", &RandomVector::marginals)
      .def_property_readonly("dim", &RandomVector::dim);

  m.def("lhs_sample", &lhs_sample, py::arg("random_vector"), py::arg("n"), py::arg("seed"));
  m.def("mcs_sample", &mcs_sample, py::arg("random_vector"), py::arg("n"), py::arg("seed"), py::arg("threads") = 1);

  m.def("total_degree_count", &total_degree_count, py::arg("dim"), py::arg("order"));
  m.def(
      "multi_indices", [](int d, int p) { return generate_multi_indices(d, p).indices; }, py::arg("dim"),
      py::arg("order"));
  m.def(
      "closed_form_coeffs",
      [](const std::vector<double>& moments, int degree) { return closed_form_coeffs(moments, degree); },
      py::arg("moments"), py::arg("degree"));

  py::class_<Moments>(m, "Moments")
      .def_readonly("mean", &Moments::mean)
      .def_readonly("std", &Moments::std)
      .def_readonly("skewness", &Moments::skewness)
      .def_readonly("kurtosis", &Moments::kurtosis)
      .def("__repr__", [](const Moments& s) {
        return "Moments(mean=" + format_double(s.mean) + ", std=" + format_double(s.std) +
               ", skewness=" + format_double(s.skewness) + ", kurtosis=" + format_double(s.kurtosis) + ")";
      });

  m.def("four_moments", [](const Vector& s) { return four_moments(as_span(s)); }, py::arg("samples"));
  m.def(
      "failure_probability",
      [](const Vector& s, double threshold, const std::string& direction) {
        return failure_probability(as_span(s), threshold, direction_from_string(direction));
      },
      py::arg("samples"), py::arg("threshold"), py::arg("direction") = "below");
  m.def(
      "kde_pdf",
      [](const Vector& s, int points) {
        const KdeCurve c = kde_pdf(as_span(s), points);
        return py::make_tuple(c.x, c.density, c.bandwidth);
      },
      py::arg("samples"), py::arg("points") = 512, "Returns (x, density, bandwidth).");
  m.def(
      "accuracy",
      [](const Vector& truth, const Vector& pred) {
        const AccuracyReport a = accuracy(as_span(truth), as_span(pred));
        py::dict d;
        d["r2"] = a.r2;
        d["e"] = a.e;
        d["mae"] = a.mae;
        return d;
      },
      py::arg("truth"), py::arg("predicted"));

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &TrainingConfig::lambda)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_property(
          "learning_rate", [](const TrainingConfig& c) { return c.schedule.initial; },
          [](TrainingConfig& c, double v) { c.schedule.initial = v; })
      .def_property(
          "decay", [](const TrainingConfig& c) { return c.schedule.decay; },
          [](TrainingConfig& c, double v) { c.schedule.decay = v; })
      .def_property(
          "decay_interval", [](const TrainingConfig& c) { return c.schedule.interval; },
          [](TrainingConfig& c, int v) { c.schedule.interval = v; })
      .def_property(
          "norm", [](const TrainingConfig& c) { return to_string(c.norm); },
          [](TrainingConfig& c, const std::string& v) { c.norm = loss_norm_from_string(v); })
      .def_readwrite("unlabeled_batch", &TrainingConfig::unlabeled_batch)
      .def_readwrite("seed", &TrainingConfig::seed);

  py::class_<DeepAPCEModel>(m, "DeepAPCEModel")
      .def_property_readonly("dim", &DeepAPCEModel::dim)
      .def_property_readonly("order", &DeepAPCEModel::order)
      .def_property_readonly("size", &DeepAPCEModel::size)
      .def_readonly("epoch", &DeepAPCEModel::epoch)
      .def(
          "predict", [](const DeepAPCEModel& model, const Matrix& x, int threads) { return model.predict(x, threads); },
          py::arg("x"), py::arg("threads") = 1)
      .def(
          "coefficients",
          [](const DeepAPCEModel& model, const Matrix& x) {
            return model.coefficients(model.normalization.apply(x));
          },
          py::arg("x"), "Network coefficients for inputs in original units.")
      .def("to_bytes", [](const DeepAPCEModel& model) {
        const Bytes b = save_model(model);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      })
      .def_static("from_bytes", [](const py::bytes& data) {
        const std::string s = data;
        return load_model(Bytes(s.begin(), s.end()));
      });

  m.def(
      "make_model",
      [](const Matrix& pool, int order, const std::vector<int>& hidden, const std::string& activation,
         std::uint64_t seed) { return make_model(pool, order, hidden, activation_from_string(activation), seed); },
      py::arg("pool"), py::arg("order"), py::arg("hidden"), py::arg("activation") = "relu", py::arg("seed") = 0);

  m.def(
      "train",
      [](DeepAPCEModel& model, const Matrix& x, const Vector& y, const Matrix& unlabeled, const TrainingConfig& cfg) {
        TrainingResult r;
        {
          py::gil_scoped_release release;
          r = train(model, {x, y}, unlabeled, cfg);
        }
        py::list rows;
        for (const auto& h : r.history) {
          rows.append(py::make_tuple(h.epoch, h.cost.total, h.cost.gd, h.cost.ce1, h.cost.ce2m, h.learning_rate));
        }
        return rows;
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("unlabeled"), py::arg("config"),
      "Trains in place; returns (epoch, J, L_gd, L_ce1, L_ce2M, learning_rate) rows.");

  m.def("benchmark_names", &benchmark_names);
  m.def(
      "benchmark_inputs",
      [](const std::string& name, int rackwitz_n) { return get_benchmark(name, {rackwitz_n}).inputs; },
      py::arg("name"), py::arg("rackwitz_n") = 40);
  m.def(
      "benchmark_response",
      [](const std::string& name, const Matrix& x, int rackwitz_n) {
        const BenchmarkData d = evaluate_benchmark(get_benchmark(name, {rackwitz_n}), x);
        return py::make_tuple(d.x, d.y, d.excluded);
      },
      py::arg("name"), py::arg("x"), py::arg("rackwitz_n") = 40,
      "Returns (x, y, excluded) with rows outside the response domain dropped.");
}
