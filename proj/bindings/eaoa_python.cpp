#include "eaoa/config.hpp"
#include "eaoa/density.hpp"
#include "eaoa/energy.hpp"
#include "eaoa/harness.hpp"
#include "eaoa/sampler.hpp"
#include "eaoa/score_fusion.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using eaoa::Matrix;

namespace {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

IntMatrix to_matrix(const eaoa::density::ArrowCounts& a) {
    IntMatrix out(static_cast<Eigen::Index>(a.num_unlabeled()),
                  static_cast<Eigen::Index>(a.num_classes()));
    for (std::size_t i = 0; i < a.num_unlabeled(); ++i) {
        for (std::size_t c = 0; c < a.num_classes(); ++c) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = a.at(i, c);
        }
    }
    return out;
}

eaoa::density::ArrowCounts from_matrix(const IntMatrix& m) {
    eaoa::density::ArrowCounts a(static_cast<std::size_t>(m.rows()),
                                 static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            a.at(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = m(i, c);
        }
    }
    return a;
}

py::dict gmm_dict(const eaoa::fusion::Gmm1d& g) {
    py::dict d;
    d["weights"] = g.weights;
    d["means"] = g.means;
    d["variances"] = g.variances;
    d["low_component"] = g.low_component;
    return d;
}

eaoa::fusion::Gmm1d gmm_from(const py::dict& d) {
    eaoa::fusion::Gmm1d g;
    g.weights = d["weights"].cast<std::array<double, 2>>();
    g.means = d["means"].cast<std::array<double, 2>>();
    g.variances = d["variances"].cast<std::array<double, 2>>();
    g.low_component = g.means[0] <= g.means[1] ? 0 : 1;
    return g;
}

}  // namespace

PYBIND11_MODULE(_eaoa, m) {
    m.doc() = "Energy-based active open-set annotation: core operations";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<eaoa::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<eaoa::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<eaoa::ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<eaoa::NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("free_energy", [](const std::vector<double>& v) { return eaoa::energy::free_energy(v); },
          py::arg("logits"));
    m.def(
        "epistemic_uncertainty",
        [](const std::vector<double>& v) {
            const auto b = eaoa::energy::epistemic_uncertainty(v);
            return py::make_tuple(b.e_known, b.e_unknown, b.eu);
        },
        py::arg("detector_logits"), "Returns (e_known, e_unknown, eu).");
    m.def(
        "aleatoric_uncertainty",
        [](const std::vector<double>& v) { return eaoa::energy::aleatoric_uncertainty(v); },
        py::arg("classifier_logits"));
    m.def(
        "margin_energy_loss",
        [](const std::vector<double>& v, bool is_known, double m_known, double m_unknown,
           bool use_eu) {
            eaoa::energy::MarginConfig cfg;
            cfg.m_known = m_known;
            cfg.m_unknown = m_unknown;
            cfg.use_eu = use_eu;
            cfg.validate();
            const auto r = eaoa::energy::margin_energy_loss(v, is_known, cfg);
            return py::make_tuple(r.loss, r.grad);
        },
        py::arg("detector_logits"), py::arg("is_known"), py::arg("m_known") = -25.0,
        py::arg("m_unknown") = -7.0, py::arg("use_eu") = false, "Returns (loss, grad).");

    m.def(
        "reverse_knn_arrows",
        [](const Matrix& labeled, const std::vector<int>& labels, const Matrix& unlabeled,
           std::size_t k, std::size_t num_classes) {
            return to_matrix(eaoa::density::reverse_knn_arrows({labeled, "python"}, labels,
                                                               {unlabeled, "python"}, k,
                                                               num_classes));
        },
        py::arg("labeled"), py::arg("labels"), py::arg("unlabeled"), py::arg("k"),
        py::arg("num_classes"), "Arrow counts, one row per unlabeled example.");
    m.def(
        "data_driven_eu",
        [](const IntMatrix& arrows, double smoothing) {
            return eaoa::density::data_driven_eu(from_matrix(arrows), smoothing);
        },
        py::arg("arrows"), py::arg("smoothing") = 1.0);

    m.def(
        "fit_gmm",
        [](const std::vector<double>& scores, int max_iters, double tol, double variance_floor) {
            const auto fit = eaoa::fusion::fit_gmm(scores, {max_iters, tol, variance_floor});
            py::dict d = gmm_dict(fit.model);
            d["log_likelihood"] = fit.log_likelihood;
            d["converged"] = fit.converged;
            return d;
        },
        py::arg("scores"), py::arg("max_iters") = 200, py::arg("tol") = 1e-8,
        py::arg("variance_floor") = 1e-6);
    m.def(
        "to_probabilistic",
        [](const py::dict& model, const std::vector<double>& scores) {
            return eaoa::fusion::to_probabilistic(gmm_from(model), scores);
        },
        py::arg("model"), py::arg("scores"));
    m.def(
        "fuse_eu",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return eaoa::fusion::fuse_eu(a, b);
        },
        py::arg("eu_learning_prob"), py::arg("eu_data_prob"));

    m.def(
        "select",
        [](const std::vector<double>& eu, const std::vector<double>& au, double k,
           std::size_t budget) {
            const auto q = eaoa::sampler::select(eu, au, k, budget);
            return py::make_tuple(q.indices, q.stage1_indices);
        },
        py::arg("eu"), py::arg("au"), py::arg("k"), py::arg("budget"),
        "Returns (queried positions, candidate positions).");
    m.def(
        "update_k",
        [](double k, double realized_precision, double target_precision, double amplitude,
           double threshold) {
            eaoa::sampler::SamplerState s{k, target_precision, amplitude, threshold, {}};
            s.validate();
            eaoa::sampler::update_k(s, realized_precision);
            return s.k;
        },
        py::arg("k"), py::arg("realized_precision"), py::arg("target_precision") = 0.6,
        py::arg("amplitude") = 1.0, py::arg("threshold") = 0.05);

    m.def("default_config_json", [] { return eaoa::default_config_json().dump(); });
    m.def(
        "run_experiment_json",
        [](const std::string& config_json, const std::string& out_dir, int jobs) {
            auto base = eaoa::default_config_json();
            const auto patch = nlohmann::json::parse(config_json, nullptr, false);
            if (patch.is_discarded()) {
                throw eaoa::ValidationError("config is not valid JSON");
            }
            eaoa::merge_config(base, patch);
            const auto cfg = eaoa::ExperimentConfig::from_json(base);
            py::gil_scoped_release release;
            return eaoa::harness::run_experiment(cfg, out_dir, jobs).summary.dump();
        },
        py::arg("config_json"), py::arg("out_dir") = "", py::arg("jobs") = 1,
        "Run an experiment from a (partial) JSON config; returns the summary as JSON text.");
}
