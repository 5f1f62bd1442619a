#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "nrc/bench.hpp"
#include "nrc/classifier.hpp"
#include "nrc/data_io.hpp"
#include "nrc/preprocess.hpp"
#include "nrc/solvers.hpp"

namespace py = pybind11;

namespace {

using farray = py::array_t<double, py::array::f_style | py::array::forcecast>;

nrc::DenseMatrix to_matrix(const farray& a) {
  if (a.ndim() != 2) throw nrc::DimensionMismatch("expected a 2-d array");
  nrc::DenseMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

nrc::Vector to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw nrc::DimensionMismatch("expected a 1-d array");
  return nrc::Vector(a.data(), a.data() + a.size());
}

py::array_t<double> from_vector(const nrc::Vector& v) {
  py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> from_matrix(const nrc::DenseMatrix& m) {
  py::array_t<double, py::array::f_style> out(
      {static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::dict result_dict(const nrc::CodingResult& res) {
  py::dict d;
  d["coefficients"] = from_vector(res.coefficients);
  d["iterations"] = res.iterations;
  d["converged"] = res.converged;
  return d;
}

nrc::SolverConfig make_config(double rho, std::size_t max_iters, double tol, double lam) {
  nrc::SolverConfig cfg;
  cfg.rho = rho;
  cfg.max_iters = max_iters;
  cfg.tol = tol;
  cfg.lambda = lam;
  return cfg;
}

// python-facing wrapper bundling the classifier with its optional projection
struct PyClassifier {
  std::size_t pca_dim = 0;
  std::optional<nrc::PcaModel> pca;
  nrc::FittedClassifier clf;

  nrc::DenseMatrix project(const farray& queries) const {
    nrc::DenseMatrix q = to_matrix(queries);
    if (pca) return nrc::pca_transform(*pca, q);
    return q;
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Representation-based classification: NNLS (ADMM), ridge, and lasso coders";

  py::register_exception<nrc::Error>(m, "NrcError", PyExc_RuntimeError);

  m.def(
      "nnls",
      [](const farray& x, const py::array& y, double rho, std::size_t max_iters, double tol) {
        return result_dict(nrc::nnls_admm(to_matrix(x), to_vector(y), make_config(rho, max_iters, tol, 0.0)));
      },
      py::arg("x"), py::arg("y"), py::arg("rho") = 1.0, py::arg("max_iters") = 5000,
      py::arg("tol") = 1e-10,
      "Nonnegative least squares min ||y - Xc||^2 s.t. c >= 0 via ADMM. Columns of x are atoms.");

  m.def(
      "nnls_oracle",
      [](const farray& x, const py::array& y) {
        return from_vector(nrc::nnls_oracle(to_matrix(x), to_vector(y)));
      },
      py::arg("x"), py::arg("y"),
      "Exact NNLS by support enumeration (testing aid, <= 20 columns).");

  m.def(
      "ridge",
      [](const farray& x, const py::array& y, double lam) {
        return from_vector(nrc::ridge_code(to_matrix(x), to_vector(y), lam));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"),
      "Closed-form ridge coding (X^T X + lam I)^{-1} X^T y.");

  m.def(
      "lasso",
      [](const farray& x, const py::array& y, double lam, double rho, std::size_t max_iters,
         double tol) {
        return result_dict(nrc::lasso_admm(to_matrix(x), to_vector(y), make_config(rho, max_iters, tol, lam)));
      },
      py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("rho") = 1.0,
      py::arg("max_iters") = 5000, py::arg("tol") = 1e-10,
      "l1-regularized coding via the same ADMM splitting.");

  m.def(
      "soft_threshold",
      [](const py::array& v, double kappa) {
        return from_vector(nrc::soft_threshold(to_vector(v), kappa));
      },
      py::arg("v"), py::arg("kappa"));

  py::class_<PyClassifier>(m, "Classifier")
      .def(py::init([](const std::string& coder, double rho, std::size_t max_iters, double tol,
                       double lam, std::size_t pca_dim) {
             auto self = std::make_unique<PyClassifier>();
             self->clf.coder = nrc::coder_from_name(coder);
             self->clf.config = make_config(rho, max_iters, tol, lam);
             self->pca_dim = pca_dim;
             return self;
           }),
           py::arg("coder") = "nnls", py::arg("rho") = 1.0, py::arg("max_iters") = 5,
           py::arg("tol") = 1e-6, py::arg("lam") = 0.0, py::arg("pca_dim") = 0)
      .def(
          "fit",
          [](PyClassifier& self, const farray& x, const std::vector<int>& labels) -> PyClassifier& {
            nrc::DenseMatrix feats = to_matrix(x);
            if (self.pca_dim > 0) {
              self.pca = nrc::pca_fit(feats, self.pca_dim);
              feats = nrc::pca_transform(*self.pca, feats);
            }
            const auto data = nrc::LabeledDataset::from_raw(std::move(feats), labels);
            self.clf = nrc::fit(data, self.clf.coder, self.clf.config);
            return self;
          },
          py::arg("x"), py::arg("labels"), py::return_value_policy::reference_internal,
          "Fit on a D x N matrix whose columns are samples.")
      .def(
          "predict",
          [](const PyClassifier& self, const farray& queries) {
            const nrc::DenseMatrix q = self.project(queries);
            const auto preds = nrc::predict_batch(self.clf, q);
            py::array_t<int> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(preds.size())});
            auto* p = out.mutable_data();
            for (std::size_t j = 0; j < preds.size(); ++j)
              p[j] = self.clf.class_value(preds[j].label);
            return out;
          },
          py::arg("queries"), "Predicted class values for a D x M query matrix.")
      .def(
          "predict_one",
          [](const PyClassifier& self, const py::array& y) {
            nrc::Vector q = to_vector(y);
            if (self.pca) {
              nrc::DenseMatrix one(q.size(), 1);
              std::copy(q.begin(), q.end(), one.col(0).begin());
              const auto t = nrc::pca_transform(*self.pca, one);
              q.assign(t.col(0).begin(), t.col(0).end());
            }
            const auto pred = nrc::predict(self.clf, q);
            return py::make_tuple(self.clf.class_value(pred.label), from_vector(pred.residuals),
                                  from_vector(pred.coefficients));
          },
          py::arg("y"), "(label, residuals, coefficients) for a single query.")
      .def("save",
           [](const PyClassifier& self, const std::string& path) {
             nrc::save_model(path, self.clf, self.pca ? &*self.pca : nullptr);
           })
      .def_static("load",
                  [](const std::string& path) {
                    auto loaded = nrc::load_model(path);
                    auto self = std::make_unique<PyClassifier>();
                    self->pca = std::move(loaded.pca);
                    self->clf = std::move(loaded.classifier);
                    return self;
                  })
      .def_property_readonly("dictionary",
                             [](const PyClassifier& self) { return from_matrix(self.clf.dictionary); })
      .def_property_readonly("classes",
                             [](const PyClassifier& self) { return self.clf.class_values; })
      .def_property_readonly("coder",
                             [](const PyClassifier& self) { return nrc::coder_name(self.clf.coder); });

  py::class_<nrc::PcaModel>(m, "PCA")
      .def_static(
          "fit", [](const farray& x, std::size_t d) { return nrc::pca_fit(to_matrix(x), d); },
          py::arg("x"), py::arg("d"))
      .def(
          "transform",
          [](const nrc::PcaModel& self, const farray& x) {
            return from_matrix(nrc::pca_transform(self, to_matrix(x)));
          },
          py::arg("x"))
      .def_property_readonly("mean", [](const nrc::PcaModel& self) { return from_vector(self.mean); })
      .def_property_readonly("components",
                             [](const nrc::PcaModel& self) { return from_matrix(self.components); })
      .def_property_readonly("explained_variance", [](const nrc::PcaModel& self) {
        return from_vector(self.explained_variance);
      });

  m.def(
      "read_idx",
      [](const std::string& path) {
        const auto data = nrc::read_idx(path);
        py::dict d;
        if (data.kind == nrc::IdxKind::Images) {
          d["kind"] = "images";
          d["images"] = from_matrix(data.images);
        } else {
          d["kind"] = "labels";
          d["labels"] = data.labels;
        }
        return d;
      },
      py::arg("path"), "Parse one IDX file (plain or gzip).");

  m.attr("__version__") = "0.1.0";
}
