#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "coldrec/baselines.hpp"
#include "coldrec/data_io.hpp"
#include "coldrec/diagnostics.hpp"
#include "coldrec/error.hpp"
#include "coldrec/evaluator.hpp"
#include "coldrec/fbsm.hpp"
#include "coldrec/trainer.hpp"

namespace py = pybind11;
using namespace coldrec;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

ItemFeatureMatrix csr_to_features(const IndexArray& indptr, const IndexArray& indices,
                                  const DoubleArray& data, std::size_t n_features) {
    const auto p = indptr.unchecked<1>();
    const auto ix = indices.unchecked<1>();
    const auto v = data.unchecked<1>();
    if (p.shape(0) < 1 || ix.shape(0) != v.shape(0) || p(p.shape(0) - 1) != ix.shape(0)) {
        throw DimensionError("csr arrays are inconsistent");
    }
    std::vector<SparseVector> rows;
    rows.reserve(static_cast<std::size_t>(p.shape(0) - 1));
    for (py::ssize_t r = 0; r + 1 < p.shape(0); ++r) {
        std::vector<std::pair<FeatureId, double>> entries;
        for (auto k = p(r); k < p(r + 1); ++k) {
            if (ix(k) < 0) throw DimensionError("negative feature index");
            entries.emplace_back(static_cast<FeatureId>(ix(k)), v(k));
        }
        rows.push_back(SparseVector::from_entries(std::move(entries)));
    }
    return ItemFeatureMatrix(n_features, std::move(rows));
}

py::array_t<double> to_numpy(std::span<const double> values) {
    py::array_t<double> out(static_cast<py::ssize_t>(values.size()));
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

py::array_t<double> factors_to_numpy(const DenseFactorMatrix& v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.latent_dim()),
                             static_cast<py::ssize_t>(v.n_features())});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < v.latent_dim(); ++k)
        for (std::size_t p = 0; p < v.n_features(); ++p) w(k, p) = v(k, p);
    return out;
}

FbsmModel model_from_numpy(const DoubleArray& diagonal, const DoubleArray& factors) {
    const auto d = diagonal.unchecked<1>();
    std::vector<double> dv(d.data(0), d.data(0) + d.shape(0));
    if (factors.ndim() != 2) throw DimensionError("factors must be a 2-d array (h, n_features)");
    const auto f = factors.unchecked<2>();
    DenseFactorMatrix v(static_cast<std::size_t>(f.shape(0)), static_cast<std::size_t>(f.shape(1)));
    for (py::ssize_t k = 0; k < f.shape(0); ++k)
        for (py::ssize_t p = 0; p < f.shape(1); ++p) v(k, p) = f(k, p);
    return FbsmModel(std::move(dv), std::move(v));
}

TrainConfig make_config(const py::kwargs& kw) {
    TrainConfig c;
    for (const auto& [key, value] : kw) {
        const auto k = key.cast<std::string>();
        if (k == "alpha_d") c.alpha_d = value.cast<double>();
        else if (k == "alpha_v") c.alpha_v = value.cast<double>();
        else if (k == "lambda_v") c.lambda_v = value.cast<double>();
        else if (k == "beta_d") c.beta_d = value.cast<double>();
        else if (k == "latent_dim") c.latent_dim = value.cast<std::size_t>();
        else if (k == "max_epochs") c.max_epochs = value.cast<std::size_t>();
        else if (k == "patience") c.patience = value.cast<std::size_t>();
        else if (k == "seed") c.seed = value.cast<std::uint64_t>();
        else if (k == "eval_n") c.eval_n = value.cast<std::size_t>();
        else if (k == "workers") c.workers = value.cast<std::size_t>();
        else if (k == "lazy_regularization") c.lazy_regularization = value.cast<bool>();
        else if (k == "n_functions") c.n_functions = value.cast<std::size_t>();
        else if (k == "mu_w") c.mu_w = value.cast<double>();
        else if (k == "mu_m") c.mu_m = value.cast<double>();
        else throw ConfigError("unknown training option '" + k + "'");
    }
    return c;
}

py::list log_to_list(const std::vector<EpochLog>& log) {
    py::list out;
    for (const auto& row : log) {
        py::dict d;
        d["epoch"] = row.epoch;
        d["loss"] = row.loss;
        d["val_rec"] = row.val_rec;
        d["val_dcg"] = row.val_dcg;
        d["triplets"] = row.triplets;
        out.append(d);
    }
    return out;
}

py::dict report_to_dict(const EvalReport& r) {
    py::dict d;
    d["n"] = r.n;
    d["mean_rec"] = r.mean_rec;
    d["mean_dcg"] = r.mean_dcg;
    d["users"] = r.n_users_evaluated;
    return d;
}

}  // namespace

PYBIND11_MODULE(_coldrec, m) {
    m.doc() = "Feature-based similarity models for cold-start item recommendation";

    py::register_exception<Error>(m, "ColdrecError", PyExc_RuntimeError);

    py::class_<ItemFeatureMatrix>(m, "FeatureMatrix")
        .def(py::init(&csr_to_features), py::arg("indptr"), py::arg("indices"), py::arg("data"),
             py::arg("n_features"), "Build from CSR arrays, one row per item.")
        .def_property_readonly("n_items", &ItemFeatureMatrix::n_items)
        .def_property_readonly("n_features", &ItemFeatureMatrix::n_features)
        .def_property_readonly("nnz", &ItemFeatureMatrix::nnz)
        .def("l2_normalized", &ItemFeatureMatrix::l2_normalized)
        .def("row", [](const ItemFeatureMatrix& f, ItemId i) {
            const auto& r = f.row(i);
            std::vector<std::int64_t> idx(r.indices().begin(), r.indices().end());
            return py::make_tuple(py::array_t<std::int64_t>(static_cast<py::ssize_t>(idx.size()), idx.data()),
                                  to_numpy(r.values()));
        });

    m.def("load_features", [](const std::string& path) {
        auto loaded = load_sparse_features(path);
        return py::make_tuple(loaded.items.names(), std::move(loaded.features));
    }, py::arg("path"), "Read an `item<TAB>feature<TAB>value` file; returns (item names, matrix).");

    py::class_<PreferenceData>(m, "Preferences")
        .def(py::init([](std::vector<std::vector<ItemId>> positives, std::size_t n_items) {
                 const std::size_t n_users = positives.size();
                 return PreferenceData(n_users, n_items, std::move(positives));
             }),
             py::arg("positives"), py::arg("n_items"), "Positive item lists, one per user.")
        .def_property_readonly("n_users", &PreferenceData::n_users)
        .def_property_readonly("n_items", &PreferenceData::n_items)
        .def_property_readonly("nnz", &PreferenceData::nnz)
        .def("positives", [](const PreferenceData& p, UserId u) {
            const auto s = p.positives(u);
            return std::vector<ItemId>(s.begin(), s.end());
        });

    py::class_<FbsmModel>(m, "FbsmModel")
        .def(py::init(&model_from_numpy), py::arg("diagonal"), py::arg("factors"))
        .def_static("initialized", &FbsmModel::initialized, py::arg("n_features"),
                    py::arg("latent_dim"), py::arg("seed") = 1)
        .def_static("load", [](const std::string& path) {
            auto loaded = load_model(path);
            if (loaded.kind != ModelKind::fbsm) throw FormatError(path + ": not an FBSM model");
            return loaded.fbsm;
        })
        .def("save", [](const FbsmModel& model, const std::string& path) { save_model(path, model); })
        .def_property_readonly("n_features", &FbsmModel::n_features)
        .def_property_readonly("latent_dim", &FbsmModel::latent_dim)
        .def_property_readonly("diagonal", [](const FbsmModel& model) { return to_numpy(model.diagonal()); })
        .def_property_readonly("factors", [](const FbsmModel& model) { return factors_to_numpy(model.factors()); })
        .def("similarity", [](const FbsmModel& model, const ItemFeatureMatrix& f, ItemId i, ItemId j) {
            return similarity(model, f.row(i), f.row(j));
        })
        .def("__eq__", [](const FbsmModel& a, const FbsmModel& b) { return a == b; });

    m.def("score", [](const FbsmModel& model, const ItemFeatureMatrix& features,
                      const PreferenceData& prefs, UserId user, std::vector<ItemId> items) {
        const UserProfiles profiles(features, prefs);
        const FbsmScorer scorer(model, features, profiles);
        std::vector<double> out(items.size());
        scorer.score(user, items, out);
        return to_numpy(out);
    }, py::arg("model"), py::arg("features"), py::arg("train"), py::arg("user"), py::arg("items"));

    m.def("train_fbsm", [](const ItemFeatureMatrix& features, const PreferenceData& train,
                           std::vector<ItemId> train_items, const PreferenceData& validation,
                           std::vector<ItemId> validation_items, const py::kwargs& kw) {
        const TrainConfig config = make_config(kw);
        const TrainingData data{features, train, train_items, validation, validation_items};
        TrainResult<FbsmModel> r;
        {
            py::gil_scoped_release release;
            r = train_fbsm(data, config);
        }
        py::dict out;
        out["model"] = std::move(r.model);
        out["log"] = log_to_list(r.log);
        out["best_epoch"] = r.best_epoch;
        out["stop_reason"] = r.stop_reason;
        return out;
    }, py::arg("features"), py::arg("train"), py::arg("train_items"), py::arg("validation"),
       py::arg("validation_items"),
       "BPR training with early stopping. Keyword options mirror the `train` command.");

    m.def("evaluate", [](const py::object& model, const ItemFeatureMatrix& features,
                         const PreferenceData& train, const PreferenceData& test,
                         std::vector<ItemId> candidates, std::size_t n, std::size_t workers) {
        EvalOptions opt;
        opt.workers = workers;
        if (py::isinstance<py::str>(model)) {
            if (model.cast<std::string>() != "cosim") throw ConfigError("model must be an FbsmModel or 'cosim'");
            const CosineScorer scorer(features, train);
            py::gil_scoped_release release;
            return evaluate(scorer, test, candidates, n, opt);
        }
        const auto& fbsm = model.cast<const FbsmModel&>();
        const UserProfiles profiles(features, train);
        const FbsmScorer scorer(fbsm, features, profiles);
        py::gil_scoped_release release;
        return evaluate(scorer, test, candidates, n, opt);
    }, py::arg("model"), py::arg("features"), py::arg("train"), py::arg("test"), py::arg("candidates"),
       py::arg("n") = 10, py::arg("workers") = 1);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("n", &EvalReport::n)
        .def_readonly("mean_rec", &EvalReport::mean_rec)
        .def_readonly("mean_dcg", &EvalReport::mean_dcg)
        .def_readonly("users", &EvalReport::n_users_evaluated)
        .def("as_dict", &report_to_dict);

    m.def("gradcheck", [](std::size_t n_features, std::size_t latent_dim, std::size_t trials,
                          std::size_t max_nnz, std::size_t profile_size, double step, std::uint64_t seed,
                          bool inject_sign_flip) {
        GradcheckOptions o;
        o.n_features = n_features;
        o.latent_dim = latent_dim;
        o.trials = trials;
        o.max_nnz = max_nnz;
        o.profile_size = profile_size;
        o.step = step;
        o.seed = seed;
        o.inject_sign_flip = inject_sign_flip;
        const auto r = run_gradcheck(o);
        py::dict d;
        d["trials"] = r.trials;
        d["max_error_d"] = r.max_error_d;
        d["max_error_v"] = r.max_error_v;
        d["max_error_rank"] = r.max_error_rank;
        d["passed"] = r.passed;
        return d;
    }, py::arg("n_features") = 32, py::arg("latent_dim") = 4, py::arg("trials") = 100,
       py::arg("max_nnz") = 16, py::arg("profile_size") = 5, py::arg("step") = 1e-6,
       py::arg("seed") = 1, py::arg("inject_sign_flip") = false);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
            py::gil_scoped_release release;
            code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run a command-line invocation in process; returns (exit code, stdout, stderr).");
}
