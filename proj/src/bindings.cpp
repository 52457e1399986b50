#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pidlft/model.hpp"
#include "pidlft/optimizer.hpp"
#include "pidlft/sparse_tensor.hpp"
#include "pidlft/trainer.hpp"

namespace py = pybind11;
using namespace pidlft;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse tensor completion by biased latent factorization with PID-refined SGD";

    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    py::class_<TensorShape>(m, "TensorShape")
        .def(py::init([](Index i, Index j, Index k) { return TensorShape{i, j, k}; }),
             py::arg("n_stations"), py::arg("n_metrics"), py::arg("n_slots"))
        .def_readwrite("n_stations", &TensorShape::n_stations)
        .def_readwrite("n_metrics", &TensorShape::n_metrics)
        .def_readwrite("n_slots", &TensorShape::n_slots)
        .def("cell_count", &TensorShape::cell_count)
        .def("contains", &TensorShape::contains)
        .def("__eq__", [](const TensorShape& a, const TensorShape& b) { return a == b; })
        .def("__repr__", [](const TensorShape& s) {
            return "TensorShape(" + std::to_string(s.n_stations) + ", " +
                   std::to_string(s.n_metrics) + ", " + std::to_string(s.n_slots) + ")";
        });

    py::class_<Entry>(m, "Entry")
        .def(py::init([](Index i, Index j, Index k, double value) {
                 return Entry{i, j, k, value};
             }),
             py::arg("i"), py::arg("j"), py::arg("k"), py::arg("value"))
        .def_readwrite("i", &Entry::i)
        .def_readwrite("j", &Entry::j)
        .def_readwrite("k", &Entry::k)
        .def_readwrite("value", &Entry::value)
        .def("__eq__", [](const Entry& a, const Entry& b) { return a == b; })
        .def("__repr__", [](const Entry& e) {
            std::ostringstream out;
            out << "Entry(" << e.i << ", " << e.j << ", " << e.k << ", " << e.value << ")";
            return out.str();
        });

    py::class_<SparseTensor>(m, "SparseTensor")
        .def(py::init<TensorShape, std::vector<Entry>>(), py::arg("shape"), py::arg("entries"))
        .def_property_readonly("shape", &SparseTensor::shape)
        .def_property_readonly("entries",
                               [](const SparseTensor& t) { return t.entries(); })
        .def("__len__", &SparseTensor::size);

    m.def("load_coo_file", &load_coo_file, py::arg("path"), py::arg("shape_hint") = py::none());
    m.def("save_coo_file", &save_coo_file, py::arg("tensor"), py::arg("path"));
    m.def("density", &density, py::arg("tensor"));

    py::class_<SplitRatios>(m, "SplitRatios")
        .def(py::init([](double train, double val, double test) {
                 return SplitRatios{train, val, test};
             }),
             py::arg("train") = 2.0, py::arg("val") = 2.0, py::arg("test") = 6.0)
        .def_readwrite("train", &SplitRatios::train)
        .def_readwrite("val", &SplitRatios::val)
        .def_readwrite("test", &SplitRatios::test);

    py::class_<SplitResult>(m, "SplitResult")
        .def_readonly("train", &SplitResult::train)
        .def_readonly("val", &SplitResult::val)
        .def_readonly("test", &SplitResult::test);

    m.def("split", &split, py::arg("tensor"), py::arg("ratios"), py::arg("seed"));
    m.def(
        "synth_lowrank",
        [](TensorShape shape, int rank, double dens, double noise_sd, std::uint64_t seed) {
            return synth_lowrank(shape, rank, dens, noise_sd, seed);
        },
        py::arg("shape"), py::arg("rank"), py::arg("density"), py::arg("noise_sd"),
        py::arg("seed"));

    py::class_<InitScheme>(m, "InitScheme")
        .def(py::init([](double low, double high, std::uint64_t seed) {
                 return InitScheme{low, high, seed};
             }),
             py::arg("low") = 0.0, py::arg("high") = 0.05, py::arg("seed") = 0)
        .def_readwrite("low", &InitScheme::low)
        .def_readwrite("high", &InitScheme::high)
        .def_readwrite("seed", &InitScheme::seed);

    py::class_<Model>(m, "Model")
        .def(py::init<TensorShape, int>(), py::arg("shape"), py::arg("rank"))
        .def_static("init", &Model::init, py::arg("shape"), py::arg("rank"), py::arg("scheme"))
        .def_property_readonly("shape", &Model::shape)
        .def_property_readonly("rank", &Model::rank)
        .def_readwrite("S", &Model::S)
        .def_readwrite("M", &Model::M)
        .def_readwrite("T", &Model::T)
        .def_readwrite("a", &Model::a)
        .def_readwrite("b", &Model::b)
        .def_readwrite("c", &Model::c)
        .def("predict", &Model::predict, py::arg("i"), py::arg("j"), py::arg("k"))
        .def("loss", &Model::loss, py::arg("data"), py::arg("lambda_"),
             py::arg("bias_reg_outside_rank") = false);

    m.def("save_model_file", &save_model_file, py::arg("model"), py::arg("path"));
    m.def("load_model_file", &load_model_file, py::arg("path"));

    py::class_<PidGains>(m, "PidGains")
        .def(py::init([](double k_p, double k_i, double k_d, double alpha_i, double alpha_d) {
                 return PidGains{k_p, k_i, k_d, alpha_i, alpha_d};
             }),
             py::arg("k_p") = 1.0, py::arg("k_i") = 0.0, py::arg("k_d") = 0.0,
             py::arg("alpha_i") = 0.5, py::arg("alpha_d") = 0.5)
        .def_readwrite("k_p", &PidGains::k_p)
        .def_readwrite("k_i", &PidGains::k_i)
        .def_readwrite("k_d", &PidGains::k_d)
        .def_readwrite("alpha_i", &PidGains::alpha_i)
        .def_readwrite("alpha_d", &PidGains::alpha_d);

    py::class_<PidState>(m, "PidState")
        .def(py::init<std::size_t, double>(), py::arg("n_entries"),
             py::arg("integral_limit") = 1e4)
        .def("reset", &PidState::reset)
        .def("__len__", &PidState::size)
        .def_readwrite("integral", &PidState::integral)
        .def_readwrite("prev_error", &PidState::prev_error)
        .def_readwrite("integral_limit", &PidState::integral_limit);

    m.def("nonlinear_map", &nonlinear_map, py::arg("x"), py::arg("alpha"));
    m.def("instant_error", &instant_error, py::arg("model"), py::arg("entry"));
    m.def("refined_error", &refined_error, py::arg("state"), py::arg("slot"), py::arg("e_now"),
          py::arg("gains"));
    m.def("sgd_step", &sgd_step, py::arg("model"), py::arg("entry"), py::arg("eta"),
          py::arg("lambda_"));
    m.def("pid_sgd_step", &pid_sgd_step, py::arg("model"), py::arg("state"), py::arg("slot"),
          py::arg("entry"), py::arg("eta"), py::arg("lambda_"), py::arg("gains"));

    py::enum_<OptimizerKind>(m, "OptimizerKind")
        .value("sgd", OptimizerKind::sgd)
        .value("pid_linear", OptimizerKind::pid_linear)
        .value("pid_nonlinear", OptimizerKind::pid_nonlinear);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("eta", &TrainConfig::eta)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("rank", &TrainConfig::rank)
        .def_readwrite("gains", &TrainConfig::gains)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("tol", &TrainConfig::tol)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("shuffle", &TrainConfig::shuffle)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("optimizer", &TrainConfig::optimizer)
        .def_readwrite("integral_limit", &TrainConfig::integral_limit);

    py::class_<EpochStat>(m, "EpochStat")
        .def_readonly("epoch", &EpochStat::epoch)
        .def_readonly("train_rmse", &EpochStat::train_rmse)
        .def_readonly("val_rmse", &EpochStat::val_rmse)
        .def_readonly("seconds", &EpochStat::seconds);

    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("epochs_run", &TrainReport::epochs_run)
        .def_readonly("converged", &TrainReport::converged)
        .def_readonly("curve", &TrainReport::curve)
        .def_readonly("final_val_rmse", &TrainReport::final_val_rmse);

    m.def("train", &train, py::arg("model"), py::arg("train_set"), py::arg("val_set"),
          py::arg("config"));
    m.def("rmse", &rmse, py::arg("model"), py::arg("data"));
    m.def("save_report_file", &save_report_file, py::arg("report"), py::arg("path"));

    py::class_<CompareRow>(m, "CompareRow")
        .def_readonly("config", &CompareRow::config)
        .def_readonly("report", &CompareRow::report)
        .def_readonly("test_rmse", &CompareRow::test_rmse);

    m.def("compare", &compare, py::arg("variants"), py::arg("train_set"), py::arg("val_set"),
          py::arg("test_set"), py::arg("shared_init"));

    py::class_<SearchGrid>(m, "SearchGrid")
        .def(py::init<>())
        .def_readwrite("etas", &SearchGrid::etas)
        .def_readwrite("lambdas", &SearchGrid::lambdas)
        .def_readwrite("gains", &SearchGrid::gains)
        .def_readwrite("base", &SearchGrid::base);

    py::class_<GridResult>(m, "GridResult")
        .def_readonly("config", &GridResult::config)
        .def_readonly("val_rmse", &GridResult::val_rmse)
        .def_readonly("epochs", &GridResult::epochs);

    m.def("grid_search", &grid_search, py::arg("grid"), py::arg("train_set"), py::arg("val_set"),
          py::arg("init"));
}
