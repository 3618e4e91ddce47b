#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mpgcn/bench.hpp"
#include "mpgcn/config.hpp"
#include "mpgcn/gradcheck.hpp"

namespace py = pybind11;
using namespace mpgcn;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    Tensor t(arr.shape(0), arr.shape(1));
    std::memcpy(t.data.data(), arr.data(), sizeof(double) * t.data.size());
    return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    py::array_t<double> arr({t.rows, t.cols});
    std::memcpy(arr.mutable_data(), t.data.data(), sizeof(double) * t.data.size());
    return arr;
}

ArchKind arch_from_string(const std::string& arch) {
    if (arch == "gcn") return ArchKind::Sequential;
    if (arch == "resgcn") return ArchKind::Residual;
    if (arch == "mpgcn") return ArchKind::Multipath;
    throw std::invalid_argument("arch must be one of gcn, resgcn, mpgcn");
}

EdgeList edges_from_list(int64_t num_nodes, const std::vector<std::pair<int64_t, int64_t>>& edges) {
    return EdgeList{num_nodes, edges};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "graph convolution laboratory core";

    py::class_<CsrMatrix>(m, "CsrMatrix")
        .def_readonly("num_rows", &CsrMatrix::num_rows)
        .def_readonly("num_cols", &CsrMatrix::num_cols)
        .def_readonly("row_offsets", &CsrMatrix::row_offsets)
        .def_readonly("col_indices", &CsrMatrix::col_indices)
        .def_readonly("values", &CsrMatrix::values)
        .def_property_readonly("nnz", &CsrMatrix::nnz)
        .def("dense", [](const CsrMatrix& a) { return array_from_tensor(to_dense(a)); });

    m.def("build_csr", [](int64_t num_nodes, const std::vector<std::pair<int64_t, int64_t>>& edges) {
        return build_csr(edges_from_list(num_nodes, edges));
    }, py::arg("num_nodes"), py::arg("edges"));
    m.def("add_self_loops", &add_self_loops, py::arg("a"));
    m.def("symmetric_normalize", &symmetric_normalize, py::arg("a_hat"));
    m.def("spmm", [](const CsrMatrix& a, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return array_from_tensor(spmm(a, tensor_from_array(x)));
    }, py::arg("a"), py::arg("x"));

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init([](const std::string& arch, int64_t in_dim, int64_t hidden, int64_t classes,
                         int64_t depth, const std::vector<int64_t>& paths, int64_t shared_stem,
                         double dropout, bool bias) {
                 ModelSpec spec;
                 spec.kind = arch_from_string(arch);
                 spec.in_dim = in_dim;
                 spec.hidden = hidden;
                 spec.classes = classes;
                 spec.depth = depth;
                 spec.paths = paths;
                 spec.shared_stem = shared_stem;
                 spec.dropout = dropout;
                 spec.bias = bias;
                 validate_spec(spec);
                 return spec;
             }),
             py::arg("arch"), py::arg("in_dim"), py::arg("hidden"), py::arg("classes"),
             py::arg("depth") = 1, py::arg("paths") = std::vector<int64_t>{},
             py::arg("shared_stem") = 0, py::arg("dropout") = 0.5, py::arg("bias") = true)
        .def_readonly("in_dim", &ModelSpec::in_dim)
        .def_readonly("hidden", &ModelSpec::hidden)
        .def_readonly("classes", &ModelSpec::classes)
        .def_readonly("depth", &ModelSpec::depth)
        .def_readonly("paths", &ModelSpec::paths)
        .def_readonly("shared_stem", &ModelSpec::shared_stem)
        .def_readonly("dropout", &ModelSpec::dropout)
        .def_readonly("bias", &ModelSpec::bias);

    m.def("param_count", [](const ModelSpec& spec) {
        ParamCount count = param_count(spec);
        py::dict out;
        out["conv"] = count.conv;
        out["final_linear"] = count.final_linear;
        out["total"] = count.total;
        return out;
    }, py::arg("spec"));

    m.def("forward_logits", [](const ModelSpec& spec, uint64_t seed, const CsrMatrix& prop,
                               const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        Parameters params = init_params(spec, seed);
        Tape tape;
        ForwardResult fwd = forward_model(tape, spec, params, prop, tensor_from_array(x), Mode::Evaluation);
        return array_from_tensor(tape.value(fwd.logits));
    }, py::arg("spec"), py::arg("seed"), py::arg("prop"), py::arg("x"),
       "evaluation-mode logits for freshly initialized parameters");

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("num_nodes", &Dataset::num_nodes)
        .def_readonly("num_classes", &Dataset::num_classes)
        .def_readonly("labels", &Dataset::labels)
        .def_readonly("name", &Dataset::name)
        .def_readonly("skipped_citations", &Dataset::skipped_citations)
        .def_property_readonly("features", [](const Dataset& ds) { return array_from_tensor(ds.features); })
        .def_property_readonly("edges", [](const Dataset& ds) { return ds.graph.edges; })
        .def_readonly("train_mask", &Dataset::train_mask)
        .def_readonly("val_mask", &Dataset::val_mask)
        .def_readonly("test_mask", &Dataset::test_mask);

    m.def("generate_sbm", &generate_sbm, py::arg("blocks"), py::arg("per_block"),
          py::arg("p_intra"), py::arg("p_inter"), py::arg("d"), py::arg("seed"));
    m.def("load_linqs", &load_linqs, py::arg("content_path"), py::arg("cites_path"));
    m.def("make_splits", &make_splits, py::arg("dataset"), py::arg("train_per_class"),
          py::arg("val_per_class"), py::arg("seed"));
    m.def("save_cache", &save_cache, py::arg("dataset"), py::arg("path"));
    m.def("load_cache", &load_cache, py::arg("path"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](double lr, double weight_decay, int64_t epochs,
                         const std::vector<uint64_t>& seeds, double adam_beta1, double adam_beta2,
                         double adam_eps) {
                 TrainConfig cfg;
                 cfg.lr = lr;
                 cfg.weight_decay = weight_decay;
                 cfg.epochs = epochs;
                 cfg.seeds = seeds;
                 cfg.adam_beta1 = adam_beta1;
                 cfg.adam_beta2 = adam_beta2;
                 cfg.adam_eps = adam_eps;
                 return cfg;
             }),
             py::arg("lr") = 0.01, py::arg("weight_decay") = 5e-4, py::arg("epochs") = 100,
             py::arg("seeds") = std::vector<uint64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
             py::arg("adam_beta1") = 0.9, py::arg("adam_beta2") = 0.999, py::arg("adam_eps") = 1e-8)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("weight_decay", &TrainConfig::weight_decay)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("seeds", &TrainConfig::seeds);

    py::class_<EpochRecord>(m, "EpochRecord")
        .def_readonly("epoch", &EpochRecord::epoch)
        .def_readonly("train_loss", &EpochRecord::train_loss)
        .def_readonly("train_acc", &EpochRecord::train_acc)
        .def_readonly("val_acc", &EpochRecord::val_acc)
        .def_readonly("test_acc", &EpochRecord::test_acc);

    py::class_<RunMetrics>(m, "RunMetrics")
        .def_readonly("seed", &RunMetrics::seed)
        .def_readonly("records", &RunMetrics::records)
        .def_readonly("final_test_acc", &RunMetrics::final_test_acc)
        .def_readonly("epochs_to_95pct_val", &RunMetrics::epochs_to_95pct_val)
        .def_readonly("best_val_epoch_test_acc", &RunMetrics::best_val_epoch_test_acc);

    m.def("train_run", &train_run, py::arg("spec"), py::arg("dataset"), py::arg("cfg"),
          py::arg("seed"), py::call_guard<py::gil_scoped_release>());

    m.def("repeat_runs", [](const ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg,
                            std::optional<std::pair<int64_t, int64_t>> split) {
        std::optional<SplitSpec> sp;
        if (split) sp = SplitSpec{split->first, split->second};
        RepeatResult result;
        {
            py::gil_scoped_release release;
            result = repeat_runs(spec, ds, cfg, sp);
        }
        py::dict out;
        out["mean_test_acc"] = result.mean_test_acc;
        out["std_test_acc"] = result.std_test_acc;
        out["mean_epochs_to_95"] = result.mean_epochs_to_95;
        out["runs"] = result.runs;
        return out;
    }, py::arg("spec"), py::arg("dataset"), py::arg("cfg"),
       py::arg("split") = std::optional<std::pair<int64_t, int64_t>>{{20, 30}});

    m.def("gradcheck_suite", [](uint64_t seed) {
        std::vector<std::tuple<std::string, double, double, bool>> out;
        for (const auto& c : run_gradcheck_suite(seed))
            out.emplace_back(c.name, c.max_rel_err, c.tolerance, c.pass);
        return out;
    }, py::arg("seed") = 1, py::call_guard<py::gil_scoped_release>());

    m.attr("__version__") = "0.1.0";
}
