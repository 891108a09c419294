#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "flowgnn/error.hpp"
#include "flowgnn/graph.hpp"
#include "flowgnn/ingest.hpp"
#include "flowgnn/metrics.hpp"
#include "flowgnn/pipeline.hpp"
#include "flowgnn/sampling.hpp"
#include "flowgnn/synthetic.hpp"

namespace py = pybind11;
using namespace flowgnn;

namespace {

flowgnn::Overrides overrides_from(const py::dict& d) {
  flowgnn::Overrides o;
  for (auto [k, v] : d) {
    const auto key = k.cast<std::string>();
    if (v.is_none()) continue;
    if (key == "lr") o.lr = v.cast<double>();
    else if (key == "batch_size") o.batch_size = v.cast<std::size_t>();
    else if (key == "variant") o.variant = v.cast<std::string>();
    else if (key == "seed") o.seed = v.cast<std::uint64_t>();
    else if (key == "heads") o.heads = v.cast<int>();
    else if (key == "layers") o.layers = v.cast<int>();
    else if (key == "sample_size") o.sample_size = v.cast<int>();
    else if (key == "hops") o.hops = v.cast<int>();
    else if (key == "epochs") o.epochs = v.cast<int>();
    else if (key == "checkpoint") o.checkpoint = v.cast<std::string>();
    else if (key == "split") o.split = v.cast<std::string>();
    else if (key == "output") o.output = v.cast<std::string>();
    else throw ConfigError("unknown override '" + key + "'");
  }
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph neural network intrusion detection over flow records";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<BipartiteGraph>(m, "BipartiteGraph")
      .def_property_readonly("num_sources", &BipartiteGraph::num_sources)
      .def_property_readonly("num_destinations", &BipartiteGraph::num_destinations)
      .def_property_readonly("num_edges", &BipartiteGraph::num_edges)
      .def_property_readonly("virtual_sources", &BipartiteGraph::virtual_sources)
      .def_property_readonly("virtual_destinations", &BipartiteGraph::virtual_destinations)
      .def("degree", &BipartiteGraph::degree)
      .def("endpoints", [](const BipartiteGraph& g, std::size_t e) {
        if (e >= g.num_edges()) throw py::index_error("edge out of range");
        return std::make_pair(g.edge(e).src, g.edge(e).dst);
      })
      .def("incident", [](const BipartiteGraph& g, std::size_t v) {
        if (v >= g.num_nodes()) throw py::index_error("node out of range");
        auto s = g.incident(v);
        return std::vector<std::size_t>(s.begin(), s.end());
      })
      .def("line_edge_count", [](const BipartiteGraph& g) { return line_edge_count(g); })
      .def("line_graph_edges", [](const BipartiteGraph& g) { return build_line_graph(g).num_edges(); })
      .def("degree_histogram", [](const BipartiteGraph& g) { return degree_histogram(g); });

  m.def("build_graph",
        [](const std::vector<std::string>& src, const std::vector<std::string>& dst, const std::vector<int>& labels) {
          return build_bipartite(src, dst, labels);
        },
        py::arg("src_keys"), py::arg("dst_keys"), py::arg("labels") = std::vector<int>{});
  m.def("augment_virtual_nodes", &augment_virtual_nodes, py::arg("graph"), py::arg("seed"));

  m.def("sample_khop",
        [](const BipartiteGraph& g, const std::vector<std::size_t>& batch, int hops, int sample_size,
           std::uint64_t seed) { return sample_khop(g, batch, hops, sample_size, seed).layers; },
        py::arg("graph"), py::arg("batch"), py::arg("hops") = 2, py::arg("sample_size") = 8, py::arg("seed") = 0,
        "Edge sets per hop; element 0 is the widest, the last is the batch.");

  m.def("split_dataset",
        [](std::size_t n, std::uint64_t seed) {
          auto s = split_dataset(n, seed);
          return py::make_tuple(s.train, s.validation, s.test);
        },
        py::arg("n"), py::arg("seed"));

  m.def("f1_scores",
        [](const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t classes) {
          auto r = f1_scores(confusion_matrix(truth, predicted, classes));
          return py::module_::import("json").attr("loads")(r.to_json().dump());
        },
        py::arg("truth"), py::arg("predicted"), py::arg("classes"));

  m.def("write_synthetic",
        [](const std::string& csv, const std::string& schema, std::size_t flows, std::size_t classes,
           double majority, std::size_t informative, std::uint64_t seed) {
          SyntheticSpec spec;
          spec.flows = flows;
          spec.classes = classes;
          spec.majority_fraction = majority;
          spec.informative = informative;
          spec.seed = seed;
          write_synthetic_csv(spec, csv);
          write_synthetic_schema(spec, schema);
        },
        py::arg("csv"), py::arg("schema"), py::arg("flows") = 2000, py::arg("classes") = 2,
        py::arg("majority") = 0.9, py::arg("informative") = 10, py::arg("seed") = 7);

  m.def("run_command",
        [](const std::string& command, const std::string& manifest, const py::dict& overrides) {
          auto out = run_command(command, RunManifest::load(manifest), overrides_from(overrides));
          return py::module_::import("json").attr("loads")(out.dump());
        },
        py::arg("command"), py::arg("manifest"), py::arg("overrides") = py::dict());
}
