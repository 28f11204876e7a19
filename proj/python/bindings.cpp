#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "json.hpp"
#include "videograph/analysis.hpp"
#include "videograph/cli.hpp"
#include "videograph/errors.hpp"
#include "videograph/feature_file.hpp"
#include "videograph/gradient_suite.hpp"
#include "videograph/kmeans.hpp"
#include "videograph/metrics.hpp"
#include "videograph/model.hpp"
#include "videograph/sobol.hpp"

namespace py = pybind11;
using namespace videograph;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

VideoGraphConfig parse_model_config(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  return (j.contains("model") ? j.at("model") : j).get<VideoGraphConfig>();
}

py::dict graph_to_dict(const ExtractedGraph& g) {
  py::dict d;
  d["class_id"] = g.class_id;
  d["node_importance"] = g.node_importance;
  Array edges({static_cast<py::ssize_t>(g.num_nodes), static_cast<py::ssize_t>(g.num_nodes)});
  std::copy(g.edge_weights.begin(), g.edge_weights.end(), edges.mutable_data());
  d["edge_weights"] = edges;
  return d;
}

ExtractedGraph graph_from_arrays(const std::vector<double>& importance, const Array& edges) {
  ExtractedGraph g;
  g.num_nodes = importance.size();
  g.node_importance = importance;
  g.edge_weights.assign(edges.data(), edges.data() + edges.size());
  return g;
}

class PyModel {
 public:
  explicit PyModel(const std::string& config_json) : model_(make_model(parse_model_config(config_json))) {}

  Array logits(const Array& segments, bool train) {
    NoGradGuard guard;
    return to_array(model_->logits(to_tensor(segments), train ? Mode::kTrain : Mode::kEval));
  }
  Array scores(const Array& segments, bool train) {
    NoGradGuard guard;
    return to_array(model_->scores(to_tensor(segments), train ? Mode::kTrain : Mode::kEval));
  }
  py::dict parameters() {
    py::dict d;
    for (const auto& p : model_->parameters()) d[py::str(p.name)] = to_array(p.tensor);
    return d;
  }

 private:
  std::unique_ptr<Model> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "VideoGraph core operations";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("shape_inference", [](const std::string& config_json) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    for (const auto& s : shape_inference(parse_model_config(config_json))) out.emplace_back(s.stage, s.shape);
    return out;
  }, py::arg("config_json"));

  m.def("sobol", [](std::size_t count, std::size_t dims) {
    SobolSequence seq(dims);
    Array out({static_cast<py::ssize_t>(count), static_cast<py::ssize_t>(dims)});
    double* p = out.mutable_data();
    for (std::size_t i = 0; i < count; ++i)
      for (double v : seq.next()) *p++ = v;
    return out;
  }, py::arg("count"), py::arg("dims"), "Gray-code Sobol points, the all-zero point skipped.");

  m.def("kmeans", [](const Array& points, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
    const KMeansResult r = kmeans(to_tensor(points), k, seed, max_iters);
    return py::make_tuple(to_array(r.centroids), r.assignment, r.objective);
  }, py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iters") = 100);

  m.def("mean_average_precision", [](const Array& scores, const Array& labels) {
    return mean_average_precision(to_tensor(scores), to_tensor(labels));
  }, py::arg("scores"), py::arg("labels"));

  m.def("track_node_distances", [](const Array& nodes) { return track_node_distances(to_tensor(nodes)); },
        py::arg("nodes_hat"));

  m.def("extract_activity_graph", [](const Array& z1, int class_id) {
    return graph_to_dict(extract_activity_graph(ActivationStack{to_tensor(z1)}, class_id));
  }, py::arg("z1"), py::arg("class_id") = 0, "z1 is M x N' x T' x C.");

  m.def("force_layout", [](const std::vector<double>& importance, const Array& edges, std::size_t iterations,
                           std::uint64_t seed) {
    const auto pos = force_layout(graph_from_arrays(importance, edges), iterations, seed);
    Array out({static_cast<py::ssize_t>(pos.size()), py::ssize_t{2}});
    for (std::size_t i = 0; i < pos.size(); ++i) {
      out.mutable_data()[2 * i] = pos[i][0];
      out.mutable_data()[2 * i + 1] = pos[i][1];
    }
    return out;
  }, py::arg("node_importance"), py::arg("edge_weights"), py::arg("iterations") = 500, py::arg("seed") = 0);

  m.def("read_feature_file", [](const std::filesystem::path& p) { return to_array(read_feature_file(p)); });
  m.def("write_feature_file", [](const std::filesystem::path& p, const Array& a) { write_feature_file(p, to_tensor(a)); });

  m.def("gradient_suite", [](std::uint64_t seed) {
    std::vector<std::tuple<std::string, double, bool>> out;
    for (const auto& e : run_gradient_suite(seed)) out.emplace_back(e.name, e.result.max_relative_error, e.passed);
    return out;
  }, py::arg("seed") = 0);

  m.def("cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"videograph"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def("logits", &PyModel::logits, py::arg("segments"), py::arg("train") = false)
      .def("scores", &PyModel::scores, py::arg("segments"), py::arg("train") = false)
      .def("parameters", &PyModel::parameters);
}
