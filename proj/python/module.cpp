#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "tigh/config.hpp"
#include "tigh/errors.hpp"
#include "tigh/geograph.hpp"
#include "tigh/pipeline.hpp"
#include "tigh/postprocess.hpp"
#include "tigh/tghio.hpp"

namespace py = pybind11;

namespace {

tigh::RunConfig make_config(const std::string& config_path, const py::dict& overrides) {
  tigh::RunConfig rc = tigh::RunConfig::load(config_path);
  for (auto item : overrides)
    rc.set(py::cast<std::string>(item.first), py::cast<std::string>(py::str(item.second)));
  return rc;
}

std::vector<tigh::SurveyNode> make_nodes(const py::list& nodes) {
  std::vector<tigh::SurveyNode> out;
  out.reserve(nodes.size());
  for (auto handle : nodes) {
    py::dict d = py::cast<py::dict>(handle);
    tigh::SurveyNode n;
    n.id = py::cast<long long>(d["id"]);
    n.lat = py::cast<double>(d["lat"]);
    n.lon = py::cast<double>(d["lon"]);
    n.year = py::cast<int>(d["year"]);
    n.region = d.contains("region") ? py::cast<int>(d["region"]) : 0;
    n.split = tigh::split_from_string(py::cast<std::string>(d["split"]));
    if (d.contains("labels")) n.labels = py::cast<std::vector<int>>(d["labels"]);
    out.push_back(std::move(n));
  }
  return out;
}

tigh::GraphOptions make_graph_options(double d_max_km, double weight_constant, int threads) {
  tigh::GraphOptions opt;
  opt.d_max_km = d_max_km;
  opt.weight_constant = weight_constant;
  opt.threads = threads;
  return opt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-modal species prediction pipeline: graph features, training stages, "
            "and set-valued post-processing.";

  py::register_exception<tigh::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<tigh::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<tigh::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<tigh::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<tigh::DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "load_config",
      [](const std::string& config, const py::dict& overrides) {
        tigh::RunConfig rc = make_config(config, overrides);
        py::dict out;
        for (const auto& [key, value] : rc.items()) out[py::str(key)] = py::str(value);
        return out;
      },
      py::arg("config") = std::string(), py::arg("overrides") = py::dict(),
      "Resolve a run configuration (schema defaults, optional file, overrides, environment) "
      "and return it as a flat dict of strings.");

  m.def(
      "run_stage",
      [](const std::string& stage, const std::string& config, const py::dict& overrides) {
        tigh::RunConfig rc = make_config(config, overrides);
        tigh::StagePaths paths = tigh::StagePaths::from_run(rc);
        py::dict out;
        out["stage"] = stage;
        if (stage == "synth") {
          tigh::run_synth(rc);
          out["dir"] = paths.raw;
        } else if (stage == "prep") {
          tigh::run_prep(rc);
          out["dir"] = paths.prep;
        } else if (stage == "graph") {
          tigh::run_graph(rc);
          out["dir"] = paths.graph;
        } else if (stage == "train") {
          tigh::run_train(rc);
          out["dir"] = paths.train;
        } else if (stage == "predict") {
          tigh::run_predict(rc);
          out["dir"] = paths.predict;
        } else if (stage == "tune") {
          tigh::GridResult g = tigh::run_tune(rc);
          out["dir"] = paths.tune;
          out["best_k"] = g.best_k;
          out["best_theta"] = g.best_theta;
          out["best_f1"] = g.best_f1;
        } else if (stage == "score") {
          out["dir"] = paths.score;
          out["f1"] = tigh::run_score(rc);
        } else if (stage == "report") {
          tigh::run_report(rc);
          out["dir"] = paths.report;
        } else {
          throw tigh::ConfigError("unknown stage: " + stage);
        }
        return out;
      },
      py::arg("stage"), py::arg("config") = std::string(), py::arg("overrides") = py::dict(),
      "Run one pipeline stage (synth, prep, graph, train, predict, tune, score, report). "
      "Returns the stage output directory plus stage-specific results.");

  m.def(
      "read_tensor",
      [](const std::string& path) {
        tigh::TghTensor t = tigh::read_tgh(path);
        std::vector<std::size_t> dims(t.dims.begin(), t.dims.end());
        return py::make_tuple(py::cast(dims), py::cast(t.data));
      },
      py::arg("path"), "Read a tensor file; returns (dims, flat row-major float list).");

  m.def(
      "write_tensor",
      [](const std::string& path, const std::vector<std::uint32_t>& dims,
         const std::vector<float>& values) {
        tigh::TghTensor t;
        t.dims = dims;
        t.data = values;
        if (t.numel() != values.size())
          throw tigh::ShapeError("write_tensor: dims disagree with value count");
        tigh::write_tgh(path, t);
      },
      py::arg("path"), py::arg("dims"), py::arg("values"),
      "Write a row-major float tensor to a binary tensor file.");

  m.def(
      "threshold_topk",
      [](const std::vector<double>& probs, int k, double theta, const std::string& mode) {
        return tigh::threshold_topk(probs, k, theta, tigh::topk_mode_from_string(mode));
      },
      py::arg("probs"), py::arg("k"), py::arg("theta"), py::arg("mode") = "union",
      "Species selection combining a rank cutoff with a probability threshold. Returns a "
      "sorted id list.");

  m.def("samplewise_f1", &tigh::samplewise_f1, py::arg("predicted"), py::arg("truth"),
        "Mean per-sample F1 between predicted and true sorted id lists.");

  m.def(
      "grid_search",
      [](const std::vector<std::vector<double>>& probs,
         const std::vector<std::vector<int>>& truth, int k_min, int k_max, double theta_min,
         double theta_max, double theta_step, const std::string& mode, int threads) {
        tigh::GridSpec spec;
        spec.k_min = k_min;
        spec.k_max = k_max;
        spec.theta_min = theta_min;
        spec.theta_max = theta_max;
        spec.theta_step = theta_step;
        tigh::GridResult g =
            tigh::grid_search(probs, truth, spec, tigh::topk_mode_from_string(mode), threads);
        py::list cells;
        for (const auto& c : g.cells)
          cells.append(py::make_tuple(c.k, c.theta, c.f1));
        py::dict out;
        out["best_k"] = g.best_k;
        out["best_theta"] = g.best_theta;
        out["best_f1"] = g.best_f1;
        out["sentinel_theta"] = g.sentinel_theta;
        out["cells"] = cells;
        return out;
      },
      py::arg("probs"), py::arg("truth"), py::arg("k_min") = 1, py::arg("k_max") = 100,
      py::arg("theta_min") = 0.10, py::arg("theta_max") = 0.50, py::arg("theta_step") = 0.01,
      py::arg("mode") = "union", py::arg("threads") = 1,
      "Exhaustive (K, theta) evaluation against validation truth. Returns the best cell and "
      "the full grid as (k, theta, f1) tuples.");

  m.def("correct_output", &tigh::correct_output, py::arg("predicted"), py::arg("shortlist"),
        "Union a prediction with its shortlist; never removes a predicted species.");

  m.def(
      "build_edges",
      [](const py::list& nodes, double d_max_km, double weight_constant, int threads) {
        std::vector<tigh::SurveyNode> sn = make_nodes(nodes);
        tigh::SurveyGraph g =
            tigh::build_edges(sn, make_graph_options(d_max_km, weight_constant, threads));
        py::list out;
        for (const auto& e : g.edges)
          out.append(py::make_tuple(g.nodes[e.i].id, g.nodes[e.j].id, e.weight));
        return out;
      },
      py::arg("nodes"), py::arg("d_max_km") = 10.0, py::arg("weight_constant") = 6731.0,
      py::arg("threads") = 1,
      "Connect surveys that share year and region within the distance cutoff. Nodes are dicts "
      "with id, lat, lon, year, region, split, labels. Returns (src_id, dst_id, weight) "
      "tuples.");

  m.def(
      "compute_gfv",
      [](const py::list& nodes, int n_species, double d_max_km, double weight_constant,
         bool rescale, int threads) {
        std::vector<tigh::SurveyNode> sn = make_nodes(nodes);
        tigh::SurveyGraph g =
            tigh::build_edges(sn, make_graph_options(d_max_km, weight_constant, threads));
        std::vector<std::vector<double>> gfv = tigh::compute_gfv(g, n_species, threads);
        if (rescale) tigh::rescale_gfv(gfv);
        return gfv;
      },
      py::arg("nodes"), py::arg("n_species"), py::arg("d_max_km") = 10.0,
      py::arg("weight_constant") = 6731.0, py::arg("rescale") = true, py::arg("threads") = 1,
      "Graph feature vectors: per-node weighted neighbor label frequencies, one row per node "
      "in input order, optionally rescaled to [0, 1].");

  m.def(
      "compile_shortlists",
      [](const py::list& nodes, int top_train, int min_train_count, int top_aux,
         int min_aux_count, double d_max_km, double weight_constant, int threads) {
        std::vector<tigh::SurveyNode> sn = make_nodes(nodes);
        tigh::SurveyGraph g =
            tigh::build_edges(sn, make_graph_options(d_max_km, weight_constant, threads));
        tigh::ShortlistOptions opt;
        opt.top_train = top_train;
        opt.min_train_count = min_train_count;
        opt.top_aux = top_aux;
        opt.min_aux_count = min_aux_count;
        return tigh::compile_shortlists(g, opt);
      },
      py::arg("nodes"), py::arg("top_train") = 5, py::arg("min_train_count") = 4,
      py::arg("top_aux") = 10, py::arg("min_aux_count") = 8, py::arg("d_max_km") = 10.0,
      py::arg("weight_constant") = 6731.0, py::arg("threads") = 1,
      "Per-test-node species shortlists from frequent neighbor labels. Returns a dict keyed "
      "by test survey id.");
}
