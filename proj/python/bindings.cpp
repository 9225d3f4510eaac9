// Python bindings. Matrices cross the boundary as float64 numpy copies.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>

#include "riskprop/downstream.hpp"
#include "riskprop/error.hpp"
#include "riskprop/experiment.hpp"
#include "riskprop/graph.hpp"
#include "riskprop/hgmae.hpp"
#include "riskprop/pairs.hpp"
#include "riskprop/synthgen.hpp"

namespace py = pybind11;
using namespace riskprop;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Matrix from_numpy(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

using EdgeList = std::vector<std::pair<graph::NodeId, graph::NodeId>>;

std::vector<graph::Edge> to_edges(const EdgeList& list) {
  std::vector<graph::Edge> out;
  out.reserve(list.size());
  for (auto [a, b] : list) out.push_back({a, b});
  return out;
}

EdgeList from_edges(const std::vector<graph::Edge>& edges) {
  EdgeList out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.emplace_back(e.src, e.dst);
  return out;
}

}  // namespace

PYBIND11_MODULE(_riskprop, m) {
  m.doc() = "Heterogeneous graph masked autoencoder and default-risk propagation pairs";

  auto error = py::register_exception<Error>(m, "RiskpropError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<NumericFault>(m, "NumericFault", error.ptr());

  // graph
  py::class_<graph::HeteroGraph>(m, "HeteroGraph")
      .def(py::init([](const Array& features, std::vector<std::uint8_t> issuers, std::vector<std::string> names,
                       const std::vector<EdgeList>& edges) {
             std::vector<std::vector<graph::Edge>> typed;
             for (const auto& l : edges) typed.push_back(to_edges(l));
             return graph::HeteroGraph(from_numpy(features), std::move(issuers), std::move(names), std::move(typed));
           }),
           py::arg("features"), py::arg("issuer_flags"), py::arg("edge_type_names"), py::arg("edges_by_type"))
      .def_property_readonly("num_nodes", &graph::HeteroGraph::num_nodes)
      .def_property_readonly("feature_dim", &graph::HeteroGraph::feature_dim)
      .def_property_readonly("num_edge_types", &graph::HeteroGraph::num_edge_types)
      .def_property_readonly("num_edges", &graph::HeteroGraph::num_edges)
      .def_property_readonly("features", [](const graph::HeteroGraph& g) { return to_numpy(g.features()); })
      .def_property_readonly("issuer_flags", &graph::HeteroGraph::issuer_flags)
      .def_property_readonly("edge_type_names", &graph::HeteroGraph::edge_type_names)
      .def("issuers", &graph::HeteroGraph::issuers)
      .def("edges", [](const graph::HeteroGraph& g, std::size_t k) {
        if (k >= g.num_edge_types()) throw py::index_error("edge type out of range");
        return from_edges(g.edges(k));
      })
      .def("__eq__", [](const graph::HeteroGraph& a, const graph::HeteroGraph& b) { return a == b; });

  py::class_<graph::Subgraph>(m, "Subgraph")
      .def_readonly("edge_type", &graph::Subgraph::edge_type)
      .def_readonly("parent_node_ids", &graph::Subgraph::parent_node_ids)
      .def_property_readonly("features", [](const graph::Subgraph& s) { return to_numpy(s.features); })
      .def_property_readonly("edges", [](const graph::Subgraph& s) { return from_edges(s.edges); })
      .def_property_readonly("num_nodes", &graph::Subgraph::num_nodes);

  m.def("extract_subgraph", &graph::extract_subgraph, py::arg("graph"), py::arg("edge_type"));
  m.def("save_graph", &graph::save_graph, py::arg("graph"), py::arg("nodes_path"), py::arg("edges_path"));
  m.def("load_graph", &graph::load_graph, py::arg("nodes_path"), py::arg("edges_path"));

  // synthgen
  py::class_<synth::GenConfig>(m, "GenConfig")
      .def(py::init<>())
      .def_readwrite("num_nodes", &synth::GenConfig::num_nodes)
      .def_readwrite("num_communities", &synth::GenConfig::num_communities)
      .def_readwrite("num_edge_types", &synth::GenConfig::num_edge_types)
      .def_readwrite("feature_dim", &synth::GenConfig::feature_dim)
      .def_readwrite("task_dim", &synth::GenConfig::task_dim)
      .def_readwrite("issuer_fraction", &synth::GenConfig::issuer_fraction)
      .def_readwrite("edge_type_names", &synth::GenConfig::edge_type_names)
      .def_readwrite("intra_community_edge_prob", &synth::GenConfig::intra_community_edge_prob)
      .def_readwrite("inter_community_edge_prob", &synth::GenConfig::inter_community_edge_prob)
      .def_readwrite("transmission_prob", &synth::GenConfig::transmission_prob)
      .def_readwrite("num_seed_defaults", &synth::GenConfig::num_seed_defaults)
      .def_readwrite("max_cascade_hops", &synth::GenConfig::max_cascade_hops)
      .def_readwrite("noise_std", &synth::GenConfig::noise_std)
      .def_readwrite("task_signal_weight", &synth::GenConfig::task_signal_weight)
      .def_readwrite("rng_seed", &synth::GenConfig::rng_seed)
      .def("validate", &synth::GenConfig::validate)
      .def("to_config_text", [](const synth::GenConfig& c) { return synth::to_config_text(c); });

  py::class_<synth::DefaultEvent>(m, "DefaultEvent")
      .def(py::init([](graph::NodeId node, std::uint64_t t) { return synth::DefaultEvent{node, t}; }),
           py::arg("node_id"), py::arg("default_time"))
      .def_readonly("node_id", &synth::DefaultEvent::node_id)
      .def_readonly("default_time", &synth::DefaultEvent::default_time)
      .def("__eq__", [](const synth::DefaultEvent& a, const synth::DefaultEvent& b) { return a == b; })
      .def("__repr__", [](const synth::DefaultEvent& e) {
        return "DefaultEvent(node_id=" + std::to_string(e.node_id) + ", default_time=" + std::to_string(e.default_time) + ")";
      });

  py::class_<synth::TaskFeatures>(m, "TaskFeatures")
      .def_readonly("node_ids", &synth::TaskFeatures::node_ids)
      .def_property_readonly("values", [](const synth::TaskFeatures& t) { return to_numpy(t.values); })
      .def("row_of", &synth::TaskFeatures::row_of);

  m.def("community_assignment", &synth::community_assignment, py::arg("config"));
  m.def("generate_graph", &synth::generate_graph, py::arg("config"));
  m.def("simulate_cascade", &synth::simulate_cascade, py::arg("graph"), py::arg("config"));
  m.def("attach_task_features", [](const graph::HeteroGraph& g, const std::vector<synth::DefaultEvent>& events,
                                   const synth::GenConfig& cfg) { return synth::attach_task_features(g, events, cfg); },
        py::arg("graph"), py::arg("events"), py::arg("config"));

  // hgmae
  py::class_<hgmae::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("mask_ratio", &hgmae::TrainConfig::mask_ratio)
      .def_readwrite("random_sub_rate", &hgmae::TrainConfig::random_sub_rate)
      .def_readwrite("gamma", &hgmae::TrainConfig::gamma)
      .def_readwrite("eta", &hgmae::TrainConfig::eta)
      .def_readwrite("embed_dim", &hgmae::TrainConfig::embed_dim)
      .def_readwrite("encoder_heads", &hgmae::TrainConfig::encoder_heads)
      .def_readwrite("encoder_head_dim", &hgmae::TrainConfig::encoder_head_dim)
      .def_readwrite("negative_slope", &hgmae::TrainConfig::negative_slope)
      .def_readwrite("epochs", &hgmae::TrainConfig::epochs)
      .def_readwrite("lr", &hgmae::TrainConfig::lr)
      .def_readwrite("rng_seed", &hgmae::TrainConfig::rng_seed)
      .def("validate", &hgmae::TrainConfig::validate);

  py::enum_<hgmae::MaskAction>(m, "MaskAction")
      .value("TOKEN", hgmae::MaskAction::token)
      .value("RANDOM", hgmae::MaskAction::random);

  py::class_<hgmae::MaskPlan>(m, "MaskPlan")
      .def_readonly("masked_ids", &hgmae::MaskPlan::masked_ids)
      .def_readonly("actions", &hgmae::MaskPlan::actions)
      .def_readonly("substitutes", &hgmae::MaskPlan::substitutes)
      .def_readonly("rng_seed", &hgmae::MaskPlan::rng_seed)
      .def("count", &hgmae::MaskPlan::count);

  py::class_<hgmae::ModelParams>(m, "ModelParams")
      .def_property_readonly("input_dim", &hgmae::ModelParams::input_dim)
      .def_property_readonly("embed_dim", &hgmae::ModelParams::embed_dim)
      .def("tensors", [](const hgmae::ModelParams& p) {
        std::map<std::string, py::array_t<double>> out;
        auto names = p.tensor_names();
        auto ts = p.tensors();
        for (std::size_t i = 0; i < names.size(); ++i) out.emplace(names[i], to_numpy(*ts[i]));
        return out;
      })
      .def("__eq__", [](const hgmae::ModelParams& a, const hgmae::ModelParams& b) { return a == b; });

  py::class_<hgmae::EpochLog>(m, "EpochLog")
      .def_readonly("epoch", &hgmae::EpochLog::epoch)
      .def_readonly("total", &hgmae::EpochLog::total)
      .def_readonly("full", &hgmae::EpochLog::full)
      .def_readonly("sub_mean", &hgmae::EpochLog::sub_mean);

  py::class_<hgmae::PretrainResult>(m, "PretrainResult")
      .def_readonly("params", &hgmae::PretrainResult::params)
      .def_readonly("history", &hgmae::PretrainResult::history)
      .def_readonly("warnings", &hgmae::PretrainResult::warnings)
      .def_property_readonly("losses", [](const hgmae::PretrainResult& r) {
        std::vector<double> out;
        for (const auto& e : r.history) out.push_back(e.total);
        return out;
      });

  m.def("sample_mask", &hgmae::sample_mask_from_seed, py::arg("n"), py::arg("config"), py::arg("seed"));
  m.def("init_params", &hgmae::init_params, py::arg("input_dim"), py::arg("config"));
  m.def("apply_mask", [](const Array& x, const hgmae::MaskPlan& plan, const hgmae::ModelParams& p) {
    return to_numpy(hgmae::apply_mask(from_numpy(x), plan, p));
  }, py::arg("x"), py::arg("plan"), py::arg("params"));
  m.def("sce_loss", [](const Array& x, const Array& z, const std::vector<std::size_t>& rows, double gamma) {
    return hgmae::sce_loss(from_numpy(x), from_numpy(z), rows, gamma);
  }, py::arg("x"), py::arg("z"), py::arg("masked_ids"), py::arg("gamma") = 1.0);
  m.def("combined_loss", [](double full, const std::vector<double>& subs, double eta) {
    return hgmae::combined_loss(full, subs, eta);
  }, py::arg("full_loss"), py::arg("sub_losses"), py::arg("eta"));
  m.def("pretrain", &hgmae::pretrain, py::arg("graph"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("infer_embeddings", [](const graph::HeteroGraph& g, const hgmae::ModelParams& p) {
    return to_numpy(hgmae::infer_embeddings(g, p));
  }, py::arg("graph"), py::arg("params"));
  m.def("save_checkpoint", &hgmae::save_checkpoint, py::arg("params"), py::arg("config"), py::arg("path"));
  m.def("load_checkpoint", &hgmae::load_checkpoint, py::arg("path"), py::arg("config"), py::arg("input_dim"));

  // pairs
  py::enum_<pairs::Label>(m, "Label").value("WHITE", pairs::Label::white).value("BLACK", pairs::Label::black);

  py::class_<pairs::PropagationPair>(m, "PropagationPair")
      .def_readonly("source", &pairs::PropagationPair::source)
      .def_readonly("target", &pairs::PropagationPair::target)
      .def_readonly("label", &pairs::PropagationPair::label)
      .def_readonly("hop_distance", &pairs::PropagationPair::hop_distance)
      .def("__eq__", [](const pairs::PropagationPair& a, const pairs::PropagationPair& b) { return a == b; })
      .def("__repr__", [](const pairs::PropagationPair& p) {
        return "PropagationPair(" + std::to_string(p.source) + ", " + std::to_string(p.target) + ", " +
               (p.label == pairs::Label::black ? "BLACK" : "WHITE") + ", hop=" + std::to_string(p.hop_distance) + ")";
      });

  py::class_<pairs::PairDatasetSplit>(m, "PairDatasetSplit")
      .def_readonly("train", &pairs::PairDatasetSplit::train)
      .def_readonly("test", &pairs::PairDatasetSplit::test)
      .def_readonly("split_seed", &pairs::PairDatasetSplit::split_seed);

  m.def("enumerate_pairs", [](const graph::HeteroGraph& g, const std::vector<synth::DefaultEvent>& events,
                              std::size_t n) { return pairs::enumerate_pairs(g, events, n); },
        py::arg("graph"), py::arg("events"), py::arg("max_hops") = 3);
  m.def("build_pairs", [](const graph::HeteroGraph& g, const std::vector<synth::DefaultEvent>& events,
                          std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return pairs::build_pairs(g, events, n, rng);
  }, py::arg("graph"), py::arg("events"), py::arg("max_hops") = 3, py::arg("seed") = 0);
  m.def("split_pairs", [](const std::vector<pairs::PropagationPair>& ps, double frac, std::uint64_t seed) {
    return pairs::split(ps, frac, seed);
  }, py::arg("pairs"), py::arg("train_frac") = 0.8, py::arg("seed") = 0);

  // downstream
  m.def("build_design_matrix", [](const std::vector<pairs::PropagationPair>& ps, const synth::TaskFeatures& task,
                                  std::optional<Array> emb) {
    std::optional<Matrix> e;
    if (emb) e = from_numpy(*emb);
    return to_numpy(downstream::build_design_matrix(ps, task, e ? &*e : nullptr));
  }, py::arg("pairs"), py::arg("task_features"), py::arg("embeddings") = py::none());
  m.def("micro_f1", [](const std::vector<int>& p, const std::vector<int>& y) { return downstream::micro_f1(p, y); },
        py::arg("predicted"), py::arg("labels"));
  m.def("accuracy", [](const std::vector<int>& p, const std::vector<int>& y) { return downstream::accuracy(p, y); },
        py::arg("predicted"), py::arg("labels"));
  m.def("roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return downstream::roc_auc(s, y); },
        py::arg("scores"), py::arg("labels"));

  py::class_<downstream::ClassifierConfig>(m, "ClassifierConfig")
      .def(py::init<>())
      .def_readwrite("l2", &downstream::ClassifierConfig::l2)
      .def_readwrite("iterations", &downstream::ClassifierConfig::iterations)
      .def_readwrite("lr", &downstream::ClassifierConfig::lr)
      .def_readwrite("threshold", &downstream::ClassifierConfig::threshold)
      .def_property("kind", [](const downstream::ClassifierConfig& c) { return downstream::to_string(c.kind); },
                    [](downstream::ClassifierConfig& c, const std::string& k) {
                      c.kind = downstream::classifier_kind_from_string(k);
                    });

  py::class_<downstream::LogisticRegression>(m, "LogisticRegression")
      .def(py::init<downstream::ClassifierConfig>(), py::arg("config") = downstream::ClassifierConfig{})
      .def("fit", [](downstream::LogisticRegression& lr, const Array& x, const std::vector<int>& y) {
        lr.fit(from_numpy(x), y);
      }, py::arg("x"), py::arg("labels"))
      .def("predict_proba", [](const downstream::LogisticRegression& lr, const Array& x) {
        return lr.predict_proba(from_numpy(x));
      }, py::arg("x"))
      .def_property_readonly("weights", [](const downstream::LogisticRegression& lr) { return to_numpy(lr.weights()); })
      .def_property_readonly("bias", &downstream::LogisticRegression::bias)
      .def_property_readonly("loss_history", &downstream::LogisticRegression::loss_history);

  py::class_<downstream::Metrics>(m, "Metrics")
      .def_readonly("micro_f1", &downstream::Metrics::micro_f1)
      .def_readonly("accuracy", &downstream::Metrics::accuracy)
      .def_readonly("auc", &downstream::Metrics::auc);

  // experiment
  py::enum_<experiment::Condition>(m, "Condition")
      .value("A", experiment::Condition::task_only)
      .value("B", experiment::Condition::hgmae)
      .value("C", experiment::Condition::ablation);

  py::class_<experiment::ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("gen", &experiment::ExperimentConfig::gen)
      .def_readwrite("pretrain", &experiment::ExperimentConfig::pretrain)
      .def_readwrite("pair_hops", &experiment::ExperimentConfig::pair_hops)
      .def_readwrite("train_frac", &experiment::ExperimentConfig::train_frac)
      .def_readwrite("classifier", &experiment::ExperimentConfig::classifier)
      .def_readwrite("seeds", &experiment::ExperimentConfig::seeds)
      .def_readwrite("output_dir", &experiment::ExperimentConfig::output_dir)
      .def("validate", &experiment::ExperimentConfig::validate)
      .def("to_config_text", [](const experiment::ExperimentConfig& c) { return experiment::to_config_text(c); });

  py::class_<experiment::ResultRow>(m, "ResultRow")
      .def_readonly("condition", &experiment::ResultRow::condition)
      .def_readonly("seed", &experiment::ResultRow::seed)
      .def_readonly("metrics", &experiment::ResultRow::metrics);

  py::class_<experiment::ConditionSummary>(m, "ConditionSummary")
      .def_readonly("condition", &experiment::ConditionSummary::condition)
      .def_readonly("runs", &experiment::ConditionSummary::runs)
      .def_readonly("mean_micro_f1", &experiment::ConditionSummary::mean_micro_f1)
      .def_readonly("std_micro_f1", &experiment::ConditionSummary::std_micro_f1)
      .def_readonly("mean_accuracy", &experiment::ConditionSummary::mean_accuracy)
      .def_readonly("mean_auc", &experiment::ConditionSummary::mean_auc);

  py::class_<experiment::ComparisonTable>(m, "ComparisonTable")
      .def_readonly("rows", &experiment::ComparisonTable::rows)
      .def("summary", &experiment::ComparisonTable::summary)
      .def("format_results", [](const experiment::ComparisonTable& t) { return experiment::format_results(t); })
      .def("format_summary", [](const experiment::ComparisonTable& t) { return experiment::format_summary(t); });

  m.def("parse_experiment_config", [](const std::string& text) { return experiment::parse_experiment_config(text); },
        py::arg("text"));
  m.def("load_experiment_config", &experiment::load_experiment_config, py::arg("path"));
  m.def("run_conditions", &experiment::run_conditions, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_all", [](const experiment::ExperimentConfig& cfg) { return experiment::run_all(cfg); }, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
}
