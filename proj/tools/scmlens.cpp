// scmlens command-line front end.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "scmlens/ablation.hpp"
#include "scmlens/causal_graph.hpp"
#include "scmlens/dataset.hpp"
#include "scmlens/error.hpp"
#include "scmlens/forward.hpp"
#include "scmlens/report.hpp"
#include "scmlens/response_table.hpp"
#include "scmlens/scm.hpp"
#include "scmlens/structural_learn.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace scmlens;

namespace {

struct RunConfig {
  std::string model;
  std::string weights;
  std::string data;
  std::string scm;
  std::string cache;
  std::string out_dir = ".";
  std::string transform = "frobenius";
  std::string learner = "ridge";
  double lambda = 0.1;
  double augment = 0.1;
  std::uint32_t passes = 1;
  std::uint64_t seed = 42;
  std::vector<std::string> sets;
  std::string target;
  std::string layer;
  bool oracle = false;
};

// "layer:index" with an optional "=value" tail.
struct NodeRef {
  std::string layer;
  std::size_t index = 0;
  std::optional<double> value;
};

NodeRef parse_node_ref(const std::string& text, bool with_value) {
  const auto colon = text.rfind(':', text.find('='));
  const auto eq = text.find('=');
  if (colon == std::string::npos || colon == 0 || (with_value != (eq != std::string::npos))) {
    throw ValidationError("malformed node reference '" + text + "', expected layer:index" +
                          (with_value ? "=value" : ""));
  }
  NodeRef ref;
  ref.layer = text.substr(0, colon);
  const std::string index = text.substr(colon + 1, eq == std::string::npos ? std::string::npos : eq - colon - 1);
  std::size_t used = 0;
  try {
    const long long v = std::stoll(index, &used);
    if (v < 0 || used != index.size()) throw std::invalid_argument(index);
    ref.index = static_cast<std::size_t>(v);
    if (with_value) {
      const std::string value = text.substr(eq + 1);
      ref.value = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    }
  } catch (const std::logic_error&) {
    throw ValidationError("malformed node reference '" + text + "'");
  }
  return ref;
}

void write_text(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void write_report(const RunConfig& cfg, const std::string& name, const json& body) {
  write_text(fs::path(cfg.out_dir) / (name + "_report.json"), body.dump(2) + "\n");
}

LearnerConfig learner_config(const RunConfig& cfg) {
  LearnerConfig lc;
  if (cfg.learner == "ols") {
    lc.real_learner = Learner::Ols;
  } else if (cfg.learner == "ridge") {
    lc.real_learner = Learner::Ridge;
  } else {
    throw ValidationError("unknown learner '" + cfg.learner + "', expected ols or ridge");
  }
  lc.lambda = cfg.lambda;
  lc.seed = cfg.seed;
  lc.validate();
  return lc;
}

void check_cache_matches(const ResponseTable& cache, const ModelSpec& model, const std::string& path) {
  if (cache.layers() != ResponseTable(model).layers()) {
    throw ValidationError(path + ": response cache layers do not match model '" + model.name + "'");
  }
}

int cmd_activations(const RunConfig& cfg) {
  const Network net = load_network(cfg.model, cfg.weights);
  const LabeledDataset data = load_dataset_file(cfg.data);
  filters_to_zero(cfg.augment, 1);
  const ResponseTable table = augment(net, data, cfg.augment, cfg.passes, cfg.seed);
  save_response_cache_file(table, cfg.cache);
  std::printf("wrote %zu rows x %zu columns to %s\n", table.rows(), table.width(), cfg.cache.c_str());
  write_report(cfg, "activations",
               {{"cache", cfg.cache}, {"rows", table.rows()}, {"columns", table.width()}, {"samples", data.size()},
                {"augment", cfg.augment}, {"passes", cfg.passes}, {"seed", cfg.seed}});
  return 0;
}

int cmd_fit(const RunConfig& cfg) {
  const Network net = load_network(cfg.model, cfg.weights);
  const TransformKind transform = parse_transform(cfg.transform);
  const LearnerConfig lc = learner_config(cfg);
  ResponseTable table;
  std::size_t samples = 0;
  if (!cfg.cache.empty()) {
    table = load_response_cache_file(cfg.cache);
    check_cache_matches(table, net.spec(), cfg.cache);
    for (std::size_t r = 0; r < table.rows(); ++r) samples += table.info(r).observational() ? 1 : 0;
  } else {
    if (cfg.data.empty()) throw ValidationError("fit needs --data or --cache");
    const LabeledDataset data = load_dataset_file(cfg.data);
    filters_to_zero(cfg.augment, 1);
    table = augment(net, data, cfg.augment, cfg.passes, cfg.seed);
    samples = data.size();
  }
  const StructuralCausalModel scm = fit_scm(net, table, transform, lc, cfg.augment, cfg.passes);
  save_scm_file(scm, cfg.scm);

  const CausalDag& dag = scm.dag();
  json nodes = json::array();
  double metric_sum = 0.0;
  double metric_max = 0.0;
  for (const auto& eq : scm.equations()) {
    const auto& layer = dag.layers()[dag.layer_of(eq.node)];
    const std::size_t unit = eq.node - layer.first_node;
    nodes.push_back({{"node", layer.id + ":" + std::to_string(unit)},
                     {"learner", std::string(to_string(eq.learner))},
                     {"fit_metric", eq.fit_metric}});
    metric_sum += eq.fit_metric;
    metric_max = std::max(metric_max, static_cast<double>(eq.fit_metric));
  }
  const double metric_mean = scm.equations().empty() ? 0.0 : metric_sum / static_cast<double>(scm.equations().size());
  std::printf("fitted %zu equations over %zu nodes from %zu rows (%zu samples)\n", scm.equations().size(),
              dag.node_count(), table.rows(), samples);
  std::printf("holdout fit metric: mean %.6g, max %.6g\n", metric_mean, metric_max);
  write_report(cfg, "fit",
               {{"scm", cfg.scm},
                {"transform", std::string(to_string(transform))},
                {"learner", cfg.learner},
                {"lambda", cfg.lambda},
                {"rows", table.rows()},
                {"nodes", dag.node_count()},
                {"edges", dag.edges().size()},
                {"fit_metric_mean", metric_mean},
                {"fit_metric_max", metric_max},
                {"equations", nodes}});
  return 0;
}

int cmd_sanity(const RunConfig& cfg) {
  const Network net = load_network(cfg.model, cfg.weights);
  const LabeledDataset data = load_dataset_file(cfg.data);
  const StructuralCausalModel scm = load_scm_file(cfg.scm);
  const SanityResult r = sanity_check(scm, net, data);
  std::printf("scm accuracy   %.6f\nmodel accuracy %.6f\n", r.scm_accuracy, r.model_accuracy);
  write_report(cfg, "sanity",
               {{"samples", data.size()}, {"scm_accuracy", r.scm_accuracy}, {"model_accuracy", r.model_accuracy}});
  return 0;
}

int cmd_intervene(const RunConfig& cfg) {
  const Network net = load_network(cfg.model, cfg.weights);
  const LabeledDataset data = load_dataset_file(cfg.data);
  const StructuralCausalModel scm = load_scm_file(cfg.scm);
  const CausalDag& dag = scm.dag();

  InterventionSpec spec;
  json sets = json::array();
  std::string label;
  for (const auto& text : cfg.sets) {
    const NodeRef ref = parse_node_ref(text, true);
    spec.set(dag.node_index(ref.layer, ref.index), *ref.value);
    sets.push_back({{"node", ref.layer + ":" + std::to_string(ref.index)}, {"value", *ref.value}});
    label += (label.empty() ? "" : ", ") + text;
  }
  const NodeRef target = parse_node_ref(cfg.target, false);
  const std::size_t node = dag.node_index(target.layer, target.index);
  const auto roots = collect_roots(scm, net, data);
  const double value = expected_outcome(scm, roots, spec, node);
  std::printf("E[%s | do(%s)] = %.9g over %zu samples\n", cfg.target.c_str(), label.c_str(), value, data.size());
  write_report(cfg, "intervene",
               {{"target", cfg.target}, {"interventions", sets}, {"samples", data.size()}, {"expected", value}});
  return 0;
}

int cmd_rank(const RunConfig& cfg) {
  const Network net = load_network(cfg.model, cfg.weights);
  const LabeledDataset data = load_dataset_file(cfg.data);
  const StructuralCausalModel scm = load_scm_file(cfg.scm);
  const ImportanceReport report = rank_filters(scm, net, data, cfg.layer, cfg.oracle);
  const fs::path base = fs::path(cfg.out_dir) / ("rank_" + cfg.layer);
  write_text(base.string() + ".csv", report_to_csv(report));
  write_text(base.string() + ".json", report_to_json(report));

  std::printf("layer %s, baseline scm accuracy %.6f\n", cfg.layer.c_str(), report.scm.baseline_accuracy);
  std::printf("%6s %8s %12s\n", "rank", "filter", "scm_delta");
  for (const std::size_t f : report.scm.by_rank()) {
    std::printf("%6zu %8zu %12.6f\n", report.scm.rank[f], f, report.scm.delta[f]);
  }
  if (report.comparison) {
    const auto& c = *report.comparison;
    std::printf("oracle: spearman %.6f, top-1 overlap %.3f, top-3 %.3f, top-5 %.3f\n", c.spearman_rho,
                c.top1_overlap, c.top3_overlap, c.top5_overlap);
  }
  std::printf("wrote %s.csv and %s.json\n", base.c_str(), base.c_str());
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::Io:
    case Error::Kind::Format:
      return 2;
    case Error::Kind::Validation:
      return 3;
    case Error::Kind::Numerical:
      return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural causal models over CNN filter responses"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub, bool data_required) {
    sub->add_option("--model", cfg.model, "Model description (JSON)")->required();
    sub->add_option("--weights", cfg.weights, "Weights file")->required();
    auto* d = sub->add_option("--data", cfg.data, "Labelled dataset file");
    if (data_required) d->required();
    sub->add_option("--out-dir", cfg.out_dir, "Directory for report files")->capture_default_str();
  };
  auto augmentation = [&](CLI::App* sub) {
    sub->add_option("--augment", cfg.augment, "Fraction of filters zeroed per interventional row")
        ->capture_default_str();
    sub->add_option("--passes", cfg.passes, "Augmentation passes")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Seed for augmentation and the holdout split")->capture_default_str();
  };

  auto* act = app.add_subcommand("activations", "Record node values into a response cache");
  common(act, true);
  augmentation(act);
  act->add_option("--cache", cfg.cache, "Response cache to write")->required();

  auto* fit = app.add_subcommand("fit", "Fit a structural causal model");
  common(fit, false);
  augmentation(fit);
  fit->add_option("--cache", cfg.cache, "Response cache to fit from instead of --data");
  fit->add_option("--scm", cfg.scm, "SCM file to write")->required();
  fit->add_option("--transform", cfg.transform, "frobenius or binary")->capture_default_str();
  fit->add_option("--learner", cfg.learner, "ols or ridge (real-valued nodes)")->capture_default_str();
  fit->add_option("--lambda", cfg.lambda, "Ridge penalty")->capture_default_str();

  auto* san = app.add_subcommand("sanity", "Compare SCM and model accuracy");
  common(san, true);
  san->add_option("--scm", cfg.scm, "SCM file")->required();

  auto* itv = app.add_subcommand("intervene", "Expected value of a node under do()");
  common(itv, true);
  itv->add_option("--scm", cfg.scm, "SCM file")->required();
  itv->add_option("--set", cfg.sets, "Intervention layer:filter=value (repeatable)");
  itv->add_option("--target", cfg.target, "Target node layer:unit")->required();

  auto* rank = app.add_subcommand("rank", "Rank a conv layer's filters by counterfactual importance");
  common(rank, true);
  rank->add_option("--scm", cfg.scm, "SCM file")->required();
  rank->add_option("--layer", cfg.layer, "Recorded conv layer")->required();
  rank->add_flag("--oracle", cfg.oracle, "Also rank by real ablation and compare");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*act) return cmd_activations(cfg);
    if (*fit) return cmd_fit(cfg);
    if (*san) return cmd_sanity(cfg);
    if (*itv) return cmd_intervene(cfg);
    if (*rank) return cmd_rank(cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "scmlens: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scmlens: unexpected failure: %s\n", e.what());
    return 1;
  }
  return 1;
}
