#include "scmlens/scm.hpp"

#include <algorithm>

#include "scmlens/ablation.hpp"
#include "scmlens/error.hpp"
#include "scmlens/parallel.hpp"

namespace scmlens {

StructuralCausalModel::StructuralCausalModel(CausalDag dag, TransformKind transform, std::optional<FilterStats> stats,
                                             std::vector<FittedEquation> equations, ScmMetadata metadata)
    : dag_(std::move(dag)),
      transform_(transform),
      stats_(std::move(stats)),
      equations_(std::move(equations)),
      metadata_(std::move(metadata)) {
  if (transform_ == TransformKind::Binary) {
    if (!stats_) throw ValidationError("binary-transform SCM needs filter statistics");
    for (const auto& layer : dag_.layers()) {
      if (layer.is_conv && stats_->layer(layer.id).size() != layer.node_count) {
        throw ValidationError("filter statistics do not cover layer '" + layer.id + "'");
      }
    }
  }
  const std::size_t roots = dag_.layers().front().node_count;
  if (equations_.size() != dag_.node_count() - roots) {
    throw ValidationError("SCM has " + std::to_string(equations_.size()) + " equations for " +
                          std::to_string(dag_.node_count() - roots) + " non-root nodes");
  }
  for (std::size_t k = 0; k < equations_.size(); ++k) {
    const auto& eq = equations_[k];
    if (eq.node != roots + k) throw ValidationError("SCM equations are not in node order");
    if (eq.coefficients.size() != dag_.parents(eq.node).size() + 1) {
      throw ValidationError("equation of node " + std::to_string(eq.node) + " has " +
                            std::to_string(eq.coefficients.size()) + " coefficients, expected " +
                            std::to_string(dag_.parents(eq.node).size() + 1));
    }
  }
}

const FittedEquation& StructuralCausalModel::equation(std::size_t node) const {
  if (dag_.is_root(node) || node >= dag_.node_count()) {
    throw ValidationError("node " + std::to_string(node) + " has no structural equation");
  }
  return equations_[node - dag_.layers().front().node_count];
}

void InterventionSpec::set(std::size_t node, double value) {
  if (contains(node)) throw ValidationError("node " + std::to_string(node) + " is assigned twice in one intervention");
  assignments_.emplace_back(node, value);
}

bool InterventionSpec::contains(std::size_t node) const {
  return std::any_of(assignments_.begin(), assignments_.end(), [&](const auto& a) { return a.first == node; });
}

StructuralCausalModel fit_scm(const Network& net, const ResponseTable& frobenius_table, TransformKind transform,
                              const LearnerConfig& config, double augment_fraction, std::uint32_t passes) {
  CausalDag dag = build_dag(net.spec());
  std::optional<FilterStats> stats;
  std::vector<FittedEquation> equations;
  if (transform == TransformKind::Binary) {
    stats = compute_stats(frobenius_table);
    equations = fit_all(apply_binary(frobenius_table, *stats), dag, transform, config);
  } else {
    equations = fit_all(frobenius_table, dag, transform, config);
  }
  ScmMetadata meta{net.spec().name, config.seed, config, augment_fraction, passes};
  return StructuralCausalModel(std::move(dag), transform, std::move(stats), std::move(equations), std::move(meta));
}

std::vector<double> scm_forward(const StructuralCausalModel& scm, std::span<const double> root_values,
                                const InterventionSpec& intervention) {
  const CausalDag& dag = scm.dag();
  const std::size_t roots = dag.layers().front().node_count;
  if (root_values.size() != roots) {
    throw ValidationError("expected " + std::to_string(roots) + " root values, got " +
                          std::to_string(root_values.size()));
  }
  const std::size_t n = dag.node_count();
  std::vector<double> values(n, 0.0);
  std::vector<bool> clamped(n, false);
  for (const auto& [node, value] : intervention.assignments()) {
    if (node >= n) throw ValidationError("intervention targets unknown node " + std::to_string(node));
    values[node] = value;
    clamped[node] = true;
  }
  std::vector<double> parent_values;
  for (std::size_t node = 0; node < n; ++node) {
    if (clamped[node]) continue;
    if (node < roots) {
      values[node] = root_values[node];
      continue;
    }
    const auto& parents = dag.parents(node);
    parent_values.resize(parents.size());
    for (std::size_t k = 0; k < parents.size(); ++k) parent_values[k] = values[parents[k]];
    values[node] = scm.equation(node).evaluate(parent_values);
  }
  return values;
}

RootValues root_values(const StructuralCausalModel& scm, const ModelSpec& model, const ForwardTrace& trace) {
  const auto& root_layer = scm.dag().layers().front();
  std::size_t slot = 0;
  try {
    slot = model.recorded_index(root_layer.id);
  } catch (const ValidationError&) {
    throw ValidationError("trace does not record the root layer '" + root_layer.id + "'");
  }
  if (slot >= trace.responses.size() || trace.responses[slot].size() == 0) {
    throw ValidationError("trace is missing responses of the root layer '" + root_layer.id + "'");
  }
  const auto& rec = model.topology.recorded[slot];
  const auto values = node_values(rec, trace.responses[slot]);
  if (values.size() != root_layer.node_count) {
    throw ValidationError("root layer '" + root_layer.id + "' has " + std::to_string(values.size()) +
                          " responses, SCM expects " + std::to_string(root_layer.node_count));
  }
  RootValues out(values.size());
  const bool binary = scm.transform() == TransformKind::Binary && rec.is_conv;
  for (std::size_t f = 0; f < values.size(); ++f) {
    out[f] = binary ? binary_from_norm(values[f], scm.stats()->at(root_layer.id, f)) : values[f];
  }
  return out;
}

std::vector<RootValues> collect_roots(const StructuralCausalModel& scm, const Network& net,
                                      const LabeledDataset& dataset) {
  std::vector<RootValues> roots(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    roots[i] = root_values(scm, net.spec(), forward(net, dataset.images[i]));
  });
  return roots;
}

std::size_t scm_predict(const StructuralCausalModel& scm, std::span<const double> root_values,
                        const InterventionSpec& intervention) {
  const auto values = scm_forward(scm, root_values, intervention);
  const auto& out = scm.dag().layers()[scm.dag().output_layer()];
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.node_count; ++k) {
    if (values[out.first_node + k] > values[out.first_node + best]) best = k;
  }
  return best;
}

std::size_t scm_predict(const StructuralCausalModel& scm, const ModelSpec& model, const ForwardTrace& trace,
                        const InterventionSpec& intervention) {
  return scm_predict(scm, root_values(scm, model, trace), intervention);
}

double scm_accuracy(const StructuralCausalModel& scm, std::span<const RootValues> roots,
                    std::span<const std::uint16_t> labels, const InterventionSpec& intervention) {
  if (roots.empty()) throw ValidationError("SCM accuracy of an empty dataset is undefined");
  if (roots.size() != labels.size()) throw ValidationError("root table and labels differ in length");
  std::vector<std::uint8_t> hits(roots.size(), 0);
  parallel_for(roots.size(), [&](std::size_t i) {
    hits[i] = scm_predict(scm, roots[i], intervention) == labels[i] ? 1 : 0;
  });
  const auto total = std::count(hits.begin(), hits.end(), std::uint8_t{1});
  return static_cast<double>(total) / static_cast<double>(roots.size());
}

SanityResult sanity_check(const StructuralCausalModel& scm, const Network& net, const LabeledDataset& dataset) {
  if (dataset.empty()) throw ValidationError("sanity check needs a non-empty dataset");
  std::vector<std::uint8_t> scm_hits(dataset.size(), 0), model_hits(dataset.size(), 0);
  parallel_for(dataset.size(), [&](std::size_t i) {
    const ForwardTrace trace = forward(net, dataset.images[i]);
    model_hits[i] = trace.predicted_class == dataset.labels[i] ? 1 : 0;
    scm_hits[i] = scm_predict(scm, net.spec(), trace) == dataset.labels[i] ? 1 : 0;
  });
  const double n = static_cast<double>(dataset.size());
  return {static_cast<double>(std::count(scm_hits.begin(), scm_hits.end(), std::uint8_t{1})) / n,
          static_cast<double>(std::count(model_hits.begin(), model_hits.end(), std::uint8_t{1})) / n};
}

double expected_outcome(const StructuralCausalModel& scm, std::span<const RootValues> roots,
                        const InterventionSpec& intervention, std::size_t target) {
  if (target >= scm.dag().node_count()) throw ValidationError("unknown target node " + std::to_string(target));
  if (intervention.contains(target)) throw ValidationError("the target node must not be intervened on");
  if (roots.empty()) throw ValidationError("expected outcome over an empty dataset is undefined");
  std::vector<double> per_sample(roots.size());
  parallel_for(roots.size(), [&](std::size_t i) { per_sample[i] = scm_forward(scm, roots[i], intervention)[target]; });
  double sum = 0.0;
  for (double v : per_sample) sum += v;
  return sum / static_cast<double>(roots.size());
}

ImportanceReport rank_filters(const StructuralCausalModel& scm, const Network& net, const LabeledDataset& dataset,
                              std::string_view layer, bool with_oracle) {
  if (scm.transform() == TransformKind::Binary) {
    throw ValidationError(
        "filter ranking needs a Frobenius-transform SCM: under the binary transform do(filter = 0) is not the "
        "zero-response intervention and the abstraction does not reproduce the model's accuracy");
  }
  const CausalDag& dag = scm.dag();
  const auto& l = dag.layers()[dag.layer_index(layer)];
  if (!l.is_conv) throw ValidationError("filter ranking needs a conv layer, '" + l.id + "' is dense");

  const auto roots = collect_roots(scm, net, dataset);
  ImportanceReport report;
  report.scm.layer = l.id;
  report.scm.baseline_accuracy = scm_accuracy(scm, roots, dataset.labels);
  report.scm.accuracy.resize(l.node_count);
  for (std::size_t f = 0; f < l.node_count; ++f) {
    InterventionSpec zero;
    zero.set(l.first_node + f, 0.0);
    report.scm.accuracy[f] = scm_accuracy(scm, roots, dataset.labels, zero);
  }
  finalize_ranking(report.scm);
  if (with_oracle) {
    report.oracle = oracle_rank(net, dataset, l.id);
    report.comparison = compare_rankings(report.scm, *report.oracle);
  }
  return report;
}

}  // namespace scmlens
