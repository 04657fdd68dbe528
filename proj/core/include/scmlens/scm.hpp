#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scmlens/causal_graph.hpp"
#include "scmlens/dataset.hpp"
#include "scmlens/forward.hpp"
#include "scmlens/report.hpp"
#include "scmlens/structural_learn.hpp"
#include "scmlens/transforms.hpp"

namespace scmlens {

struct ScmMetadata {
  std::string model_name;
  std::uint64_t seed = 42;
  LearnerConfig learner;
  double augment_fraction = 0.1;
  std::uint32_t passes = 1;
  friend bool operator==(const ScmMetadata&, const ScmMetadata&) = default;
};

/// Causal DAG plus one fitted structural equation per non-root node.
/// Noise terms are not modelled at query time: equations act as point
/// predictors.
class StructuralCausalModel {
 public:
  StructuralCausalModel() = default;
  StructuralCausalModel(CausalDag dag, TransformKind transform, std::optional<FilterStats> stats,
                        std::vector<FittedEquation> equations, ScmMetadata metadata = {});

  const CausalDag& dag() const noexcept { return dag_; }
  TransformKind transform() const noexcept { return transform_; }
  const std::optional<FilterStats>& stats() const noexcept { return stats_; }
  const std::vector<FittedEquation>& equations() const noexcept { return equations_; }
  const FittedEquation& equation(std::size_t node) const;
  const ScmMetadata& metadata() const noexcept { return metadata_; }

  friend bool operator==(const StructuralCausalModel&, const StructuralCausalModel&) = default;

 private:
  CausalDag dag_;
  TransformKind transform_ = TransformKind::Frobenius;
  std::optional<FilterStats> stats_;
  std::vector<FittedEquation> equations_;  // node = roots + position
  ScmMetadata metadata_;
};

/// do(X = x): fixed values for a set of nodes.
class InterventionSpec {
 public:
  InterventionSpec() = default;

  /// Rejects a node assigned twice.
  void set(std::size_t node, double value);
  bool empty() const noexcept { return assignments_.empty(); }
  bool contains(std::size_t node) const;
  const std::vector<std::pair<std::size_t, double>>& assignments() const noexcept { return assignments_; }

 private:
  std::vector<std::pair<std::size_t, double>> assignments_;
};

/// Per-sample exogenous inputs: transformed first-layer responses.
using RootValues = std::vector<double>;

/// End-to-end SCM construction: augmentation, statistics, transform, fit.
StructuralCausalModel fit_scm(const Network& net, const ResponseTable& frobenius_table, TransformKind transform,
                              const LearnerConfig& config, double augment_fraction, std::uint32_t passes);

/// Evaluates every node in topological order. Intervened nodes keep their
/// assigned value and their equations are never evaluated.
std::vector<double> scm_forward(const StructuralCausalModel& scm, std::span<const double> root_values,
                                const InterventionSpec& intervention = {});

RootValues root_values(const StructuralCausalModel& scm, const ModelSpec& model, const ForwardTrace& trace);

/// Root values of every sample, from real forward passes.
std::vector<RootValues> collect_roots(const StructuralCausalModel& scm, const Network& net,
                                      const LabeledDataset& dataset);

/// Class whose output node is largest (lowest index on ties).
std::size_t scm_predict(const StructuralCausalModel& scm, std::span<const double> root_values,
                        const InterventionSpec& intervention = {});
std::size_t scm_predict(const StructuralCausalModel& scm, const ModelSpec& model, const ForwardTrace& trace,
                        const InterventionSpec& intervention = {});

/// Fraction of samples whose SCM prediction matches the label.
double scm_accuracy(const StructuralCausalModel& scm, std::span<const RootValues> roots,
                    std::span<const std::uint16_t> labels, const InterventionSpec& intervention = {});

struct SanityResult {
  double scm_accuracy = 0.0;
  double model_accuracy = 0.0;
};

SanityResult sanity_check(const StructuralCausalModel& scm, const Network& net, const LabeledDataset& dataset);

/// E[Y | do(X = x)] over the samples' root values. Y must not be intervened.
double expected_outcome(const StructuralCausalModel& scm, std::span<const RootValues> roots,
                        const InterventionSpec& intervention, std::size_t target);

/// Counterfactual importance of every filter of a conv layer: SCM accuracy
/// under do(filter = 0). With `with_oracle`, adds real-ablation columns and
/// the rank comparison. Refused for binary-transform SCMs.
ImportanceReport rank_filters(const StructuralCausalModel& scm, const Network& net, const LabeledDataset& dataset,
                              std::string_view layer, bool with_oracle);

std::string serialize_scm(const StructuralCausalModel& scm);
StructuralCausalModel load_scm(std::string_view bytes);
void save_scm_file(const StructuralCausalModel& scm, const std::string& path);
StructuralCausalModel load_scm_file(const std::string& path);

}  // namespace scmlens
