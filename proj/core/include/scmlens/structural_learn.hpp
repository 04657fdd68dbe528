#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "scmlens/causal_graph.hpp"
#include "scmlens/dataset.hpp"
#include "scmlens/forward.hpp"
#include "scmlens/regression.hpp"
#include "scmlens/response_table.hpp"
#include "scmlens/transforms.hpp"

namespace scmlens {

enum class Learner : std::uint8_t { Ols = 0, Ridge = 1, Logistic = 2 };

std::string_view to_string(Learner learner);

struct LearnerConfig {
  /// Learner for real-valued nodes (Ols or Ridge). Binary-transformed conv
  /// nodes always use logistic regression.
  Learner real_learner = Learner::Ridge;
  double lambda = 0.1;
  int max_iters = kDefaultLogisticIterations;
  double tol = kDefaultLogisticTolerance;
  /// Seeds the train/holdout split of table rows.
  std::uint64_t seed = 42;
  double holdout_fraction = 0.2;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;
  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

/// Structural equation of one non-root node: a linear predictor over the
/// node's parents (in parent order) with the intercept last. Logistic
/// equations predict 1 when the linear score is non-negative.
struct FittedEquation {
  std::size_t node = 0;
  Learner learner = Learner::Ols;
  std::vector<float> coefficients;
  /// Holdout MSE for real-valued nodes, holdout accuracy for binary nodes.
  float fit_metric = 0.0f;

  double evaluate(std::span<const double> parent_values) const;
  friend bool operator==(const FittedEquation&, const FittedEquation&) = default;
};

/// Number of filters zeroed per interventional row for a layer of k filters.
std::size_t filters_to_zero(double fraction, std::size_t k);

/// Deterministic choice of `count` distinct filters out of k for one
/// interventional row; depends only on its arguments.
std::vector<std::uint32_t> choose_masked_filters(std::uint64_t seed, std::size_t sample, std::size_t pass,
                                                 std::size_t layer, std::size_t k, std::size_t count);

/// Observational rows for every sample, then passes x conv layers x samples
/// interventional rows, each from a real masked forward pass.
ResponseTable augment(const Network& net, const LabeledDataset& dataset, double fraction, std::size_t passes,
                      std::uint64_t seed);

/// Fits one equation per non-root node. `table` holds transformed values;
/// under the binary transform conv nodes are fitted with logistic regression.
/// A row never trains the equation of a node that its own intervention zeroed.
std::vector<FittedEquation> fit_all(const ResponseTable& table, const CausalDag& dag, TransformKind transform,
                                    const LearnerConfig& config);

}  // namespace scmlens
