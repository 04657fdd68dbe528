#include "scmlens/structural_learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "scmlens/error.hpp"
#include "scmlens/parallel.hpp"

namespace scmlens {

std::string_view to_string(Learner learner) {
  switch (learner) {
    case Learner::Ols: return "ols";
    case Learner::Ridge: return "ridge";
    case Learner::Logistic: return "logistic";
  }
  return "?";
}

void LearnerConfig::validate() const {
  if (real_learner == Learner::Logistic) {
    throw ValidationError("real-valued nodes need ols or ridge; logistic is reserved for binary nodes");
  }
  if (real_learner == Learner::Ridge && !(lambda > 0.0)) {
    throw ValidationError("ridge lambda must be positive (use ols for lambda = 0)");
  }
  if (max_iters < 1) throw ValidationError("logistic max_iters must be at least 1");
  if (!(tol > 0.0)) throw ValidationError("logistic tolerance must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("holdout fraction must lie in [0, 1)");
  }
}

double FittedEquation::evaluate(std::span<const double> parent_values) const {
  const std::size_t p = parent_values.size();
  double z = coefficients.at(p);
  for (std::size_t k = 0; k < p; ++k) z += static_cast<double>(coefficients[k]) * parent_values[k];
  if (learner == Learner::Logistic) return z >= 0.0 ? 1.0 : 0.0;
  return z;
}

std::size_t filters_to_zero(double fraction, std::size_t k) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("augmentation fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  // Tolerance absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(k) - 1e-9));
  return std::clamp<std::size_t>(count, 1, k);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Unbiased draw in [0, bound) from raw engine output; the standard
// distributions are implementation-defined, this is not.
std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v = gen();
  while (v >= limit) v = gen();
  return v % bound;
}

}  // namespace

std::vector<std::uint32_t> choose_masked_filters(std::uint64_t seed, std::size_t sample, std::size_t pass,
                                                 std::size_t layer, std::size_t k, std::size_t count) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ sample);
  key = splitmix64(key ^ (static_cast<std::uint64_t>(pass) << 32 | layer));
  std::mt19937_64 gen(key);
  std::vector<std::uint32_t> pool(k);
  std::iota(pool.begin(), pool.end(), 0u);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(uniform_below(gen, k - j));
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ResponseTable augment(const Network& net, const LabeledDataset& dataset, double fraction, std::size_t passes,
                      std::uint64_t seed) {
  const ModelSpec& spec = net.spec();
  const auto& recorded = spec.topology.recorded;
  // validates the fraction even when no conv layer would use it
  filters_to_zero(fraction, 1);

  ResponseTable table(spec);
  std::vector<std::size_t> conv_layers;
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    if (recorded[r].is_conv) conv_layers.push_back(r);
  }

  const std::size_t n = dataset.size();
  std::vector<RowInfo> infos;
  infos.reserve(n * (1 + passes * conv_layers.size()));
  for (std::size_t i = 0; i < n; ++i) infos.push_back({static_cast<std::uint32_t>(i), -1, {}});
  for (std::size_t p = 0; p < passes; ++p) {
    for (std::size_t c = 0; c < conv_layers.size(); ++c) {
      const std::size_t r = conv_layers[c];
      const std::size_t k = recorded[r].node_count;
      for (std::size_t i = 0; i < n; ++i) {
        infos.push_back({static_cast<std::uint32_t>(i), static_cast<std::int32_t>(r),
                         choose_masked_filters(seed, i, p, r, k, filters_to_zero(fraction, k))});
      }
    }
  }
  table.append_rows(infos);

  parallel_for(infos.size(), [&](std::size_t row) {
    const RowInfo& info = infos[row];
    AblationMask mask;
    if (!info.observational()) {
      for (auto f : info.masked) mask.add(recorded[static_cast<std::size_t>(info.intervened_layer)].id, f);
    }
    const ForwardTrace trace = forward(net, dataset.images[info.sample], mask);
    auto out = table.row(row);
    for (std::size_t r = 0; r < recorded.size(); ++r) {
      const auto values = node_values(recorded[r], trace.responses[r]);
      std::copy(values.begin(), values.end(), out.begin() + static_cast<std::ptrdiff_t>(table.layers()[r].offset));
    }
  });
  return table;
}

namespace {

std::vector<bool> holdout_rows(std::size_t rows, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 gen(splitmix64(seed ^ 0x5CA1AB1EULL));
  for (std::size_t j = rows; j > 1; --j) std::swap(perm[j - 1], perm[uniform_below(gen, j)]);
  const auto test_count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(rows)));
  std::vector<bool> test(rows, false);
  for (std::size_t k = 0; k < test_count; ++k) test[perm[k]] = true;
  return test;
}

std::vector<float> to_float(const Eigen::VectorXd& beta) {
  std::vector<float> out(static_cast<std::size_t>(beta.size()));
  for (Eigen::Index k = 0; k < beta.size(); ++k) out[static_cast<std::size_t>(k)] = static_cast<float>(beta[k]);
  return out;
}

std::string node_name(const CausalDag& dag, std::size_t node) {
  return dag.nodes()[node].layer + ":" + std::to_string(dag.nodes()[node].filter);
}

FittedEquation fit_node(const ResponseTable& table, const CausalDag& dag, std::size_t node, bool binary_node,
                        const LearnerConfig& config, const std::vector<bool>& test_rows) {
  const auto& parents = dag.parents(node);
  std::vector<std::size_t> parent_cols;
  for (auto p : parents) parent_cols.push_back(table.column(dag.nodes()[p].layer, dag.nodes()[p].filter));
  const std::size_t target_col = table.column(dag.nodes()[node].layer, dag.nodes()[node].filter);

  std::vector<std::size_t> train, test;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (table.is_masked(r, target_col)) continue;
    (test_rows[r] ? test : train).push_back(r);
  }
  const std::size_t cols = parent_cols.size() + 1;
  if (train.size() < cols) {
    train.insert(train.end(), test.begin(), test.end());
    std::sort(train.begin(), train.end());
    test.clear();
  }
  if (train.empty()) throw ValidationError("no usable rows");

  auto design = [&](const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = table.row(rows[i]);
      for (std::size_t k = 0; k < parent_cols.size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[parent_cols[k]];
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols - 1)) = 1.0;
      y[static_cast<Eigen::Index>(i)] = row[target_col];
    }
    return std::pair{x, y};
  };
  const auto [x, y] = design(train);

  FittedEquation eq;
  eq.node = node;
  if (binary_node) {
    eq.learner = Learner::Logistic;
    const double ones = y.sum();
    if (ones == 0.0 || ones == static_cast<double>(y.size())) {
      // Constant node: intercept-only equation that reproduces the constant.
      eq.coefficients.assign(cols, 0.0f);
      eq.coefficients.back() = ones == 0.0 ? -1.0f : 1.0f;
    } else {
      eq.coefficients = to_float(fit_logistic(x, y, config.max_iters, config.tol).coefficients);
    }
  } else {
    eq.learner = config.real_learner;
    eq.coefficients = to_float(config.real_learner == Learner::Ols ? fit_ols(x, y) : fit_ridge(x, y, config.lambda));
  }

  const auto& eval_rows = test.empty() ? train : test;
  double metric = 0.0;
  std::vector<double> parent_values(parent_cols.size());
  for (auto r : eval_rows) {
    const auto row = table.row(r);
    for (std::size_t k = 0; k < parent_cols.size(); ++k) parent_values[k] = row[parent_cols[k]];
    const double predicted = eq.evaluate(parent_values);
    const double actual = row[target_col];
    metric += binary_node ? (predicted == actual ? 1.0 : 0.0) : (predicted - actual) * (predicted - actual);
  }
  eq.fit_metric = static_cast<float>(metric / static_cast<double>(eval_rows.size()));
  if (!std::isfinite(eq.fit_metric)) throw NumericalError("fit metric is not finite");
  return eq;
}

}  // namespace

std::vector<FittedEquation> fit_all(const ResponseTable& table, const CausalDag& dag, TransformKind transform,
                                    const LearnerConfig& config) {
  config.validate();
  for (const auto& layer : dag.layers()) {
    const auto& tl = table.layers().at(table.layer_index(layer.id));
    if (tl.width != layer.node_count) {
      throw ValidationError("response table layer '" + layer.id + "' has " + std::to_string(tl.width) +
                            " columns, DAG expects " + std::to_string(layer.node_count));
    }
  }
  const std::size_t roots = dag.layers().front().node_count;
  const std::size_t count = dag.node_count() - roots;
  const auto test_rows = holdout_rows(table.rows(), config.holdout_fraction, config.seed);

  std::vector<FittedEquation> equations(count);
  parallel_for(count, [&](std::size_t k) {
    const std::size_t node = roots + k;
    const bool binary_node = transform == TransformKind::Binary && dag.layers()[dag.layer_of(node)].is_conv;
    try {
      equations[k] = fit_node(table, dag, node, binary_node, config, test_rows);
    } catch (const Error& e) {
      rethrow_with_context(e, "fitting node " + node_name(dag, node) + " failed");
    }
  });
  return equations;
}

}  // namespace scmlens
