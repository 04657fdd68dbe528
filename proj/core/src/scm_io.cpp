#include "binary_io.hpp"
#include "scmlens/error.hpp"
#include "scmlens/scm.hpp"

namespace scmlens {

namespace {
constexpr std::string_view kMagic = "SCMF";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string serialize_scm(const StructuralCausalModel& scm) {
  detail::ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(kVersion);
  out.put_u8(static_cast<std::uint8_t>(scm.transform()));

  const auto& meta = scm.metadata();
  out.put_string(meta.model_name);
  out.put_u64(meta.seed);
  out.put_u8(static_cast<std::uint8_t>(meta.learner.real_learner));
  out.put_f64(meta.learner.lambda);
  out.put_u32(static_cast<std::uint32_t>(meta.learner.max_iters));
  out.put_f64(meta.learner.tol);
  out.put_u64(meta.learner.seed);
  out.put_f64(meta.learner.holdout_fraction);
  out.put_f64(meta.augment_fraction);
  out.put_u32(meta.passes);

  const CausalDag& dag = scm.dag();
  out.put_u32(static_cast<std::uint32_t>(dag.layers().size()));
  for (const auto& layer : dag.layers()) {
    out.put_string(layer.id);
    out.put_u8(layer.is_conv ? 1 : 0);
    out.put_u32(static_cast<std::uint32_t>(layer.node_count));
    out.put_u32(static_cast<std::uint32_t>(layer.depth));
    out.put_u32(static_cast<std::uint32_t>(layer.parent_layers.size()));
    for (auto p : layer.parent_layers) out.put_u32(static_cast<std::uint32_t>(p));
  }
  out.put_u32(static_cast<std::uint32_t>(dag.node_count()));
  for (std::size_t node = 0; node < dag.node_count(); ++node) {
    out.put_u32(static_cast<std::uint32_t>(dag.layer_of(node)));
    out.put_u32(static_cast<std::uint32_t>(dag.nodes()[node].filter));
  }
  out.put_u32(static_cast<std::uint32_t>(dag.edges().size()));
  for (const auto& [parent, child] : dag.edges()) {
    out.put_u32(static_cast<std::uint32_t>(parent));
    out.put_u32(static_cast<std::uint32_t>(child));
  }

  if (scm.transform() == TransformKind::Binary) {
    for (const auto& layer : dag.layers()) {
      if (!layer.is_conv) continue;
      for (const auto& stat : scm.stats()->layer(layer.id)) {
        out.put_f32(stat.mu);
        out.put_f32(stat.sigma);
      }
    }
  }

  for (const auto& eq : scm.equations()) {
    out.put_u8(static_cast<std::uint8_t>(eq.learner));
    out.put_u32(static_cast<std::uint32_t>(eq.coefficients.size()));
    for (float c : eq.coefficients) out.put_f32(c);
    out.put_f32(eq.fit_metric);
  }
  return out.take();
}

StructuralCausalModel load_scm(std::string_view bytes) {
  detail::ByteReader in(bytes, "scm");
  in.expect_magic(kMagic);
  in.expect_version(kVersion);
  const std::uint8_t transform_tag = in.u8();
  if (transform_tag > 1) in.fail("unknown transform tag " + std::to_string(transform_tag));
  const auto transform = static_cast<TransformKind>(transform_tag);

  ScmMetadata meta;
  meta.model_name = in.string();
  meta.seed = in.u64();
  const std::uint8_t learner_tag = in.u8();
  if (learner_tag > 1) in.fail("unknown real-valued learner tag " + std::to_string(learner_tag));
  meta.learner.real_learner = static_cast<Learner>(learner_tag);
  meta.learner.lambda = in.f64();
  meta.learner.max_iters = static_cast<int>(in.u32());
  meta.learner.tol = in.f64();
  meta.learner.seed = in.u64();
  meta.learner.holdout_fraction = in.f64();
  meta.augment_fraction = in.f64();
  meta.passes = in.u32();

  const std::size_t n_layers = in.u32();
  std::vector<CausalLayer> layers;
  std::size_t first = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    CausalLayer layer;
    layer.id = in.string();
    layer.is_conv = in.u8() != 0;
    layer.node_count = in.u32();
    layer.depth = in.u32();
    const std::size_t parents = in.u32();
    in.require(parents * 4);
    for (std::size_t k = 0; k < parents; ++k) layer.parent_layers.push_back(in.u32());
    layer.first_node = first;
    first += layer.node_count;
    layers.push_back(std::move(layer));
  }
  CausalDag dag;
  try {
    dag = CausalDag(std::move(layers));
  } catch (const ValidationError& e) {
    in.fail(std::string("invalid DAG: ") + e.what());
  }

  const std::size_t n_nodes = in.u32();
  if (n_nodes != dag.node_count()) in.fail("node table size does not match layer table");
  for (std::size_t node = 0; node < n_nodes; ++node) {
    const std::size_t layer = in.u32();
    const std::size_t filter = in.u32();
    if (layer != dag.layer_of(node) || filter != dag.nodes()[node].filter) in.fail("node table is inconsistent");
  }
  const std::size_t n_edges = in.u32();
  if (n_edges != dag.edges().size()) in.fail("edge table size does not match layer table");
  for (std::size_t e = 0; e < n_edges; ++e) {
    const std::size_t parent = in.u32();
    const std::size_t child = in.u32();
    if (dag.edges()[e] != std::pair{parent, child}) in.fail("edge table is inconsistent");
  }

  std::optional<FilterStats> stats;
  if (transform == TransformKind::Binary) {
    stats.emplace();
    for (const auto& layer : dag.layers()) {
      if (!layer.is_conv) continue;
      std::vector<FilterStat> entries(layer.node_count);
      for (auto& s : entries) {
        s.mu = in.f32();
        s.sigma = in.f32();
      }
      stats->set(layer.id, std::move(entries));
    }
  }

  std::vector<FittedEquation> equations;
  for (std::size_t node = dag.layers().front().node_count; node < dag.node_count(); ++node) {
    FittedEquation eq;
    eq.node = node;
    const std::uint8_t tag = in.u8();
    if (tag > 2) in.fail("unknown learner tag " + std::to_string(tag));
    eq.learner = static_cast<Learner>(tag);
    const std::size_t count = in.u32();
    if (count != dag.parents(node).size() + 1) in.fail("coefficient count does not match parent count");
    eq.coefficients.resize(count);
    for (float& c : eq.coefficients) c = in.f32();
    eq.fit_metric = in.f32();
    equations.push_back(std::move(eq));
  }
  in.expect_end();
  return StructuralCausalModel(std::move(dag), transform, std::move(stats), std::move(equations), std::move(meta));
}

void save_scm_file(const StructuralCausalModel& scm, const std::string& path) {
  detail::write_file(path, serialize_scm(scm));
}

StructuralCausalModel load_scm_file(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return load_scm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace scmlens
