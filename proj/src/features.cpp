#include "gve/features.hpp"

#include <stdexcept>

namespace gve::kg {

using diff::Tensor;

Tensor assemble_node_features(const env::Observation& obs, const ObjectVocabulary& vocab,
                              const Tensor& embed_table) {
  const int n = vocab.size();
  if (static_cast<int>(obs.objects.size()) != n)
    throw std::invalid_argument("node features: observation covers " +
                                std::to_string(obs.objects.size()) + " objects, vocabulary " +
                                std::to_string(n));
  if (embed_table.shape()[0] != n)
    throw std::invalid_argument("node features: embedding table rows mismatch");

  const auto global = obs.global_summary();
  if (3 + static_cast<int>(global.size()) > kNodeSliceDim)
    throw std::logic_error("node features: slice dim too small for global summary");

  std::vector<double> slice(static_cast<size_t>(n) * kNodeSliceDim, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& v = obs.objects[static_cast<size_t>(i)];
    double* row = &slice[static_cast<size_t>(i) * kNodeSliceDim];
    row[0] = v.visible ? 1.0 : 0.0;
    row[1] = v.distance;
    row[2] = v.bearing;
    for (size_t g = 0; g < global.size(); ++g) row[3 + g] = global[g];
  }
  Tensor obs_part = Tensor::constant({n, kNodeSliceDim}, std::move(slice));
  return diff::concat({obs_part, embed_table}, 1);
}

Tensor language_only_features(const ObjectVocabulary& vocab, const Tensor& embed_table) {
  const int n = vocab.size();
  if (embed_table.shape()[0] != n)
    throw std::invalid_argument("node features: embedding table rows mismatch");
  return diff::concat({Tensor::zeros({n, kNodeSliceDim}), embed_table}, 1);
}

}  // namespace gve::kg
