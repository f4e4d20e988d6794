#pragma once

#include "gve/gridhouse.hpp"
#include "gve/tensor.hpp"
#include "gve/vocab.hpp"

namespace gve::kg {

inline constexpr int kNodeSliceDim = 16;  // observation-derived half of a node row

// n x d node feature matrix, d = kNodeSliceDim + embedding width. Row i is
// the observation slice for object i (visibility flag, normalized distance,
// normalized bearing, broadcast global summary, zero padding) concatenated
// with the object's learned embedding row. Differentiable with respect to
// the embedding table.
diff::Tensor assemble_node_features(const env::Observation& obs,
                                    const ObjectVocabulary& vocab,
                                    const diff::Tensor& embed_table);

// Ablation: embeddings only, observation slice zeroed (columns stay aligned
// with assemble_node_features so downstream weights keep their meaning).
diff::Tensor language_only_features(const ObjectVocabulary& vocab,
                                    const diff::Tensor& embed_table);

}  // namespace gve::kg
