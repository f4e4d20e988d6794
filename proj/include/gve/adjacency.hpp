#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gve/vocab.hpp"

namespace gve::kg {

// n x n x C stacked per-room co-location adjacency. Channel c < room count
// holds the binary co-occurrence graph for that room type, masked to zero
// for objects that cannot appear there; the last channel is the identity
// (self connections). Immutable after construction, shared read-only.
class AdjacencyTensor {
 public:
  AdjacencyTensor(int n, int room_channels);

  int nodes() const { return n_; }
  int channels() const { return room_channels_ + 1; }
  int room_channels() const { return room_channels_; }
  int self_channel() const { return room_channels_; }

  double at(int channel, int i, int j) const;
  void set(int channel, int i, int j, double v);  // build-time only
  const std::vector<double>& channel(int c) const;

  // Fraction of non-zero off-diagonal entries among allowed (mask) slots
  // across all room channels.
  double room_density(const ObjectVocabulary& vocab) const;

 private:
  int n_;
  int room_channels_;
  std::vector<std::vector<double>> ch_;
};

struct ViewSample {
  RoomType room;
  std::vector<int> objects;  // ids visible in one egocentric view
};

// Binary edges: (i,j) set in channel R iff i and j were simultaneously
// visible in at least `threshold` views of room type R. Symmetric; self
// channel is the identity.
AdjacencyTensor build_from_cooccurrence(const ObjectVocabulary& vocab,
                                        const std::vector<ViewSample>& views,
                                        int threshold);

// Same carrier as build_from_cooccurrence, raw object names; unknown names
// raise a vocabulary error.
struct NamedViewSample {
  RoomType room;
  std::vector<std::string> object_names;
};
AdjacencyTensor build_from_named_views(const ObjectVocabulary& vocab,
                                       const std::vector<NamedViewSample>& views,
                                       int threshold);

// Room channels replaced by iid Bernoulli(p) symmetric edges respecting the
// room-membership mask; p is the empirical density of the input; the self
// channel is untouched.
AdjacencyTensor randomize_edges(const AdjacencyTensor& adj,
                                const ObjectVocabulary& vocab, std::uint64_t seed);

// JSON document: vocabulary names, channel labels, dense matrices.
std::string adjacency_to_json(const AdjacencyTensor& adj, const ObjectVocabulary& vocab);
AdjacencyTensor adjacency_from_json(const std::string& text, const ObjectVocabulary& vocab);
void save_adjacency(const std::string& path, const AdjacencyTensor& adj,
                    const ObjectVocabulary& vocab);
AdjacencyTensor load_adjacency(const std::string& path, const ObjectVocabulary& vocab);

struct EdgeEntry {
  int other;
  int channel;
  double weight;
};
// Strongest edges incident to an object, per room channel, for inspection.
std::vector<EdgeEntry> top_edges(const AdjacencyTensor& adj, int object, int k);

}  // namespace gve::kg
