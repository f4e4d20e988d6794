#include "gve/adjacency.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "gve/rng.hpp"

namespace gve::kg {

using nlohmann::json;

AdjacencyTensor::AdjacencyTensor(int n, int room_channels)
    : n_(n), room_channels_(room_channels) {
  ch_.assign(static_cast<size_t>(room_channels + 1),
             std::vector<double>(static_cast<size_t>(n) * n, 0.0));
  auto& self = ch_.back();
  for (int i = 0; i < n; ++i) self[static_cast<size_t>(i) * n + i] = 1.0;
}

double AdjacencyTensor::at(int channel, int i, int j) const {
  return ch_[static_cast<size_t>(channel)][static_cast<size_t>(i) * n_ + j];
}

void AdjacencyTensor::set(int channel, int i, int j, double v) {
  if (v < 0.0) throw std::invalid_argument("AdjacencyTensor: negative edge weight");
  ch_[static_cast<size_t>(channel)][static_cast<size_t>(i) * n_ + j] = v;
}

const std::vector<double>& AdjacencyTensor::channel(int c) const {
  return ch_[static_cast<size_t>(c)];
}

double AdjacencyTensor::room_density(const ObjectVocabulary& vocab) const {
  long allowed = 0, set_count = 0;
  for (int c = 0; c < room_channels_; ++c) {
    const RoomType room = kAllRooms[static_cast<size_t>(c)];
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        if (i == j) continue;
        if (!vocab.object(i).in_room(room) || !vocab.object(j).in_room(room)) continue;
        ++allowed;
        if (at(c, i, j) != 0.0) ++set_count;
      }
  }
  return allowed == 0 ? 0.0 : static_cast<double>(set_count) / static_cast<double>(allowed);
}

AdjacencyTensor build_from_cooccurrence(const ObjectVocabulary& vocab,
                                        const std::vector<ViewSample>& views,
                                        int threshold) {
  const int n = vocab.size();
  std::vector<std::vector<int>> counts(
      kRoomCount, std::vector<int>(static_cast<size_t>(n) * n, 0));

  for (const auto& view : views) {
    const int c = static_cast<int>(view.room);
    for (int id : view.objects)
      if (id < 0 || id >= n)
        throw std::invalid_argument("co-occurrence view holds unknown object id " +
                                    std::to_string(id));
    for (size_t a = 0; a < view.objects.size(); ++a)
      for (size_t b = a + 1; b < view.objects.size(); ++b) {
        const int i = view.objects[a], j = view.objects[b];
        if (i == j) continue;
        counts[static_cast<size_t>(c)][static_cast<size_t>(i) * n + j] += 1;
        counts[static_cast<size_t>(c)][static_cast<size_t>(j) * n + i] += 1;
      }
  }

  AdjacencyTensor adj(n, kRoomCount);
  for (int c = 0; c < kRoomCount; ++c) {
    const RoomType room = kAllRooms[static_cast<size_t>(c)];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (!vocab.object(i).in_room(room) || !vocab.object(j).in_room(room)) continue;
        if (counts[static_cast<size_t>(c)][static_cast<size_t>(i) * n + j] >= threshold)
          adj.set(c, i, j, 1.0);
      }
  }
  return adj;
}

AdjacencyTensor build_from_named_views(const ObjectVocabulary& vocab,
                                       const std::vector<NamedViewSample>& views,
                                       int threshold) {
  std::vector<ViewSample> resolved;
  resolved.reserve(views.size());
  for (const auto& view : views) {
    ViewSample s;
    s.room = view.room;
    for (const auto& name : view.object_names) s.objects.push_back(vocab.index_of(name));
    resolved.push_back(std::move(s));
  }
  return build_from_cooccurrence(vocab, resolved, threshold);
}

AdjacencyTensor randomize_edges(const AdjacencyTensor& adj,
                                const ObjectVocabulary& vocab, std::uint64_t seed) {
  const int n = adj.nodes();
  const double p = adj.room_density(vocab);
  AdjacencyTensor out(n, adj.room_channels());
  Rng rng(mix_seed(seed, fnv1a64("randomize-edges")));
  for (int c = 0; c < adj.room_channels(); ++c) {
    const RoomType room = kAllRooms[static_cast<size_t>(c)];
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (!vocab.object(i).in_room(room) || !vocab.object(j).in_room(room)) continue;
        if (rng.bernoulli(p)) {
          out.set(c, i, j, 1.0);
          out.set(c, j, i, 1.0);
        }
      }
  }
  return out;
}

std::string adjacency_to_json(const AdjacencyTensor& adj, const ObjectVocabulary& vocab) {
  json doc;
  json names = json::array();
  for (int i = 0; i < vocab.size(); ++i) names.push_back(vocab.name(i));
  doc["objects"] = names;
  json labels = json::array();
  for (RoomType r : kAllRooms) labels.push_back(room_name(r));
  labels.push_back("self");
  doc["channels"] = labels;
  json mats = json::array();
  for (int c = 0; c < adj.channels(); ++c) {
    json rows = json::array();
    for (int i = 0; i < adj.nodes(); ++i) {
      json row = json::array();
      for (int j = 0; j < adj.nodes(); ++j) row.push_back(adj.at(c, i, j));
      rows.push_back(row);
    }
    mats.push_back(rows);
  }
  doc["adjacency"] = mats;
  return doc.dump(1);
}

AdjacencyTensor adjacency_from_json(const std::string& text, const ObjectVocabulary& vocab) {
  json doc = json::parse(text);
  const auto& names = doc.at("objects");
  if (static_cast<int>(names.size()) != vocab.size())
    throw std::runtime_error("graph file vocabulary size mismatch");
  for (int i = 0; i < vocab.size(); ++i)
    if (names[static_cast<size_t>(i)].get<std::string>() != vocab.name(i))
      throw std::runtime_error("graph file vocabulary does not match current run");
  const auto& mats = doc.at("adjacency");
  const int channels = static_cast<int>(mats.size());
  AdjacencyTensor adj(vocab.size(), channels - 1);
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < vocab.size(); ++i)
      for (int j = 0; j < vocab.size(); ++j)
        adj.set(c, i, j, mats[static_cast<size_t>(c)][static_cast<size_t>(i)]
                             [static_cast<size_t>(j)].get<double>());
  return adj;
}

void save_adjacency(const std::string& path, const AdjacencyTensor& adj,
                    const ObjectVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file " + path);
  out << adjacency_to_json(adj, vocab) << "\n";
}

AdjacencyTensor load_adjacency(const std::string& path, const ObjectVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read graph file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return adjacency_from_json(text, vocab);
}

std::vector<EdgeEntry> top_edges(const AdjacencyTensor& adj, int object, int k) {
  std::vector<EdgeEntry> edges;
  for (int c = 0; c < adj.room_channels(); ++c)
    for (int j = 0; j < adj.nodes(); ++j) {
      if (j == object) continue;
      const double w = adj.at(c, object, j);
      if (w > 0.0) edges.push_back({j, c, w});
    }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const EdgeEntry& a, const EdgeEntry& b) { return a.weight > b.weight; });
  if (static_cast<int>(edges.size()) > k) edges.resize(static_cast<size_t>(k));
  return edges;
}

}  // namespace gve::kg
