#include "gve/gridhouse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <json.hpp>

#include "gve/rng.hpp"

namespace gve::env {

using nlohmann::json;

const char* action_name(Action a) {
  switch (a) {
    case Action::MoveAhead: return "MoveAhead";
    case Action::RotateLeft: return "RotateLeft";
    case Action::RotateRight: return "RotateRight";
    case Action::LookUp: return "LookUp";
    case Action::LookDown: return "LookDown";
    case Action::Stop: return "Stop";
  }
  return "?";
}

const char* heading_name(Heading h) {
  switch (h) {
    case Heading::North: return "N";
    case Heading::East: return "E";
    case Heading::South: return "S";
    case Heading::West: return "W";
  }
  return "?";
}

const char* pitch_name(Pitch p) {
  switch (p) {
    case Pitch::Down: return "down";
    case Pitch::Level: return "level";
    case Pitch::Up: return "up";
  }
  return "?";
}

namespace {

void heading_vec(Heading h, int& dx, int& dy) {
  switch (h) {
    case Heading::North: dx = 0, dy = -1; return;
    case Heading::East: dx = 1, dy = 0; return;
    case Heading::South: dx = 0, dy = 1; return;
    case Heading::West: dx = -1, dy = 0; return;
  }
  dx = dy = 0;
}

Heading rotate(Heading h, int quarter_turns) {
  int v = (static_cast<int>(h) + quarter_turns) % 4;
  if (v < 0) v += 4;
  return static_cast<Heading>(v);
}

bool pitch_compatible(HeightClass height, Pitch pitch) {
  switch (height) {
    case HeightClass::Mid: return true;
    case HeightClass::Low: return pitch == Pitch::Down;
    case HeightClass::High: return pitch == Pitch::Up;
  }
  return false;
}

// Wall strictly between the two cells along the Bresenham line.
bool line_blocked(const HouseLayout& layout, int x0, int y0, int x1, int y1) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int x = x0, y = y0;
  while (true) {
    if (x == x1 && y == y1) return false;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
    if (x == x1 && y == y1) return false;
    if (layout.wall(x, y)) return true;
  }
}

int chebyshev(int x0, int y0, int x1, int y1) {
  return std::max(std::abs(x1 - x0), std::abs(y1 - y0));
}

struct AttractionPair {
  const char* a;
  const char* b;
};

const std::vector<AttractionPair>& attraction_pairs(RoomType room) {
  static const std::vector<AttractionPair> kitchen = {
      {"stove", "counter"}, {"sink", "mug"}, {"counter", "pot"}};
  static const std::vector<AttractionPair> bedroom = {{"bed", "wardrobe"}, {"bed", "book"}};
  static const std::vector<AttractionPair> bathroom = {{"basin", "soap"},
                                                       {"bathtub", "towel"}};
  static const std::vector<AttractionPair> living = {
      {"sofa", "tv"}, {"sofa", "book"}, {"tv", "lamp"}};
  switch (room) {
    case RoomType::Kitchen: return kitchen;
    case RoomType::Bedroom: return bedroom;
    case RoomType::Bathroom: return bathroom;
    case RoomType::Living: return living;
  }
  return kitchen;
}

bool free_cells_connected(const HouseLayout& layout) {
  const int w = layout.width, h = layout.height;
  int start = -1, free_total = 0;
  for (int i = 0; i < w * h; ++i) {
    if (!layout.walls[static_cast<size_t>(i)]) {
      ++free_total;
      if (start < 0) start = i;
    }
  }
  if (free_total == 0) return false;
  std::vector<std::uint8_t> seen(static_cast<size_t>(w) * h, 0);
  std::deque<int> queue = {start};
  seen[static_cast<size_t>(start)] = 1;
  int reached = 0;
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    ++reached;
    const int cx = cur % w, cy = cur / w;
    const int nx[4] = {cx + 1, cx - 1, cx, cx};
    const int ny[4] = {cy, cy, cy + 1, cy - 1};
    for (int k = 0; k < 4; ++k) {
      if (!layout.in_bounds(nx[k], ny[k]) || layout.wall(nx[k], ny[k])) continue;
      const int id = ny[k] * w + nx[k];
      if (!seen[static_cast<size_t>(id)]) {
        seen[static_cast<size_t>(id)] = 1;
        queue.push_back(id);
      }
    }
  }
  return reached == free_total;
}

}  // namespace

const Placement* HouseLayout::placement_of(int object) const {
  for (const auto& p : objects)
    if (p.object == object) return &p;
  return nullptr;
}

HouseLayout generate_house(std::uint64_t seed, RoomType room,
                           const ObjectVocabulary& vocab, const EnvConfig& cfg) {
  HouseLayout layout;
  layout.room = room;
  layout.seed = seed;

  Rng rng(mix_seed(seed, fnv1a64("layout")));
  layout.width = rng.range(cfg.grid_min, cfg.grid_max);
  layout.height = rng.range(cfg.grid_min, cfg.grid_max);
  const int area = layout.width * layout.height;

  // Sprinkle internal walls, retrying until the free space is connected.
  for (int attempt = 0;; ++attempt) {
    layout.walls.assign(static_cast<size_t>(area), 0);
    if (attempt >= 20) break;  // wall-free fallback is always connected
    Rng wrng(mix_seed(seed, fnv1a64("walls") + static_cast<std::uint64_t>(attempt)));
    const int wall_count = area / 8;
    for (int i = 0; i < wall_count; ++i) {
      const int x = static_cast<int>(wrng.below(static_cast<std::uint32_t>(layout.width)));
      const int y = static_cast<int>(wrng.below(static_cast<std::uint32_t>(layout.height)));
      layout.walls[static_cast<size_t>(y) * layout.width + x] = 1;
    }
    if (free_cells_connected(layout)) break;
  }

  std::vector<int> free_cells;
  for (int i = 0; i < area; ++i)
    if (!layout.walls[static_cast<size_t>(i)]) free_cells.push_back(i);

  // Room core objects always present, the rest sampled from the room pool.
  std::vector<int> pool = vocab.objects_in(room);
  std::vector<int> chosen = vocab.core_objects_in(room);
  std::vector<int> rest;
  for (int id : pool)
    if (std::find(chosen.begin(), chosen.end(), id) == chosen.end()) rest.push_back(id);
  int want = rng.range(cfg.objects_min, cfg.objects_max);
  want = std::min(want, static_cast<int>(pool.size()));
  want = std::max(want, static_cast<int>(chosen.size()));
  while (static_cast<int>(chosen.size()) < want && !rest.empty()) {
    const int pick = static_cast<int>(rng.below(static_cast<std::uint32_t>(rest.size())));
    chosen.push_back(rest[static_cast<size_t>(pick)]);
    rest.erase(rest.begin() + pick);
  }

  std::vector<std::uint8_t> occupied(static_cast<size_t>(area), 0);
  const auto& pairs = attraction_pairs(room);

  auto place_uniform = [&](Rng& r) -> int {
    std::vector<int> open;
    for (int cell : free_cells)
      if (!occupied[static_cast<size_t>(cell)]) open.push_back(cell);
    return open[r.below(static_cast<std::uint32_t>(open.size()))];
  };

  for (int id : chosen) {
    const kg::ObjectInfo& info = vocab.object(id);
    int cell = -1;
    // Correlated pairs land near each other with probability attraction_prob.
    const Placement* partner = nullptr;
    for (const auto& pr : pairs) {
      int other = -1;
      if (info.name == pr.a && vocab.contains(pr.b)) other = vocab.index_of(pr.b);
      if (info.name == pr.b && vocab.contains(pr.a)) other = vocab.index_of(pr.a);
      if (other >= 0) {
        partner = layout.placement_of(other);
        if (partner) break;
      }
    }
    if (partner && rng.bernoulli(cfg.attraction_prob)) {
      std::vector<int> near;
      for (int cell_id : free_cells) {
        if (occupied[static_cast<size_t>(cell_id)]) continue;
        const int cx = cell_id % layout.width, cy = cell_id / layout.width;
        if (chebyshev(cx, cy, partner->x, partner->y) <= cfg.attraction_radius)
          near.push_back(cell_id);
      }
      if (!near.empty()) cell = near[rng.below(static_cast<std::uint32_t>(near.size()))];
    }
    if (cell < 0) cell = place_uniform(rng);
    occupied[static_cast<size_t>(cell)] = 1;
    layout.objects.push_back(
        {id, cell % layout.width, cell / layout.width, info.height, info.large});
  }

  return layout;
}

std::vector<ObjectView> visible_objects(const HouseLayout& layout, const AgentPose& pose,
                                        const ObjectVocabulary& vocab,
                                        const EnvConfig& cfg) {
  std::vector<ObjectView> views(static_cast<size_t>(vocab.size()));
  int hx, hy;
  heading_vec(pose.heading, hx, hy);
  const int px = -hy, py = hx;

  for (const auto& p : layout.objects) {
    const int dx = p.x - pose.x, dy = p.y - pose.y;
    const int forward = dx * hx + dy * hy;
    const int perp = dx * px + dy * py;
    if (forward < std::abs(perp)) continue;  // outside the 90-degree frustum
    const double dist = std::sqrt(static_cast<double>(dx * dx + dy * dy));
    if (dist > cfg.visibility_range) continue;
    if (!pitch_compatible(p.height, pose.pitch)) continue;
    if (line_blocked(layout, pose.x, pose.y, p.x, p.y)) continue;
    ObjectView& v = views[static_cast<size_t>(p.object)];
    v.visible = true;
    v.distance = dist / cfg.visibility_range;
    v.bearing = (forward == 0 && perp == 0)
                    ? 0.0
                    : std::atan2(static_cast<double>(perp), static_cast<double>(forward)) /
                          (M_PI / 4.0);
  }
  return views;
}

int Observation::feature_dim(int object_count) {
  return 3 * object_count + kGlobalSummaryDim;
}

std::vector<double> Observation::global_summary() const {
  std::vector<double> g(static_cast<size_t>(kGlobalSummaryDim), 0.0);
  g[static_cast<size_t>(room)] = 1.0;
  g[static_cast<size_t>(kg::kRoomCount + static_cast<int>(pitch))] = 1.0;
  g[static_cast<size_t>(kGlobalSummaryDim - 1)] = wall_ahead ? 1.0 : 0.0;
  return g;
}

std::vector<double> Observation::features() const {
  std::vector<double> f;
  f.reserve(static_cast<size_t>(feature_dim(static_cast<int>(objects.size()))));
  for (const auto& v : objects) {
    f.push_back(v.visible ? 1.0 : 0.0);
    f.push_back(v.distance);
    f.push_back(v.bearing);
  }
  const auto g = global_summary();
  f.insert(f.end(), g.begin(), g.end());
  return f;
}

Observation observe(const HouseLayout& layout, const AgentPose& pose, int target,
                    const ObjectVocabulary& vocab, const EnvConfig& cfg) {
  Observation obs;
  obs.objects = visible_objects(layout, pose, vocab, cfg);
  obs.room = layout.room;
  obs.pitch = pose.pitch;
  int hx, hy;
  heading_vec(pose.heading, hx, hy);
  obs.wall_ahead = layout.wall(pose.x + hx, pose.y + hy);
  obs.target = target;
  return obs;
}

bool stop_would_succeed(const HouseLayout& layout, const AgentPose& pose, int target,
                        const ObjectVocabulary& vocab, const EnvConfig& cfg) {
  const Placement* p = layout.placement_of(target);
  if (!p) return false;
  if (chebyshev(pose.x, pose.y, p->x, p->y) > cfg.success_distance) return false;
  return visible_objects(layout, pose, vocab, cfg)[static_cast<size_t>(target)].visible;
}

int shortest_path_length(const HouseLayout& layout, const AgentPose& spawn, int target,
                         const ObjectVocabulary& vocab, const EnvConfig& cfg) {
  const int w = layout.width, h = layout.height;
  auto state_id = [w](int x, int y, int heading, int pitch) {
    return ((y * w + x) * 4 + heading) * 3 + pitch;
  };
  const int total = w * h * 4 * 3;
  std::vector<int> dist(static_cast<size_t>(total), -1);

  auto succeeds = [&](int x, int y, int heading, int pitch) {
    AgentPose p{x, y, static_cast<Heading>(heading), static_cast<Pitch>(pitch)};
    return stop_would_succeed(layout, p, target, vocab, cfg);
  };

  const int start = state_id(spawn.x, spawn.y, static_cast<int>(spawn.heading),
                             static_cast<int>(spawn.pitch));
  dist[static_cast<size_t>(start)] = 0;
  std::deque<int> queue = {start};
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    const int pitch = cur % 3;
    const int heading = (cur / 3) % 4;
    const int cell = cur / 12;
    const int x = cell % w, y = cell / w;
    if (succeeds(x, y, heading, pitch)) return dist[static_cast<size_t>(cur)] + 1;

    auto push = [&](int nx, int ny, int nh, int np) {
      const int id = state_id(nx, ny, nh, np);
      if (dist[static_cast<size_t>(id)] < 0) {
        dist[static_cast<size_t>(id)] = dist[static_cast<size_t>(cur)] + 1;
        queue.push_back(id);
      }
    };

    int hx, hy;
    heading_vec(static_cast<Heading>(heading), hx, hy);
    if (!layout.wall(x + hx, y + hy)) push(x + hx, y + hy, heading, pitch);
    push(x, y, (heading + 3) % 4, pitch);
    push(x, y, (heading + 1) % 4, pitch);
    if (pitch < 2) push(x, y, heading, pitch + 1);
    if (pitch > 0) push(x, y, heading, pitch - 1);
  }
  throw std::logic_error("shortest_path_length: target unreachable, layout invariant broken");
}

Episode::Episode(const HouseLayout& layout, const EpisodeSpec& spec,
                 const ObjectVocabulary& vocab, const EnvConfig& cfg)
    : layout_(layout), spec_(spec), vocab_(vocab), cfg_(cfg), pose_(spec.spawn) {
  if (!layout.placement_of(spec.target))
    throw std::logic_error("episode target is not placed in the house");
  if (layout.wall(pose_.x, pose_.y))
    throw std::logic_error("episode spawn cell is a wall");
  obs_ = observe(layout_, pose_, spec_.target, vocab_, cfg_);
}

StepResult Episode::step(Action a) {
  if (done_) throw std::logic_error("Episode::step called on a finished episode");
  ++steps_;

  StepResult result;
  result.reward = -0.01;

  switch (a) {
    case Action::MoveAhead: {
      int hx, hy;
      heading_vec(pose_.heading, hx, hy);
      if (layout_.wall(pose_.x + hx, pose_.y + hy)) {
        result.blocked = true;
      } else {
        pose_.x += hx;
        pose_.y += hy;
      }
      break;
    }
    case Action::RotateLeft:
      pose_.heading = rotate(pose_.heading, -1);
      break;
    case Action::RotateRight:
      pose_.heading = rotate(pose_.heading, 1);
      break;
    case Action::LookUp:
      if (pose_.pitch != Pitch::Up)
        pose_.pitch = static_cast<Pitch>(static_cast<int>(pose_.pitch) + 1);
      break;
    case Action::LookDown:
      if (pose_.pitch != Pitch::Down)
        pose_.pitch = static_cast<Pitch>(static_cast<int>(pose_.pitch) - 1);
      break;
    case Action::Stop:
      done_ = true;
      if (stop_would_succeed(layout_, pose_, spec_.target, vocab_, cfg_)) {
        success_ = true;
        result.reward = 5.0;
      }
      break;
  }

  if (!done_ && steps_ >= spec_.max_steps) done_ = true;

  obs_ = observe(layout_, pose_, spec_.target, vocab_, cfg_);
  result.obs = obs_;
  result.done = done_;
  result.success = success_;
  result.pose = pose_;
  return result;
}

std::uint64_t house_seed_for(RoomType room, int house_index, std::uint64_t world_seed) {
  return mix_seed(world_seed,
                  static_cast<std::uint64_t>(static_cast<int>(room)) * 1000u +
                      static_cast<std::uint64_t>(house_index));
}

std::vector<int> split_house_indices(const std::string& split, const EnvConfig& cfg) {
  std::vector<int> out;
  int lo = 0, hi = 0;
  if (split == "train") {
    lo = 0;
    hi = cfg.houses_train;
  } else if (split == "val") {
    lo = cfg.houses_train;
    hi = cfg.houses_train + cfg.houses_val;
  } else if (split == "test") {
    lo = cfg.houses_train + cfg.houses_val;
    hi = cfg.houses_train + cfg.houses_val + cfg.houses_test;
  } else {
    throw std::invalid_argument("unknown split: " + split);
  }
  for (int i = lo; i < hi; ++i) out.push_back(i);
  return out;
}

EpisodeSpec sample_episode(const HouseLayout& layout, std::uint64_t episode_seed,
                           int max_steps, const std::string& split) {
  Rng rng(mix_seed(episode_seed, fnv1a64("episode")));
  std::vector<int> free_cells;
  for (int y = 0; y < layout.height; ++y)
    for (int x = 0; x < layout.width; ++x)
      if (!layout.wall(x, y)) free_cells.push_back(y * layout.width + x);

  EpisodeSpec spec;
  spec.house_seed = layout.seed;
  spec.room = layout.room;
  const int cell = free_cells[rng.below(static_cast<std::uint32_t>(free_cells.size()))];
  spec.spawn.x = cell % layout.width;
  spec.spawn.y = cell / layout.width;
  spec.spawn.heading = static_cast<Heading>(rng.below(4));
  spec.spawn.pitch = Pitch::Level;
  spec.target =
      layout.objects[rng.below(static_cast<std::uint32_t>(layout.objects.size()))].object;
  spec.max_steps = max_steps;
  spec.split = split;
  return spec;
}

std::string render_ascii(const HouseLayout& layout, const AgentPose& pose,
                         const ObjectVocabulary& vocab) {
  std::vector<std::string> grid(static_cast<size_t>(layout.height),
                                std::string(static_cast<size_t>(layout.width), '.'));
  for (int y = 0; y < layout.height; ++y)
    for (int x = 0; x < layout.width; ++x)
      if (layout.wall(x, y)) grid[static_cast<size_t>(y)][static_cast<size_t>(x)] = '#';
  for (const auto& p : layout.objects)
    grid[static_cast<size_t>(p.y)][static_cast<size_t>(p.x)] =
        vocab.name(p.object)[0];
  const char arrows[4] = {'^', '>', 'v', '<'};
  grid[static_cast<size_t>(pose.y)][static_cast<size_t>(pose.x)] =
      arrows[static_cast<int>(pose.heading)];
  std::string out;
  for (const auto& row : grid) {
    out += row;
    out += '\n';
  }
  return out;
}

std::string episode_spec_to_json(const EpisodeSpec& spec) {
  json doc;
  doc["house_seed"] = spec.house_seed;
  doc["room"] = kg::room_name(spec.room);
  doc["spawn"] = {{"x", spec.spawn.x},
                  {"y", spec.spawn.y},
                  {"heading", heading_name(spec.spawn.heading)},
                  {"pitch", pitch_name(spec.spawn.pitch)}};
  doc["target"] = spec.target;
  doc["max_steps"] = spec.max_steps;
  doc["split"] = spec.split;
  return doc.dump();
}

EpisodeSpec episode_spec_from_json(const std::string& line) {
  json doc = json::parse(line);
  EpisodeSpec spec;
  spec.house_seed = doc.at("house_seed").get<std::uint64_t>();
  spec.room = kg::parse_room(doc.at("room").get<std::string>());
  const auto& sp = doc.at("spawn");
  spec.spawn.x = sp.at("x").get<int>();
  spec.spawn.y = sp.at("y").get<int>();
  const std::string hd = sp.at("heading").get<std::string>();
  for (int i = 0; i < 4; ++i)
    if (hd == heading_name(static_cast<Heading>(i))) spec.spawn.heading = static_cast<Heading>(i);
  const std::string pt = sp.at("pitch").get<std::string>();
  for (int i = 0; i < 3; ++i)
    if (pt == pitch_name(static_cast<Pitch>(i))) spec.spawn.pitch = static_cast<Pitch>(i);
  spec.target = doc.at("target").get<int>();
  spec.max_steps = doc.at("max_steps").get<int>();
  spec.split = doc.at("split").get<std::string>();
  return spec;
}

}  // namespace gve::env
