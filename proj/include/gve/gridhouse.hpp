#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gve/vocab.hpp"

namespace gve::env {

using kg::HeightClass;
using kg::ObjectVocabulary;
using kg::RoomType;

enum class Heading { North, East, South, West };
enum class Pitch { Down, Level, Up };
enum class Action { MoveAhead, RotateLeft, RotateRight, LookUp, LookDown, Stop };
inline constexpr int kActionCount = 6;

const char* action_name(Action a);
const char* heading_name(Heading h);
const char* pitch_name(Pitch p);

struct EnvConfig {
  int grid_min = 8;
  int grid_max = 12;
  int objects_min = 5;
  int objects_max = 8;
  double visibility_range = 5.0;
  int success_distance = 1;       // Chebyshev cells
  double attraction_prob = 0.8;   // correlated pair lands within...
  int attraction_radius = 2;      // ...this Chebyshev radius
  int max_steps_train = 50;
  int max_steps_test = 200;
  int houses_train = 20;
  int houses_val = 5;
  int houses_test = 5;
};

struct Placement {
  int object;
  int x, y;
  HeightClass height;
  bool large;
};

struct HouseLayout {
  RoomType room;
  int width, height;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  std::vector<Placement> objects;
  std::uint64_t seed;

  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  bool wall(int x, int y) const {
    return !in_bounds(x, y) || walls[static_cast<size_t>(y) * width + x] != 0;
  }
  const Placement* placement_of(int object) const;
};

struct AgentPose {
  int x = 0, y = 0;
  Heading heading = Heading::North;
  Pitch pitch = Pitch::Level;

  bool operator==(const AgentPose&) const = default;
};

struct ObjectView {
  bool visible = false;
  double distance = 0.0;  // euclidean / range, 0 when invisible
  double bearing = 0.0;   // [-1,1] across the frustum, 0 when invisible
};

struct Observation {
  std::vector<ObjectView> objects;  // one slot per vocabulary object
  RoomType room = RoomType::Kitchen;
  Pitch pitch = Pitch::Level;
  bool wall_ahead = false;
  int target = -1;

  // Flat feature vector: per-object (visible, distance, bearing) slices
  // followed by the global summary (room one-hot, pitch one-hot, wall flag).
  std::vector<double> features() const;
  static int feature_dim(int object_count);
  // The global summary alone, as broadcast into graph node features.
  std::vector<double> global_summary() const;
  static constexpr int kGlobalSummaryDim = kg::kRoomCount + 3 + 1;
};

struct EpisodeSpec {
  std::uint64_t house_seed = 0;
  RoomType room = RoomType::Kitchen;
  AgentPose spawn;
  int target = -1;
  int max_steps = 50;
  std::string split = "train";
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  bool success = false;
  bool blocked = false;
  AgentPose pose;
};

// Deterministic generation for (seed, room type): connected free space,
// 5-8 objects with room-core objects always present and correlated pairs
// attracted to each other.
HouseLayout generate_house(std::uint64_t seed, RoomType room,
                           const ObjectVocabulary& vocab, const EnvConfig& cfg = {});

// Visibility: inside the 90-degree frustum of the heading, within range,
// wall-free Bresenham line of sight, pitch compatible with the object's
// height class. One entry per vocabulary object.
std::vector<ObjectView> visible_objects(const HouseLayout& layout, const AgentPose& pose,
                                        const ObjectVocabulary& vocab,
                                        const EnvConfig& cfg = {});

Observation observe(const HouseLayout& layout, const AgentPose& pose, int target,
                    const ObjectVocabulary& vocab, const EnvConfig& cfg = {});

bool stop_would_succeed(const HouseLayout& layout, const AgentPose& pose, int target,
                        const ObjectVocabulary& vocab, const EnvConfig& cfg = {});

// Minimum number of actions (rotations, looks, moves and the final Stop)
// to a successful termination; BFS over (cell, heading, pitch).
int shortest_path_length(const HouseLayout& layout, const AgentPose& spawn, int target,
                         const ObjectVocabulary& vocab, const EnvConfig& cfg = {});

class Episode {
 public:
  Episode(const HouseLayout& layout, const EpisodeSpec& spec,
          const ObjectVocabulary& vocab, const EnvConfig& cfg = {});

  StepResult step(Action a);  // contract error when already done
  const Observation& observation() const { return obs_; }
  const AgentPose& pose() const { return pose_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  int steps_taken() const { return steps_; }
  const EpisodeSpec& spec() const { return spec_; }

 private:
  const HouseLayout& layout_;
  EpisodeSpec spec_;
  const ObjectVocabulary& vocab_;
  EnvConfig cfg_;
  AgentPose pose_;
  Observation obs_;
  int steps_ = 0;
  bool done_ = false;
  bool success_ = false;
};

// House seeds are a fixed schedule per (room, index); indices < houses_train
// are the train split, then val, then test.
std::uint64_t house_seed_for(RoomType room, int house_index, std::uint64_t world_seed);
std::vector<int> split_house_indices(const std::string& split, const EnvConfig& cfg);

// Uniform spawn pose and target among placed objects.
EpisodeSpec sample_episode(const HouseLayout& layout, std::uint64_t episode_seed,
                           int max_steps, const std::string& split);

std::string render_ascii(const HouseLayout& layout, const AgentPose& pose,
                         const ObjectVocabulary& vocab);

std::string episode_spec_to_json(const EpisodeSpec& spec);
EpisodeSpec episode_spec_from_json(const std::string& line);

}  // namespace gve::env
