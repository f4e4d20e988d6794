#pragma once

#include <array>
#include <string>
#include <vector>

namespace gve::kg {

enum class RoomType { Kitchen, Bedroom, Bathroom, Living };
inline constexpr int kRoomCount = 4;
inline constexpr std::array<RoomType, kRoomCount> kAllRooms = {
    RoomType::Kitchen, RoomType::Bedroom, RoomType::Bathroom, RoomType::Living};

const char* room_name(RoomType r);
RoomType parse_room(const std::string& name);

enum class HeightClass { Low, Mid, High };

struct ObjectInfo {
  std::string name;
  std::vector<RoomType> rooms;  // non-empty
  HeightClass height = HeightClass::Mid;
  bool large = false;
  // Core objects are always placed when a house of that room type is
  // generated (every kitchen has a stove).
  std::vector<RoomType> core_rooms;

  bool in_room(RoomType r) const;
  bool core_in(RoomType r) const;
};

// Ordered object list; the vector index doubles as the embedding row and
// graph node index for the whole run.
class ObjectVocabulary {
 public:
  explicit ObjectVocabulary(std::vector<ObjectInfo> objects);

  int size() const { return static_cast<int>(objects_.size()); }
  const ObjectInfo& object(int id) const { return objects_[static_cast<size_t>(id)]; }
  const std::string& name(int id) const { return objects_[static_cast<size_t>(id)].name; }
  int index_of(const std::string& name) const;  // throws on unknown name
  bool contains(const std::string& name) const;

  std::vector<int> objects_in(RoomType r) const;
  std::vector<int> core_objects_in(RoomType r) const;

 private:
  std::vector<ObjectInfo> objects_;
};

// The 20-object, 4-room toy world.
ObjectVocabulary make_toy_vocabulary();

}  // namespace gve::kg
