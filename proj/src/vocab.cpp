#include "gve/vocab.hpp"

#include <algorithm>
#include <stdexcept>

namespace gve::kg {

const char* room_name(RoomType r) {
  switch (r) {
    case RoomType::Kitchen: return "kitchen";
    case RoomType::Bedroom: return "bedroom";
    case RoomType::Bathroom: return "bathroom";
    case RoomType::Living: return "living";
  }
  return "?";
}

RoomType parse_room(const std::string& name) {
  for (RoomType r : kAllRooms)
    if (name == room_name(r)) return r;
  throw std::invalid_argument("unknown room type: " + name);
}

bool ObjectInfo::in_room(RoomType r) const {
  return std::find(rooms.begin(), rooms.end(), r) != rooms.end();
}

bool ObjectInfo::core_in(RoomType r) const {
  return std::find(core_rooms.begin(), core_rooms.end(), r) != core_rooms.end();
}

ObjectVocabulary::ObjectVocabulary(std::vector<ObjectInfo> objects)
    : objects_(std::move(objects)) {
  for (size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].rooms.empty())
      throw std::invalid_argument("object " + objects_[i].name + " appears in no room");
    for (size_t j = i + 1; j < objects_.size(); ++j)
      if (objects_[i].name == objects_[j].name)
        throw std::invalid_argument("duplicate object name " + objects_[i].name);
  }
}

int ObjectVocabulary::index_of(const std::string& name) const {
  for (size_t i = 0; i < objects_.size(); ++i)
    if (objects_[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown object name: " + name);
}

bool ObjectVocabulary::contains(const std::string& name) const {
  for (const auto& o : objects_)
    if (o.name == name) return true;
  return false;
}

std::vector<int> ObjectVocabulary::objects_in(RoomType r) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (objects_[static_cast<size_t>(i)].in_room(r)) out.push_back(i);
  return out;
}

std::vector<int> ObjectVocabulary::core_objects_in(RoomType r) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (objects_[static_cast<size_t>(i)].core_in(r)) out.push_back(i);
  return out;
}

ObjectVocabulary make_toy_vocabulary() {
  using R = RoomType;
  using H = HeightClass;
  auto obj = [](std::string name, std::vector<R> rooms, H h, bool large,
                std::vector<R> core = {}) {
    return ObjectInfo{std::move(name), std::move(rooms), h, large, std::move(core)};
  };
  std::vector<ObjectInfo> v = {
      obj("stove", {R::Kitchen}, H::Mid, true, {R::Kitchen}),
      obj("counter", {R::Kitchen}, H::Mid, true, {R::Kitchen}),
      obj("fridge", {R::Kitchen}, H::Mid, true),
      obj("sink", {R::Kitchen, R::Bathroom}, H::Mid, true),
      obj("pot", {R::Kitchen}, H::Low, false),
      obj("mug", {R::Kitchen, R::Living}, H::Low, false),
      obj("spice_rack", {R::Kitchen}, H::High, false),
      obj("bed", {R::Bedroom}, H::Mid, true, {R::Bedroom}),
      obj("wardrobe", {R::Bedroom}, H::Mid, true, {R::Bedroom}),
      obj("lamp", {R::Bedroom, R::Living}, H::Mid, false),
      obj("book", {R::Bedroom, R::Living}, H::Low, false),
      obj("mirror", {R::Bedroom, R::Bathroom}, H::High, false),
      obj("basin", {R::Bathroom}, H::Mid, true, {R::Bathroom}),
      obj("soap", {R::Bathroom}, H::Low, false, {R::Bathroom}),
      obj("towel", {R::Bathroom}, H::Mid, false),
      obj("bathtub", {R::Bathroom}, H::Mid, true),
      obj("sofa", {R::Living}, H::Mid, true, {R::Living}),
      obj("tv", {R::Living}, H::Mid, true, {R::Living}),
      obj("plant", {R::Living}, H::Mid, false),
      obj("rug", {R::Living, R::Bedroom}, H::Low, false),
  };
  return ObjectVocabulary(std::move(v));
}

}  // namespace gve::kg
