#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/rotation.hpp"
#include "scenemotion/core/vec3.hpp"

namespace scenemotion {

enum class ActionLabel { kSit = 0, kLie = 1, kStand = 2, kWalk = 3, kSquat = 4 };

inline constexpr std::size_t kActionCount = 5;
inline constexpr std::array<ActionLabel, kActionCount> kAllActions{ActionLabel::kSit, ActionLabel::kLie,
                                                                   ActionLabel::kStand, ActionLabel::kWalk,
                                                                   ActionLabel::kSquat};

inline std::string_view to_string(ActionLabel a) {
  switch (a) {
    case ActionLabel::kSit: return "sit";
    case ActionLabel::kLie: return "lie";
    case ActionLabel::kStand: return "stand";
    case ActionLabel::kWalk: return "walk";
    case ActionLabel::kSquat: return "squat";
  }
  return "stand";
}

inline ActionLabel action_from_string(std::string_view s) {
  for (ActionLabel a : kAllActions) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorKind::kConfig, "unknown action '" + std::string(s) + "' (expected sit, lie, stand, walk or squat)");
}

inline std::array<double, kActionCount> one_hot(ActionLabel a) {
  std::array<double, kActionCount> v{};
  v[static_cast<std::size_t>(a)] = 1.0;
  return v;
}

inline constexpr std::size_t kPoseDim = 32;
using PoseVector = std::array<double, kPoseDim>;

/// One human-scene interaction state: pelvis position, 6D orientation, pose, action.
struct Anchor {
  Vec3 t{};
  Rot6 phi = rot6_from_yaw(0.0);
  PoseVector theta{};
  ActionLabel action = ActionLabel::kStand;
};

}  // namespace scenemotion
