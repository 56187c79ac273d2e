#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "scenemotion/anchors/action.hpp"
#include "scenemotion/core/rotation.hpp"
#include "scenemotion/core/vec3.hpp"

namespace scenemotion {

enum class ContactPart { kPelvis, kLeftFoot, kRightFoot, kLeftHand, kRightHand, kBack };

struct ContactPoint {
  ContactPart part;
  Vec3 position;    // body frame
  bool designated;  // counts toward affordance / contact scores
};

struct Capsule {
  Vec3 a;
  Vec3 b;
  double radius;
};

/// Capsule-and-contact-point stand-in for a body mesh. Body frame: origin at
/// the pelvis, x forward, y left, z up.
struct ProxyBody {
  std::vector<ContactPoint> contacts;
  std::vector<Capsule> capsules;

  std::vector<Vec3> designated_contacts() const {
    std::vector<Vec3> out;
    for (const auto& c : contacts) {
      if (c.designated) out.push_back(c.position);
    }
    return out;
  }

  /// Points on each capsule: axis stations every `spacing` plus four points
  /// on the ring of radius r around each station.
  std::vector<Vec3> sample_points(double spacing = 0.1) const {
    std::vector<Vec3> out;
    for (const Capsule& c : capsules) {
      Vec3 axis = c.b - c.a;
      double len = norm(axis);
      Vec3 u = len > 0.0 ? axis / len : Vec3{0, 0, 1};
      Vec3 helper = std::abs(u.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
      Vec3 p1 = cross(u, helper);
      p1 = p1 / norm(p1);
      Vec3 p2 = cross(u, p1);
      int stations = std::max(1, static_cast<int>(std::ceil(len / spacing))) + 1;
      for (int s = 0; s < stations; ++s) {
        Vec3 q = c.a + axis * (static_cast<double>(s) / (stations - 1));
        out.push_back(q);
        out.push_back(q + p1 * c.radius);
        out.push_back(q - p1 * c.radius);
        out.push_back(q + p2 * c.radius);
        out.push_back(q - p2 * c.radius);
      }
    }
    return out;
  }
};

/// Body dimensions modulated by the first pose coordinates, each within +-10-20%.
struct BodyDims {
  double leg;          // hip to sole
  double torso;        // pelvis to neck
  double torso_radius;
  double limb_radius;
  double half_stance;  // lateral foot offset

  static BodyDims from_pose(const PoseVector& theta) {
    return {0.9 * (1.0 + 0.1 * std::tanh(theta[0])), 0.55 * (1.0 + 0.1 * std::tanh(theta[1])),
            0.15 * (1.0 + 0.1 * std::tanh(theta[2])), 0.07 * (1.0 + 0.1 * std::tanh(theta[3])),
            0.12 * (1.0 + 0.2 * std::tanh(theta[4]))};
  }
};

inline ProxyBody proxy_body(const PoseVector& theta, ActionLabel action) {
  const BodyDims d = BodyDims::from_pose(theta);
  const double w = d.half_stance;
  const double rl = d.limb_radius;
  const double rt = d.torso_radius;
  ProxyBody body;
  auto contact = [&](ContactPart part, Vec3 p, bool designated) { body.contacts.push_back({part, p, designated}); };
  auto capsule = [&](Vec3 a, Vec3 b, double r) { body.capsules.push_back({a, b, r}); };

  switch (action) {
    case ActionLabel::kStand:
    case ActionLabel::kWalk: {
      const double stride = action == ActionLabel::kWalk ? 0.15 : 0.0;
      contact(ContactPart::kPelvis, {0, 0, 0}, false);
      contact(ContactPart::kLeftFoot, {stride, w, -d.leg}, true);
      contact(ContactPart::kRightFoot, {-stride, -w, -d.leg}, true);
      contact(ContactPart::kLeftHand, {0, w + 0.15, 0}, false);
      contact(ContactPart::kRightHand, {0, -w - 0.15, 0}, false);
      capsule({0, 0, 0.05 + rt}, {0, 0, 0.05 + d.torso}, rt);
      capsule({0, w, -0.05}, {stride, w, -d.leg + rl + 0.01}, rl);
      capsule({0, -w, -0.05}, {-stride, -w, -d.leg + rl + 0.01}, rl);
      break;
    }
    case ActionLabel::kSquat: {
      const double drop = 0.5 * d.leg;
      contact(ContactPart::kPelvis, {0, 0, 0}, false);
      contact(ContactPart::kLeftFoot, {0.15, w, -drop}, true);
      contact(ContactPart::kRightFoot, {0.15, -w, -drop}, true);
      contact(ContactPart::kLeftHand, {0.3, w, 0}, false);
      contact(ContactPart::kRightHand, {0.3, -w, 0}, false);
      capsule({0.05, 0, 0.05 + rt}, {0.15, 0, 0.05 + d.torso}, rt);
      capsule({0.05, w, -0.05}, {0.15, w, -drop + rl + 0.01}, rl);
      capsule({0.05, -w, -0.05}, {0.15, -w, -drop + rl + 0.01}, rl);
      break;
    }
    case ActionLabel::kSit: {
      const double shin = 0.55 * d.leg / 0.9;
      contact(ContactPart::kPelvis, {0, 0, -0.1}, true);
      contact(ContactPart::kLeftFoot, {0.45, w, -shin}, true);
      contact(ContactPart::kRightFoot, {0.45, -w, -shin}, true);
      contact(ContactPart::kLeftHand, {0.2, w + 0.15, 0}, false);
      contact(ContactPart::kRightHand, {0.2, -w - 0.15, 0}, false);
      capsule({-0.05, 0, 0.1 + rt}, {-0.05, 0, 0.1 + d.torso}, rt);
      capsule({0.05, w, 0}, {0.4, w, 0}, rl);
      capsule({0.05, -w, 0}, {0.4, -w, 0}, rl);
      capsule({0.45, w, -0.05}, {0.45, w, -shin + rl + 0.01}, rl);
      capsule({0.45, -w, -0.05}, {0.45, -w, -shin + rl + 0.01}, rl);
      break;
    }
    case ActionLabel::kLie: {
      // Lying along +x, back down; contacts along the torso line.
      contact(ContactPart::kPelvis, {0, 0, -rt}, true);
      contact(ContactPart::kBack, {0.5 * d.torso, 0, -rt}, true);
      contact(ContactPart::kBack, {-0.5 * d.leg, 0, -rt}, true);
      contact(ContactPart::kLeftFoot, {-d.leg, w, -rl}, false);
      contact(ContactPart::kRightFoot, {-d.leg, -w, -rl}, false);
      capsule({0.05 + rt, 0, 0}, {0.05 + d.torso, 0, 0}, rt * 0.9);
      capsule({-0.05, w, -rt + rl + 0.01}, {-d.leg + rl, w, -rt + rl + 0.01}, rl);
      capsule({-0.05, -w, -rt + rl + 0.01}, {-d.leg + rl, -w, -rt + rl + 0.01}, rl);
      break;
    }
  }
  return body;
}

/// Rigid transform of body-frame points into the world.
inline Vec3 to_world(const Mat3& r, const Vec3& t, const Vec3& p) { return r * p + t; }

inline std::vector<Vec3> to_world(const Mat3& r, const Vec3& t, const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(r * p + t);
  return out;
}

/// Lowest designated contact height in the body frame (negative below the pelvis).
inline double lowest_contact_offset(const ProxyBody& body) {
  double z = 0.0;
  for (const auto& c : body.contacts) {
    if (c.designated) z = std::min(z, c.position.z);
  }
  return z;
}

}  // namespace scenemotion
