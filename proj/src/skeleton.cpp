#include "skincells/skeleton.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace skincells {

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
  const int n = static_cast<int>(joints_.size());
  if (n == 0) throw Error("skeleton has no joints");
  int roots = 0;
  for (int j = 0; j < n; ++j) {
    const Joint& joint = joints_[j];
    if (joint.parent < 0) {
      ++roots;
    } else if (joint.parent >= j) {
      throw Error("joint '" + joint.name + "' has parent index " + std::to_string(joint.parent) +
                  " which is not before it (joints must be topologically ordered)");
    }
    for (int axis = 0; axis < 3; ++axis) {
      const auto [lo, hi] = joint.limits.axes[axis];
      if (!(lo <= hi)) {
        throw Error("joint '" + joint.name + "' has limit min > max on axis " + "xyz"[axis]);
      }
    }
  }
  if (roots != 1) throw Error("skeleton must have exactly one root, found " + std::to_string(roots));

  children_.assign(n, {});
  rest_globals_.resize(n);
  for (int j = 0; j < n; ++j) {
    Transform local = Transform::Identity();
    local.translate(joints_[j].offset);
    local.rotate(joints_[j].rest_rotation);
    const int p = joints_[j].parent;
    if (p >= 0) {
      children_[p].push_back(j);
      bones_.push_back({p, j});
      rest_globals_[j] = rest_globals_[p] * local;
    } else {
      rest_globals_[j] = local;
    }
  }
}

std::uint64_t Skeleton::name_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const Joint& joint : joints_) {
    for (char c : joint.name) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

Mat3 euler_rotation(const Vec3& euler_deg) {
  const Vec3 rad = euler_deg * (std::numbers::pi / 180.0);
  return (Eigen::AngleAxisd(rad.x(), Vec3::UnitX()) * Eigen::AngleAxisd(rad.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rad.z(), Vec3::UnitZ()))
      .toRotationMatrix();
}

std::vector<Transform> forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
  const std::size_t n = skeleton.joint_count();
  if (pose.euler_deg.size() != n) {
    throw Error("pose has " + std::to_string(pose.euler_deg.size()) + " joints, skeleton has " +
                std::to_string(n));
  }
  std::vector<Transform> globals(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Joint& joint = skeleton.joint(static_cast<int>(j));
    Transform local = Transform::Identity();
    local.translate(joint.offset);
    local.rotate(joint.rest_rotation * euler_rotation(pose.euler_deg[j]));
    if (joint.parent >= 0) {
      globals[j] = globals[joint.parent] * local;
    } else {
      globals[j] = Eigen::Translation3d(pose.root_translation) * local;
    }
  }
  return globals;
}

SkinningTransforms skinning_transforms(const Skeleton& skeleton, const Pose& pose) {
  const auto globals = forward_kinematics(skeleton, pose);
  SkinningTransforms out(globals.size());
  for (std::size_t j = 0; j < globals.size(); ++j) {
    out[j] = globals[j] * skeleton.rest_globals()[j].inverse(Eigen::Isometry);
  }
  return out;
}

Pose sample_pose(const Skeleton& skeleton, std::mt19937_64& rng) {
  Pose pose = Pose::rest(skeleton.joint_count());
  for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
    const auto& axes = skeleton.joint(static_cast<int>(j)).limits.axes;
    for (int a = 0; a < 3; ++a) {
      const auto [lo, hi] = axes[a];
      std::uniform_real_distribution<double> dist(lo, hi);
      // uniform_real_distribution(lo, lo) is undefined; a fixed axis stays at its bound.
      pose.euler_deg[j][a] = lo < hi ? dist(rng) : lo;
    }
  }
  return pose;
}

Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& x, double* u) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (u) *u = t;
  return a + t * ab;
}

BoneProjection closest_point_on_skeleton(const Skeleton& skeleton, const Vec3& x) {
  const auto& bones = skeleton.bones();
  if (bones.empty()) throw Error("closest_point_on_skeleton: skeleton has no bones");
  BoneProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < bones.size(); ++b) {
    double u = 0.0;
    const Vec3 p = closest_point_on_segment(skeleton.rest_position(bones[b].parent),
                                            skeleton.rest_position(bones[b].child), x, &u);
    const double d = (x - p).norm();
    if (d < best.distance) best = {static_cast<int>(b), u, p, d};
  }
  return best;
}

double joint_bone_distance(const Skeleton& skeleton, int joint, const Vec3& x) {
  const Vec3 origin = skeleton.rest_position(joint);
  const auto& kids = skeleton.children(joint);
  if (kids.empty()) return (x - origin).norm();
  double best = std::numeric_limits<double>::infinity();
  for (int c : kids) {
    best = std::min(best, (x - closest_point_on_segment(origin, skeleton.rest_position(c), x)).norm());
  }
  return best;
}

}  // namespace skincells
