#pragma once

#include <array>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "skincells/common.hpp"

namespace skincells {

/// Per-axis (min, max) Euler angle range in degrees.
struct JointLimits {
  std::array<std::pair<double, double>, 3> axes{{{-45.0, 45.0}, {-45.0, 45.0}, {-45.0, 45.0}}};
};

struct Joint {
  std::string name;
  int parent = -1;
  Vec3 offset = Vec3::Zero();  // rest local translation, cm
  Mat3 rest_rotation = Mat3::Identity();
  JointLimits limits;
};

/// Segment between a joint and one of its children in the rest pose. The segment is
/// rigidly carried by the parent joint's transform.
struct Bone {
  int parent = 0;
  int child = 0;
};

/// Joint angles in degrees (intrinsic X, then Y, then Z) plus a root translation.
struct Pose {
  std::vector<Vec3> euler_deg;
  Vec3 root_translation = Vec3::Zero();

  static Pose rest(std::size_t joint_count) { return Pose{std::vector<Vec3>(joint_count, Vec3::Zero())}; }
};

using SkinningTransforms = std::vector<Transform>;

/// Hierarchical rig. Joints are topologically ordered (parent index < joint index)
/// with exactly one root.
class Skeleton {
 public:
  Skeleton() = default;
  explicit Skeleton(std::vector<Joint> joints);

  std::size_t joint_count() const { return joints_.size(); }
  const std::vector<Joint>& joints() const { return joints_; }
  const Joint& joint(int j) const { return joints_[j]; }
  const std::vector<int>& children(int j) const { return children_[j]; }
  const std::vector<Bone>& bones() const { return bones_; }

  const std::vector<Transform>& rest_globals() const { return rest_globals_; }
  Vec3 rest_position(int j) const { return rest_globals_[j].translation(); }

  /// 64-bit FNV-1a hash of the ordered joint names.
  std::uint64_t name_hash() const;

 private:
  std::vector<Joint> joints_;
  std::vector<std::vector<int>> children_;
  std::vector<Bone> bones_;
  std::vector<Transform> rest_globals_;
};

/// Rotation for intrinsic X-Y-Z Euler angles in degrees.
Mat3 euler_rotation(const Vec3& euler_deg);

std::vector<Transform> forward_kinematics(const Skeleton& skeleton, const Pose& pose);

/// T_j = global_j(pose) * global_j(rest)^-1.
SkinningTransforms skinning_transforms(const Skeleton& skeleton, const Pose& pose);

/// Each angle drawn independently from Uniform(min, max) of its joint limits.
Pose sample_pose(const Skeleton& skeleton, std::mt19937_64& rng);

struct BoneProjection {
  int bone = -1;
  double u = 0.0;  // position along parent -> child, in [0, 1]
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
};

Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& x, double* u = nullptr);

/// Nearest point over all bones; ties go to the lowest bone index.
BoneProjection closest_point_on_skeleton(const Skeleton& skeleton, const Vec3& x);

/// Distance from x to the bones a joint carries (its child segments), or to the joint
/// itself for a leaf.
double joint_bone_distance(const Skeleton& skeleton, int joint, const Vec3& x);

}  // namespace skincells
