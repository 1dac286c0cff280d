#include "skincells/losses.hpp"

#include <algorithm>
#include <cmath>

#include "skincells/skinning.hpp"

namespace skincells {

std::vector<double> SpringSet::rest_lengths() const {
  std::vector<double> out(springs.size());
  for (std::size_t s = 0; s < springs.size(); ++s) out[s] = springs[s].rest_length;
  return out;
}

SpringSet build_springs(const Mesh& mesh, const Skeleton& skeleton, double orthogonality_gate) {
  SpringSet set;
  if (skeleton.bones().empty()) return set;
  const auto& verts = mesh.vertices();
  for (std::size_t v = 0; v < verts.size(); ++v) {
    const BoneProjection proj = closest_point_on_skeleton(skeleton, verts[v]);
    if (proj.distance <= 0.0) continue;
    const Bone& bone = skeleton.bones()[proj.bone];
    const Vec3 axis = skeleton.rest_position(bone.child) - skeleton.rest_position(bone.parent);
    const Vec3 dir = verts[v] - proj.point;
    const double cosine = std::abs(dir.dot(axis)) / (dir.norm() * axis.norm());
    if (cosine > orthogonality_gate) continue;
    if (segment_intersects_mesh(mesh, verts[v], proj.point,
                                mesh.incident_triangles(static_cast<int>(v)))) {
      continue;
    }
    set.springs.push_back({static_cast<int>(v), proj.bone, proj.u, proj.point, proj.distance});
  }
  return set;
}

Vec3 posed_attachment(const Spring& spring, const SkinningTransforms& transforms,
                      const Skeleton& skeleton) {
  return transforms[skeleton.bones()[spring.bone].parent] * spring.attachment;
}

std::vector<double> spring_distances(const SpringSet& springs, std::span<const Vec3> positions,
                                     const SkinningTransforms& transforms,
                                     const Skeleton& skeleton) {
  std::vector<double> out(springs.size());
  for (std::size_t s = 0; s < springs.size(); ++s) {
    const Spring& spring = springs.springs[s];
    out[s] = (positions[spring.vertex] - posed_attachment(spring, transforms, skeleton)).norm();
  }
  return out;
}

DeltaMushLoss::DeltaMushLoss(const Mesh& mesh, Positions rest)
    : mesh_(&mesh),
      rest_(std::move(rest)),
      laplacian_(build_laplacian(mesh)),
      rest_delta_(laplacian_.apply(rest_)),
      rest_frames_(vertex_frames(mesh, rest_)) {}

std::vector<Mat3> DeltaMushLoss::bases(std::span<const Vec3> deformed) const {
  const auto frames = vertex_frames(*mesh_, deformed);
  std::vector<Mat3> out(frames.size());
  // Equals F * Fr^T for orthonormal Fr, and is exactly I when F == Fr.
  for (std::size_t v = 0; v < frames.size(); ++v) {
    out[v] = Mat3::Identity() + (frames[v] - rest_frames_[v]) * rest_frames_[v].transpose();
  }
  return out;
}

double DeltaMushLoss::value(std::span<const Vec3> deformed, const std::vector<Mat3>* frozen_bases,
                            Positions* grad) const {
  std::vector<Mat3> own;
  if (!frozen_bases) {
    own = bases(deformed);
    frozen_bases = &own;
  }
  const Positions delta = laplacian_.apply(deformed);
  Positions residual(delta.size());
  double loss = 0.0;
  for (std::size_t v = 0; v < delta.size(); ++v) {
    residual[v] = (delta[v] - rest_delta_[v]) - ((*frozen_bases)[v] - Mat3::Identity()) * rest_delta_[v];
    loss += residual[v].squaredNorm();
  }
  if (grad) {
    for (Vec3& r : residual) r *= 2.0;
    *grad = laplacian_.apply_transpose(residual);
  }
  return loss;
}

double loss_deltamush(const Mesh& mesh, std::span<const Vec3> rest, std::span<const Vec3> deformed) {
  return DeltaMushLoss(mesh, Positions(rest.begin(), rest.end())).value(deformed);
}

double loss_location(std::span<const double> rest_distances, std::span<const double> posed_distances) {
  if (rest_distances.size() != posed_distances.size()) {
    throw Error("loss_location: distance counts differ");
  }
  double loss = 0.0;
  for (std::size_t s = 0; s < rest_distances.size(); ++s) {
    const double rel = (posed_distances[s] - rest_distances[s]) / (rest_distances[s] + kLocationStabilizer);
    loss += rel * rel;
  }
  return loss;
}

namespace {

bool exceeds_sparsity(const WeightVector& w, int l) { return (w.array() != 0.0).count() > l; }

// Contribution of one vertex to the sparsity loss. `offsets` holds T_j x - x per joint.
// When `grad_x` is set, it receives d/dX and `grad_w` the top-l path of d/dw.
double sparsity_term(const Vec3& deformed, const Vec3& rest, const WeightVector& w,
                     std::span<const Vec3> offsets, int l, Vec3* grad_x, WeightVector* grad_w) {
  if (!exceeds_sparsity(w, l)) return 0.0;
  const auto kept = top_l_indices(w, l);
  double sum = 0.0;
  for (int j : kept) sum += w[j];
  Vec3 clamped_offset = Vec3::Zero();
  for (int j : kept) clamped_offset += (w[j] / sum) * offsets[j];
  const Vec3 err = deformed - (rest + clamped_offset);
  if (grad_x) {
    *grad_x = 2.0 * err;
    for (int j : kept) (*grad_w)[j] -= 2.0 * err.dot(offsets[j] - clamped_offset) / sum;
  }
  return err.squaredNorm();
}

std::vector<Vec3> joint_offsets(const Vec3& x, const SkinningTransforms& transforms) {
  std::vector<Vec3> out(transforms.size());
  for (std::size_t j = 0; j < transforms.size(); ++j) out[j] = transforms[j] * x - x;
  return out;
}

}  // namespace

double loss_sparsity(std::span<const Vec3> rest, std::span<const WeightVector> weights,
                     const SkinningTransforms& transforms, int l) {
  const Positions deformed = lbs(rest, weights, transforms);
  double loss = 0.0;
  for (std::size_t v = 0; v < rest.size(); ++v) {
    const auto offsets = joint_offsets(rest[v], transforms);
    loss += sparsity_term(deformed[v], rest[v], weights[v], offsets, l, nullptr, nullptr);
  }
  return loss;
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  return weights.deltamush * parts.deltamush + weights.location * parts.location +
         weights.sparsity * parts.sparsity;
}

LossContext::LossContext(const Mesh& mesh, const Skeleton& skeleton, SpringSet springs, int l)
    : mesh_(&mesh),
      skeleton_(&skeleton),
      springs_(std::move(springs)),
      rest_lengths_(springs_.rest_lengths()),
      deltamush_(mesh, mesh.vertices()),
      l_(l) {}

PoseEvaluation evaluate_pose(const LossContext& context, std::span<const WeightVector> weights,
                             const SkinningTransforms& transforms, const LossWeights& lambda,
                             bool with_gradient, const std::vector<Mat3>* frozen_bases) {
  const Positions& rest = context.rest();
  const std::size_t vcount = rest.size();
  const std::size_t n = transforms.size();
  if (weights.size() != vcount) throw Error("evaluate_pose: weight count does not match mesh");

  std::vector<std::vector<Vec3>> offsets(vcount);
  Positions deformed(vcount);
  for (std::size_t v = 0; v < vcount; ++v) {
    offsets[v] = joint_offsets(rest[v], transforms);
    Vec3 shift = Vec3::Zero();
    for (std::size_t j = 0; j < n; ++j) {
      if (weights[v][j] != 0.0) shift += weights[v][j] * offsets[v][j];
    }
    deformed[v] = rest[v] + shift;
  }

  PoseEvaluation out;
  Positions grad_x;
  out.parts.deltamush =
      context.deltamush().value(deformed, frozen_bases, with_gradient ? &grad_x : nullptr);
  if (with_gradient) {
    for (Vec3& g : grad_x) g *= lambda.deltamush;
    out.weight_grad.assign(vcount, WeightVector::Zero(static_cast<Eigen::Index>(n)));
  }

  const auto& springs = context.springs().springs;
  const auto& rest_lengths = context.rest_lengths();
  for (std::size_t s = 0; s < springs.size(); ++s) {
    const Spring& spring = springs[s];
    const Vec3 diff =
        deformed[spring.vertex] - posed_attachment(spring, transforms, context.skeleton());
    const double d = diff.norm();
    const double scale = rest_lengths[s] + kLocationStabilizer;
    const double rel = (d - rest_lengths[s]) / scale;
    out.parts.location += rel * rel;
    if (with_gradient && d > 0.0) {
      grad_x[spring.vertex] += lambda.location * (2.0 * rel / scale) * (diff / d);
    }
  }

  for (std::size_t v = 0; v < vcount; ++v) {
    Vec3 gx = Vec3::Zero();
    WeightVector gw = WeightVector::Zero(static_cast<Eigen::Index>(n));
    out.parts.sparsity += sparsity_term(deformed[v], rest[v], weights[v], offsets[v], context.l(),
                                        with_gradient ? &gx : nullptr, &gw);
    if (with_gradient) {
      grad_x[v] += lambda.sparsity * gx;
      WeightVector& g = out.weight_grad[v];
      for (std::size_t j = 0; j < n; ++j) g[j] = grad_x[v].dot(offsets[v][j]) + lambda.sparsity * gw[j];
    }
  }

  out.total = total_loss(out.parts, lambda);
  return out;
}

}  // namespace skincells
