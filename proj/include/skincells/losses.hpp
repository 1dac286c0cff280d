#pragma once

#include <span>
#include <vector>

#include "skincells/field.hpp"
#include "skincells/mesh.hpp"
#include "skincells/skeleton.hpp"

namespace skincells {

/// Rest-pose attachment of a vertex to the closest point on a bone.
struct Spring {
  int vertex = 0;
  int bone = 0;
  double u = 0.0;
  Vec3 attachment = Vec3::Zero();
  double rest_length = 0.0;
};

struct SpringSet {
  std::vector<Spring> springs;

  std::size_t size() const { return springs.size(); }
  std::vector<double> rest_lengths() const;
};

/// Springs whose direction makes |cos| above this with their bone are dropped.
inline constexpr double kSpringOrthogonalityGate = 0.3;
/// Stabilizer of the relative spring deviation, in cm.
inline constexpr double kLocationStabilizer = 1e-2;

/// One spring per vertex toward its closest skeleton point, kept only when roughly
/// orthogonal to the bone and not crossing the mesh.
SpringSet build_springs(const Mesh& mesh, const Skeleton& skeleton,
                        double orthogonality_gate = kSpringOrthogonalityGate);

/// Attachments follow the joint that carries their bone.
Vec3 posed_attachment(const Spring& spring, const SkinningTransforms& transforms,
                      const Skeleton& skeleton);

std::vector<double> spring_distances(const SpringSet& springs, std::span<const Vec3> positions,
                                     const SkinningTransforms& transforms, const Skeleton& skeleton);

/// Smoothness term: squared difference between the Laplacian of the deformed mesh and
/// the rest Laplacian carried into the deformed surface frames.
class DeltaMushLoss {
 public:
  DeltaMushLoss(const Mesh& mesh, Positions rest);

  /// Per-vertex change of basis frame(deformed) * frame(rest)^T.
  std::vector<Mat3> bases(std::span<const Vec3> deformed) const;

  /// Loss value. Frames come from `deformed` unless `frozen_bases` is given. When
  /// `grad` is non-null it receives d(loss)/d(deformed) with the frames held fixed.
  double value(std::span<const Vec3> deformed, const std::vector<Mat3>* frozen_bases = nullptr,
               Positions* grad = nullptr) const;

  const LaplacianOperator& laplacian() const { return laplacian_; }

 private:
  const Mesh* mesh_;
  Positions rest_;
  LaplacianOperator laplacian_;
  Positions rest_delta_;
  std::vector<Mat3> rest_frames_;
};

double loss_deltamush(const Mesh& mesh, std::span<const Vec3> rest, std::span<const Vec3> deformed);

double loss_location(std::span<const double> rest_distances, std::span<const double> posed_distances);

double loss_sparsity(std::span<const Vec3> rest, std::span<const WeightVector> weights,
                     const SkinningTransforms& transforms, int l);

struct LossWeights {
  double deltamush = 1.0;
  double location = 6000.0;
  double sparsity = 1.0;

  /// Sparsity-heavy preset used for fine meshes.
  static LossWeights fine_mesh() { return {1.0, 6000.0, 1000.0}; }
};

struct LossParts {
  double deltamush = 0.0;
  double location = 0.0;
  double sparsity = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& weights);

/// Everything the per-pose losses need that does not change during optimization.
class LossContext {
 public:
  LossContext(const Mesh& mesh, const Skeleton& skeleton, SpringSet springs, int l);

  const Mesh& mesh() const { return *mesh_; }
  const Skeleton& skeleton() const { return *skeleton_; }
  const Positions& rest() const { return mesh_->vertices(); }
  const SpringSet& springs() const { return springs_; }
  const std::vector<double>& rest_lengths() const { return rest_lengths_; }
  const DeltaMushLoss& deltamush() const { return deltamush_; }
  int l() const { return l_; }

 private:
  const Mesh* mesh_;
  const Skeleton* skeleton_;
  SpringSet springs_;
  std::vector<double> rest_lengths_;
  DeltaMushLoss deltamush_;
  int l_;
};

struct PoseEvaluation {
  LossParts parts;
  double total = 0.0;
  /// d(total)/d(weights) per vertex; empty unless requested.
  std::vector<WeightVector> weight_grad;
};

/// All three losses for one pose given dense per-vertex weights at the rest vertices.
/// The top-l masks and (optionally) the delta-mush frames are held constant for the
/// gradient.
PoseEvaluation evaluate_pose(const LossContext& context, std::span<const WeightVector> weights,
                             const SkinningTransforms& transforms, const LossWeights& lambda,
                             bool with_gradient, const std::vector<Mat3>* frozen_bases = nullptr);

}  // namespace skincells
