#pragma once

#include <span>
#include <vector>

#include "skincells/field.hpp"
#include "skincells/skeleton.hpp"

namespace skincells {

struct Influence {
  int joint = 0;
  double weight = 0.0;
};

/// Sparse per-vertex weights, sorted by decreasing weight. Each vertex sums to 1.
struct BakedWeights {
  std::vector<std::vector<Influence>> vertices;

  std::size_t vertex_count() const { return vertices.size(); }
  /// Dense weight vector of vertex v over `joint_count` joints.
  WeightVector dense(std::size_t v, std::size_t joint_count) const;
};

/// Largest tolerated deviation of a weight sum from 1 in lbs().
inline constexpr double kWeightSumTolerance = 1e-4;

/// Linear blend skinning, x' = sum_j w_j T_j x.
///
/// Evaluated as x + sum_j w_j (T_j x - x), which equals the textbook form for
/// normalized weights and returns the rest positions bit-exactly under identity
/// transforms.
Positions lbs(std::span<const Vec3> rest, std::span<const WeightVector> weights,
              const SkinningTransforms& transforms);
Positions lbs(std::span<const Vec3> rest, const BakedWeights& weights,
              const SkinningTransforms& transforms);

/// Drops zeros, keeps the top l entries and renormalizes them to sum 1.
std::vector<Influence> sparsify(const WeightVector& w, int l);

/// Evaluates the field at each (rest-pose) position, keeps the top l weights and
/// renormalizes.
BakedWeights bake_weights(const SkinCellSet& cells, std::span<const Vec3> positions, int l,
                          FieldOptions options = {});

}  // namespace skincells
