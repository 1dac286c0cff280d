#include "skincells/skinning.hpp"

#include <cmath>
#include <string>

namespace skincells {

namespace {

void check_sum(double sum, std::size_t v) {
  if (!(std::abs(sum - 1.0) <= kWeightSumTolerance)) {
    throw Error("lbs: weights of vertex " + std::to_string(v) + " sum to " + std::to_string(sum));
  }
}

void check_joint(int joint, std::size_t joint_count) {
  if (joint < 0 || static_cast<std::size_t>(joint) >= joint_count) {
    throw Error("lbs: influence on joint " + std::to_string(joint) + " but only " +
                std::to_string(joint_count) + " transforms");
  }
}

}  // namespace

WeightVector BakedWeights::dense(std::size_t v, std::size_t joint_count) const {
  WeightVector w = WeightVector::Zero(static_cast<Eigen::Index>(joint_count));
  for (const Influence& inf : vertices[v]) w[inf.joint] += inf.weight;
  return w;
}

Positions lbs(std::span<const Vec3> rest, std::span<const WeightVector> weights,
              const SkinningTransforms& transforms) {
  if (rest.size() != weights.size()) throw Error("lbs: weight count does not match vertex count");
  Positions out(rest.size());
  for (std::size_t v = 0; v < rest.size(); ++v) {
    const WeightVector& w = weights[v];
    if (static_cast<std::size_t>(w.size()) != transforms.size()) {
      throw Error("lbs: weight vector length does not match transform count");
    }
    check_sum(w.sum(), v);
    Vec3 offset = Vec3::Zero();
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      if (w[j] != 0.0) offset += w[j] * (transforms[j] * rest[v] - rest[v]);
    }
    out[v] = rest[v] + offset;
  }
  return out;
}

Positions lbs(std::span<const Vec3> rest, const BakedWeights& weights,
              const SkinningTransforms& transforms) {
  if (rest.size() != weights.vertex_count()) {
    throw Error("lbs: weight count does not match vertex count");
  }
  Positions out(rest.size());
  for (std::size_t v = 0; v < rest.size(); ++v) {
    double sum = 0.0;
    Vec3 offset = Vec3::Zero();
    for (const Influence& inf : weights.vertices[v]) {
      check_joint(inf.joint, transforms.size());
      sum += inf.weight;
      offset += inf.weight * (transforms[inf.joint] * rest[v] - rest[v]);
    }
    check_sum(sum, v);
    out[v] = rest[v] + offset;
  }
  return out;
}

std::vector<Influence> sparsify(const WeightVector& w, int l) {
  std::vector<Influence> kept;
  double sum = 0.0;
  for (int j : top_l_indices(w, l)) {
    if (w[j] <= 0.0) break;
    kept.push_back({j, w[j]});
    sum += w[j];
  }
  // Already-sparse inputs pass through untouched.
  if (static_cast<Eigen::Index>(kept.size()) == (w.array() > 0.0).count()) return kept;
  for (Influence& inf : kept) inf.weight /= sum;
  return kept;
}

BakedWeights bake_weights(const SkinCellSet& cells, std::span<const Vec3> positions, int l,
                          FieldOptions options) {
  BakedWeights baked;
  baked.vertices.resize(positions.size());
  for (std::size_t v = 0; v < positions.size(); ++v) {
    baked.vertices[v] = sparsify(weight_field_eval(cells, positions[v], options), l);
  }
  return baked;
}

}  // namespace skincells
