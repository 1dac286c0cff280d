#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skincells/field.hpp"
#include "skincells/losses.hpp"
#include "skincells/mesh.hpp"
#include "skincells/skeleton.hpp"

namespace skincells {

/// Which parameters optimization may change.
enum class FreezeMode {
  full,              // everything
  falloff,           // only log_r
  falloff_sparsity,  // log_r and log_c
};

FreezeMode parse_freeze_mode(std::string_view name);
std::string_view to_string(FreezeMode mode);

/// Flat view of every optimizable scalar, in ParameterLayout order, plus a freeze mask.
struct ParameterVector {
  std::vector<double> values;
  std::vector<std::uint8_t> frozen;

  std::size_t size() const { return values.size(); }
};

std::vector<std::uint8_t> freeze_mask(const SkinCellSet& cells, FreezeMode mode);
ParameterVector flatten(const SkinCellSet& cells, FreezeMode mode = FreezeMode::full);
/// Writes `values` back into a set with the same shape as `shape`.
SkinCellSet unflatten(std::span<const double> values, const SkinCellSet& shape);

struct ObjectiveValue {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> terms;  // named parts, for diagnostics
};

/// An objective that fills `grad` (same length as params) with its exact derivative.
using Objective = std::function<ObjectiveValue(std::span<const double> params, std::span<double> grad)>;

/// Gradient of `objective` at `params`, zeroed at frozen entries. Throws if the value
/// or any named term is non-finite.
std::vector<double> gradient(const Objective& objective, const ParameterVector& params);

struct AdamState {
  std::vector<double> first;
  std::vector<double> second;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t size, double lr = 1e-3)
      : first(size, 0.0), second(size, 0.0), learning_rate(lr) {}
};

/// One bias-corrected Adam update; frozen entries are left untouched.
void adam_step(AdamState& state, ParameterVector& params, std::span<const double> grads);

/// Mean loss over a batch of poses and its gradient with respect to the flattened
/// field parameters.
class SkinningObjective {
 public:
  struct Result {
    LossParts parts;  // batch means
    double total = 0.0;
    std::vector<double> gradient;  // empty unless requested
  };

  SkinningObjective(const LossContext& context, LossWeights lambda, int threads = 1);

  Result evaluate(const SkinCellSet& cells, std::span<const SkinningTransforms> poses,
                  bool with_gradient,
                  const std::vector<std::vector<Mat3>>* frozen_bases = nullptr) const;

  /// Delta-mush change-of-basis frames of every pose at the given parameters.
  std::vector<std::vector<Mat3>> bases(const SkinCellSet& cells,
                                       std::span<const SkinningTransforms> poses) const;

  const LossWeights& lambda() const { return lambda_; }

 private:
  const LossContext* context_;
  LossWeights lambda_;
  int threads_;
};

struct OptimizeConfig {
  int steps = 1500;
  int pool = 1024;
  int batch = 16;
  int l = 4;
  int m = 6;
  LossWeights lambda;
  std::uint64_t seed = 0;
  FreezeMode mode = FreezeMode::full;
  double learning_rate = 1e-3;
  int threads = 1;
};

struct LossRecord {
  int step = 0;
  double total = 0.0;
  LossParts parts;
};

struct OptimizeResult {
  SkinCellSet cells;
  std::vector<LossRecord> history;
};

/// Samples a pose pool, then runs Adam over cyclic batches of it.
OptimizeResult optimize(const OptimizeConfig& config, const Mesh& mesh, const Skeleton& skeleton,
                        const SkinCellSet& init);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace skincells
