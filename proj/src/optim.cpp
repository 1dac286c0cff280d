#include "skincells/optim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "skincells/skinning.hpp"

namespace skincells {

FreezeMode parse_freeze_mode(std::string_view name) {
  if (name == "full") return FreezeMode::full;
  if (name == "falloff") return FreezeMode::falloff;
  if (name == "falloff-sparse" || name == "falloff-sparsity") return FreezeMode::falloff_sparsity;
  throw Error("unknown optimization mode '" + std::string(name) + "'");
}

std::string_view to_string(FreezeMode mode) {
  switch (mode) {
    case FreezeMode::full: return "full";
    case FreezeMode::falloff: return "falloff";
    case FreezeMode::falloff_sparsity: return "falloff-sparse";
  }
  return "full";
}

std::vector<std::uint8_t> freeze_mask(const SkinCellSet& cells, FreezeMode mode) {
  const ParameterLayout layout{cells.sites_per_cell()};
  std::vector<std::uint8_t> frozen(cells.parameter_count(), mode == FreezeMode::full ? 0 : 1);
  if (mode == FreezeMode::full) return frozen;
  for (std::size_t j = 0; j < cells.joint_count(); ++j) {
    frozen[layout.log_r(j)] = 0;
    if (mode == FreezeMode::falloff_sparsity) frozen[layout.log_c(j)] = 0;
  }
  return frozen;
}

ParameterVector flatten(const SkinCellSet& cells, FreezeMode mode) {
  const ParameterLayout layout{cells.sites_per_cell()};
  ParameterVector out;
  out.values.resize(cells.parameter_count());
  for (std::size_t j = 0; j < cells.joint_count(); ++j) {
    const SkinCell& cell = cells.cells[j];
    if (cell.sites.size() != layout.sites_per_cell) throw Error("cells have differing site counts");
    for (std::size_t k = 0; k < cell.sites.size(); ++k) {
      const Site& site = cell.sites[k];
      for (int a = 0; a < 3; ++a) out.values[layout.center(j, k) + a] = site.center[a];
      for (int a = 0; a < 6; ++a) out.values[layout.shape(j, k) + a] = site.shape[a];
      out.values[layout.log_t(j, k)] = site.log_t;
    }
    out.values[layout.log_c(j)] = cell.log_c;
    out.values[layout.log_r(j)] = cell.log_r;
  }
  out.frozen = freeze_mask(cells, mode);
  return out;
}

SkinCellSet unflatten(std::span<const double> values, const SkinCellSet& shape) {
  if (values.size() != shape.parameter_count()) throw Error("unflatten: parameter count mismatch");
  const ParameterLayout layout{shape.sites_per_cell()};
  SkinCellSet out = shape;
  for (std::size_t j = 0; j < out.joint_count(); ++j) {
    SkinCell& cell = out.cells[j];
    for (std::size_t k = 0; k < cell.sites.size(); ++k) {
      Site& site = cell.sites[k];
      for (int a = 0; a < 3; ++a) site.center[a] = values[layout.center(j, k) + a];
      for (int a = 0; a < 6; ++a) site.shape[a] = values[layout.shape(j, k) + a];
      site.log_t = values[layout.log_t(j, k)];
    }
    cell.log_c = values[layout.log_c(j)];
    cell.log_r = values[layout.log_r(j)];
  }
  return out;
}

std::vector<double> gradient(const Objective& objective, const ParameterVector& params) {
  std::vector<double> grad(params.size(), 0.0);
  const ObjectiveValue value = objective(params.values, grad);
  for (const auto& [name, term] : value.terms) {
    if (!std::isfinite(term)) throw Error("non-finite objective term '" + name + "'");
  }
  if (!std::isfinite(value.value)) throw Error("non-finite objective value");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!params.frozen.empty() && params.frozen[i]) grad[i] = 0.0;
  }
  return grad;
}

void adam_step(AdamState& state, ParameterVector& params, std::span<const double> grads) {
  if (grads.size() != params.size() || state.first.size() != params.size()) {
    throw Error("adam_step: size mismatch");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.frozen.empty() && params.frozen[i]) continue;
    const double g = grads[i];
    state.first[i] = state.beta1 * state.first[i] + (1.0 - state.beta1) * g;
    state.second[i] = state.beta2 * state.second[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first[i] / correction1;
    const double v_hat = state.second[i] / correction2;
    params.values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

SkinningObjective::SkinningObjective(const LossContext& context, LossWeights lambda, int threads)
    : context_(&context), lambda_(lambda), threads_(threads) {}

std::vector<std::vector<Mat3>> SkinningObjective::bases(
    const SkinCellSet& cells, std::span<const SkinningTransforms> poses) const {
  const Positions& rest = context_->rest();
  std::vector<WeightVector> weights(rest.size());
  for (std::size_t v = 0; v < rest.size(); ++v) weights[v] = weight_field_eval(cells, rest[v]);
  std::vector<std::vector<Mat3>> out(poses.size());
  parallel_for(poses.size(), threads_, [&](std::size_t p) {
    out[p] = context_->deltamush().bases(lbs(rest, weights, poses[p]));
  });
  return out;
}

SkinningObjective::Result SkinningObjective::evaluate(
    const SkinCellSet& cells, std::span<const SkinningTransforms> poses, bool with_gradient,
    const std::vector<std::vector<Mat3>>* frozen_bases) const {
  if (poses.empty()) throw Error("objective needs at least one pose");
  const Positions& rest = context_->rest();
  const std::size_t vcount = rest.size();
  const std::size_t n = cells.joint_count();

  std::vector<FieldTrace> traces(vcount);
  std::vector<WeightVector> weights(vcount);
  for (std::size_t v = 0; v < vcount; ++v) {
    traces[v] = weight_field_trace(cells, rest[v]);
    weights[v] = traces[v].weights;
  }

  std::vector<PoseEvaluation> per_pose(poses.size());
  parallel_for(poses.size(), threads_, [&](std::size_t p) {
    per_pose[p] = evaluate_pose(*context_, weights, poses[p], lambda_, with_gradient,
                                frozen_bases ? &(*frozen_bases)[p] : nullptr);
  });

  // Fixed-order reduction keeps results independent of the worker count.
  Result out;
  const double inv = 1.0 / static_cast<double>(poses.size());
  std::vector<WeightVector> weight_grad;
  if (with_gradient) weight_grad.assign(vcount, WeightVector::Zero(static_cast<Eigen::Index>(n)));
  for (const PoseEvaluation& e : per_pose) {
    out.parts.deltamush += e.parts.deltamush * inv;
    out.parts.location += e.parts.location * inv;
    out.parts.sparsity += e.parts.sparsity * inv;
    if (with_gradient) {
      for (std::size_t v = 0; v < vcount; ++v) weight_grad[v] += e.weight_grad[v] * inv;
    }
  }
  out.total = total_loss(out.parts, lambda_);

  if (with_gradient) {
    out.gradient.assign(cells.parameter_count(), 0.0);
    for (std::size_t v = 0; v < vcount; ++v) {
      accumulate_field_gradient(cells, rest[v], traces[v], weight_grad[v], out.gradient);
    }
  }
  return out;
}

OptimizeResult optimize(const OptimizeConfig& config, const Mesh& mesh, const Skeleton& skeleton,
                        const SkinCellSet& init) {
  if (init.joint_count() != skeleton.joint_count()) {
    throw Error("optimize: field has " + std::to_string(init.joint_count()) + " cells, skeleton has " +
                std::to_string(skeleton.joint_count()) + " joints");
  }
  OptimizeResult result{init, {}};
  result.cells.l = config.l;
  if (config.steps <= 0) return result;
  if (config.batch < 1 || config.pool < config.batch) {
    throw Error("optimize: need 1 <= batch <= pool");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<SkinningTransforms> pool(static_cast<std::size_t>(config.pool));
  for (auto& transforms : pool) transforms = skinning_transforms(skeleton, sample_pose(skeleton, rng));
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const LossContext context(mesh, skeleton, build_springs(mesh, skeleton), config.l);
  const SkinningObjective objective(context, config.lambda, config.threads);

  ParameterVector params = flatten(result.cells, config.mode);
  AdamState adam(params.size(), config.learning_rate);
  std::vector<SkinningTransforms> batch(static_cast<std::size_t>(config.batch));
  std::size_t cursor = 0;

  for (int step = 0; step < config.steps; ++step) {
    for (auto& transforms : batch) {
      transforms = pool[order[cursor]];
      cursor = (cursor + 1) % order.size();
    }
    const SkinCellSet current = unflatten(params.values, result.cells);
    SkinningObjective::Result eval = objective.evaluate(current, batch, true);
    if (!std::isfinite(eval.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << step << " (total=" << eval.total
          << ", deltamush=" << eval.parts.deltamush << ", location=" << eval.parts.location
          << ", sparsity=" << eval.parts.sparsity << ")";
      throw Error(msg.str());
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params.frozen[i]) eval.gradient[i] = 0.0;
    }
    result.history.push_back({step, eval.total, eval.parts});
    adam_step(adam, params, eval.gradient);
  }
  result.cells = unflatten(params.values, result.cells);
  return result;
}

}  // namespace skincells
