#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "skincells/common.hpp"
#include "skincells/skeleton.hpp"

namespace skincells {

using WeightVector = Eigen::VectorXd;

/// Floor applied to the exponentiated diagonal of a site's shape factor.
inline constexpr double kShapeDiagonalFloor = 1e-8;

/// One anisotropic site of a skin cell.
///
/// The metric factor F is lower triangular. `shape` stores its six entries row by row,
/// (0,0) (1,0) (1,1) (2,0) (2,1) (2,2), with the diagonal entries kept in log space so
/// that F^T F stays positive definite under unconstrained updates.
struct Site {
  Vec3 center = Vec3::Zero();
  std::array<double, 6> shape{0, 0, 0, 0, 0, 0};
  double log_t = 0.0;

  Mat3 metric_factor() const;
  double threshold() const;
};

inline constexpr std::array<int, 3> kShapeDiagonalSlots{0, 2, 5};

/// Radius of the ball around a leaf joint in which its sites are initialized, cm.
inline constexpr double kLeafRadius = 0.05;

struct SkinCell {
  std::vector<Site> sites;
  double log_c = 0.0;
  double log_r = 0.0;

  double sparsity_relaxation() const;  // c = exp(log_c)
  double falloff() const;              // r = exp(log_r)
};

/// Optimizable parameters of the whole field, one cell per joint in skeleton order.
struct SkinCellSet {
  std::vector<SkinCell> cells;
  int l = 4;                       // max nonzero weights per point
  std::uint64_t joint_hash = 0;    // Skeleton::name_hash() of the rig the cells belong to

  std::size_t joint_count() const { return cells.size(); }
  /// Sites per cell (all cells share the same count).
  std::size_t sites_per_cell() const { return cells.empty() ? 0 : cells.front().sites.size(); }
  /// Scalars per cell: 10 per site plus log_c and log_r.
  std::size_t parameters_per_cell() const { return 10 * sites_per_cell() + 2; }
  std::size_t parameter_count() const { return joint_count() * parameters_per_cell(); }
};

/// Offsets into the flattened parameter layout: per cell, each site contributes
/// center (3), shape (6), log_t (1); then log_c and log_r close the cell.
struct ParameterLayout {
  std::size_t sites_per_cell = 0;

  std::size_t per_cell() const { return 10 * sites_per_cell + 2; }
  std::size_t cell(std::size_t j) const { return j * per_cell(); }
  std::size_t center(std::size_t j, std::size_t k) const { return cell(j) + 10 * k; }
  std::size_t shape(std::size_t j, std::size_t k) const { return center(j, k) + 3; }
  std::size_t log_t(std::size_t j, std::size_t k) const { return center(j, k) + 9; }
  std::size_t log_c(std::size_t j) const { return cell(j) + 10 * sites_per_cell; }
  std::size_t log_r(std::size_t j) const { return log_c(j) + 1; }
};

/// Evaluation switches. With `clamp_sparsity` every c_j is treated as exactly 0, which
/// bounds the number of nonzero weights by l.
struct FieldOptions {
  bool clamp_sparsity = false;
};

double mahalanobis_distance(const Vec3& x, const Site& site);

/// Huber-style modulation: 0.5 (d^2/t + t) below t, d above.
double huber_offset(double d, double t);

double cell_distance(const Vec3& x, const SkinCell& cell);

WeightVector weight_field_eval(const SkinCellSet& cells, const Vec3& x, FieldOptions options = {});

/// Intermediate values of one weight_field_eval call, kept for the backward pass.
struct FieldTrace {
  WeightVector weights;
  std::vector<double> distance;     // d_j
  std::vector<int> nearest_site;    // argmin site per cell
  std::vector<double> numerator;    // max(c_j, D_l - d_j)
  std::vector<bool> numerator_is_c;
  std::vector<double> unnormalized; // u_j
  double total = 0.0;               // sum of u_j
  int lth_cell = 0;                 // cell index achieving D_l
  bool fallback = false;            // one-hot fallback was taken
  bool clamped = false;
};

FieldTrace weight_field_trace(const SkinCellSet& cells, const Vec3& x, FieldOptions options = {});

/// Accumulates d(loss)/d(parameters) into `grad` (flattened layout of ParameterVector)
/// given d(loss)/d(weights) at the traced point.
void accumulate_field_gradient(const SkinCellSet& cells, const Vec3& x, const FieldTrace& trace,
                               const WeightVector& weight_grad, std::span<double> grad);

/// Samples sites along the rig: along the bone for single-child joints, inside the hull
/// of the children for branching joints, in a 0.05 cm ball for leaves.
SkinCellSet initialize_cells(const Skeleton& skeleton, int m, int l, std::mt19937_64& rng);

/// Keeps the l largest entries (ties keep the lower index); no renormalization.
WeightVector top_l(const WeightVector& w, int l);

/// Indices of the entries kept by top_l, in descending weight order.
std::vector<int> top_l_indices(const WeightVector& w, int l);

/// Baseline: 1/d^falloff over the l nearest joint bones, normalized.
WeightVector proximity_weights(const Vec3& x, const Skeleton& skeleton, int l, double falloff);

/// Baseline: naive softmax of -beta * distance to point sites, evaluated in Scalar
/// precision without max subtraction. Non-finite outputs are returned unchanged.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> softmax_field_eval(std::span<const Vec3> sites,
                                                            const Vec3& x, Scalar beta);

}  // namespace skincells
