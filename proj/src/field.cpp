#include "skincells/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace skincells {

namespace {

constexpr double kInitSpread = 0.05;    // half-width of the uniform init perturbations
constexpr double kDegenerateSum = 1e-12;
constexpr double kProximityFloor = 1e-6;

// Stable ascending order of `values`.
std::vector<int> ascending_order(const std::vector<double>& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
  return order;
}

}  // namespace

Mat3 Site::metric_factor() const {
  Mat3 f = Mat3::Zero();
  f(0, 0) = std::max(std::exp(shape[0]), kShapeDiagonalFloor);
  f(1, 0) = shape[1];
  f(1, 1) = std::max(std::exp(shape[2]), kShapeDiagonalFloor);
  f(2, 0) = shape[3];
  f(2, 1) = shape[4];
  f(2, 2) = std::max(std::exp(shape[5]), kShapeDiagonalFloor);
  return f;
}

double Site::threshold() const { return std::exp(log_t); }

double SkinCell::sparsity_relaxation() const { return std::exp(log_c); }

double SkinCell::falloff() const { return std::exp(log_r); }

double mahalanobis_distance(const Vec3& x, const Site& site) {
  return (site.metric_factor() * (x - site.center)).norm();
}

double huber_offset(double d, double t) {
  if (d < t) return 0.5 * (d * d / t + t);
  return d;
}

double cell_distance(const Vec3& x, const SkinCell& cell) {
  double best = std::numeric_limits<double>::infinity();
  for (const Site& site : cell.sites) {
    best = std::min(best, huber_offset(mahalanobis_distance(x, site), site.threshold()));
  }
  return best;
}

FieldTrace weight_field_trace(const SkinCellSet& cells, const Vec3& x, FieldOptions options) {
  const int n = static_cast<int>(cells.cells.size());
  FieldTrace tr;
  tr.clamped = options.clamp_sparsity;
  tr.distance.resize(n);
  tr.nearest_site.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto& sites = cells.cells[j].sites;
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      const double h = huber_offset(mahalanobis_distance(x, sites[k]), sites[k].threshold());
      if (h < best) {
        best = h;
        arg = static_cast<int>(k);
      }
    }
    tr.distance[j] = best;
    tr.nearest_site[j] = arg;
  }

  const auto order = ascending_order(tr.distance);
  const int l = std::clamp(cells.l, 1, n);
  tr.lth_cell = order[l - 1];
  const double d_l = tr.distance[tr.lth_cell];

  tr.numerator.resize(n);
  tr.numerator_is_c.resize(n);
  tr.unnormalized.resize(n);
  tr.total = 0.0;
  for (int j = 0; j < n; ++j) {
    const SkinCell& cell = cells.cells[j];
    const double c = options.clamp_sparsity ? 0.0 : cell.sparsity_relaxation();
    const double gap = d_l - tr.distance[j];
    tr.numerator_is_c[j] = c >= gap;
    tr.numerator[j] = tr.numerator_is_c[j] ? c : gap;
    tr.unnormalized[j] = std::pow(tr.numerator[j] / tr.distance[j], cell.falloff());
    tr.total += tr.unnormalized[j];
  }

  tr.weights = WeightVector::Zero(n);
  if (tr.total < kDegenerateSum) {
    tr.fallback = true;
    tr.weights[order[0]] = 1.0;
  } else {
    for (int j = 0; j < n; ++j) tr.weights[j] = tr.unnormalized[j] / tr.total;
  }
  return tr;
}

WeightVector weight_field_eval(const SkinCellSet& cells, const Vec3& x, FieldOptions options) {
  return weight_field_trace(cells, x, options).weights;
}

void accumulate_field_gradient(const SkinCellSet& cells, const Vec3& x, const FieldTrace& tr,
                               const WeightVector& weight_grad, std::span<double> grad) {
  if (tr.fallback) return;
  const int n = static_cast<int>(cells.cells.size());
  const ParameterLayout layout{cells.sites_per_cell()};

  // Normalization: w_i = u_i / U.
  const double mean_grad = weight_grad.dot(tr.weights);
  std::vector<double> grad_distance(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double u = tr.unnormalized[j];
    if (u == 0.0) continue;  // zero numerator; subgradient 0
    const SkinCell& cell = cells.cells[j];
    const double g_u = (weight_grad[j] - mean_grad) / tr.total;
    const double r = cell.falloff();
    const double d = tr.distance[j];
    const double q = tr.numerator[j] / d;

    grad[layout.log_r(j)] += g_u * u * std::log(q) * r;

    const double g_q = g_u * r * u / q;
    const double g_num = g_q / d;
    grad_distance[j] -= g_q * tr.numerator[j] / (d * d);
    if (tr.numerator_is_c[j]) {
      if (!tr.clamped) grad[layout.log_c(j)] += g_num * cell.sparsity_relaxation();
    } else {
      grad_distance[tr.lth_cell] += g_num;
      grad_distance[j] -= g_num;
    }
  }

  for (int j = 0; j < n; ++j) {
    const double g_d = grad_distance[j];
    if (g_d == 0.0) continue;
    const int k = tr.nearest_site[j];
    const Site& site = cells.cells[j].sites[k];
    const Mat3 f = site.metric_factor();
    const Vec3 e = x - site.center;
    const Vec3 y = f * e;
    const double dist2 = y.squaredNorm();
    const double dist = std::sqrt(dist2);
    const double t = site.threshold();

    // dh/d(dist^2) per branch of the modulation.
    double g_dist2 = 0.0;
    if (dist < t) {
      g_dist2 = g_d * 0.5 / t;
      grad[layout.log_t(j, k)] += g_d * 0.5 * (1.0 - dist2 / (t * t)) * t;
    } else {
      g_dist2 = g_d * 0.5 / dist;
    }

    // dist^2 = |F e|^2: d/dF = 2 y e^T, d/dp = -2 F^T y.
    const Mat3 g_f = 2.0 * g_dist2 * y * e.transpose();
    const Vec3 g_p = -2.0 * g_dist2 * (f.transpose() * y);
    const std::size_t c0 = layout.center(j, k);
    for (int a = 0; a < 3; ++a) grad[c0 + a] += g_p[a];

    const std::size_t s0 = layout.shape(j, k);
    const double diag0 = std::exp(site.shape[0]);
    const double diag1 = std::exp(site.shape[2]);
    const double diag2 = std::exp(site.shape[5]);
    grad[s0 + 0] += diag0 > kShapeDiagonalFloor ? g_f(0, 0) * diag0 : 0.0;
    grad[s0 + 1] += g_f(1, 0);
    grad[s0 + 2] += diag1 > kShapeDiagonalFloor ? g_f(1, 1) * diag1 : 0.0;
    grad[s0 + 3] += g_f(2, 0);
    grad[s0 + 4] += g_f(2, 1);
    grad[s0 + 5] += diag2 > kShapeDiagonalFloor ? g_f(2, 2) * diag2 : 0.0;
  }
}

SkinCellSet initialize_cells(const Skeleton& skeleton, int m, int l, std::mt19937_64& rng) {
  const int n = static_cast<int>(skeleton.joint_count());
  if (n == 0) throw Error("initialize_cells: skeleton has no joints");
  if (m < 1) throw Error("initialize_cells: need at least one site per cell");
  // l > n is accepted; evaluation clamps it to n.
  if (l < 1) throw Error("initialize_cells: l must be at least 1");

  std::uniform_real_distribution<double> spread(-kInitSpread, kInitSpread);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  SkinCellSet set;
  set.l = l;
  set.joint_hash = skeleton.name_hash();
  set.cells.resize(n);
  for (int j = 0; j < n; ++j) {
    SkinCell& cell = set.cells[j];
    cell.sites.resize(m);
    const Vec3 origin = skeleton.rest_position(j);
    const auto& kids = skeleton.children(j);
    for (int k = 0; k < m; ++k) {
      Vec3 p;
      if (kids.size() == 1) {
        const double s = (k + 0.5) / m;
        p = origin + s * (skeleton.rest_position(kids[0]) - origin);
      } else if (kids.size() > 1) {
        // Flat Dirichlet weights: uniform on the simplex spanned by the children.
        std::vector<double> lambda(kids.size());
        double sum = 0.0;
        for (double& v : lambda) sum += (v = expo(rng));
        p = Vec3::Zero();
        for (std::size_t c = 0; c < kids.size(); ++c) {
          p += (lambda[c] / sum) * skeleton.rest_position(kids[c]);
        }
      } else {
        Vec3 dir(normal(rng), normal(rng), normal(rng));
        if (dir.norm() < 1e-12) dir = Vec3::UnitX();
        p = origin + kLeafRadius * std::cbrt(unit(rng)) * dir.normalized();
      }
      cell.sites[k].center = p;
    }
    for (Site& site : cell.sites) {
      for (double& v : site.shape) v = spread(rng);
      site.log_t = spread(rng);
    }
    cell.log_c = spread(rng);
    cell.log_r = spread(rng);
  }
  return set;
}

std::vector<int> top_l_indices(const WeightVector& w, int l) {
  std::vector<int> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(l, 0))));
  return order;
}

WeightVector top_l(const WeightVector& w, int l) {
  WeightVector out = WeightVector::Zero(w.size());
  for (int i : top_l_indices(w, l)) out[i] = w[i];
  return out;
}

WeightVector proximity_weights(const Vec3& x, const Skeleton& skeleton, int l, double falloff) {
  if (!(falloff > 0.0)) throw Error("proximity_weights: falloff must be positive");
  const int n = static_cast<int>(skeleton.joint_count());
  std::vector<double> dist(n);
  for (int j = 0; j < n; ++j) {
    dist[j] = std::max(joint_bone_distance(skeleton, j, x), kProximityFloor);
  }
  const auto order = ascending_order(dist);
  WeightVector w = WeightVector::Zero(n);
  const int keep = std::clamp(l, 1, n);
  for (int i = 0; i < keep; ++i) w[order[i]] = std::pow(dist[order[i]], -falloff);
  return w / w.sum();
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> softmax_field_eval(std::span<const Vec3> sites,
                                                            const Vec3& x, Scalar beta) {
  if (sites.empty()) throw Error("softmax_field_eval: no sites");
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Point = Eigen::Matrix<Scalar, 3, 1>;
  const Point q = x.cast<Scalar>();
  Vec e(static_cast<Eigen::Index>(sites.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Scalar d = (q - sites[i].cast<Scalar>()).norm();
    e[static_cast<Eigen::Index>(i)] = std::exp(-beta * d);
  }
  const Scalar total = e.sum();
  return e / total;
}

template Eigen::VectorXf softmax_field_eval<float>(std::span<const Vec3>, const Vec3&, float);
template Eigen::VectorXd softmax_field_eval<double>(std::span<const Vec3>, const Vec3&, double);

}  // namespace skincells
