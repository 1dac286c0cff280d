#include "fixtures.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace skincells::testing {

Mesh make_tube(double radius, double length, int rings, int segments) {
  Positions verts;
  std::vector<Triangle> tris;
  for (int i = 0; i < rings; ++i) {
    const double x = length * static_cast<double>(i) / (rings - 1);
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * std::numbers::pi * s / segments;
      verts.emplace_back(x, radius * std::cos(a), radius * std::sin(a));
    }
  }
  for (int i = 0; i + 1 < rings; ++i) {
    for (int s = 0; s < segments; ++s) {
      const int a = i * segments + s;
      const int b = i * segments + (s + 1) % segments;
      const int c = (i + 1) * segments + s;
      const int d = (i + 1) * segments + (s + 1) % segments;
      tris.push_back({a, b, d});
      tris.push_back({a, d, c});
    }
  }
  return Mesh(std::move(verts), std::move(tris));
}

Mesh make_hex_prism(double radius, double length) {
  Positions verts;
  for (int i = 0; i < 2; ++i) {
    for (int s = 0; s < 6; ++s) {
      const double a = 2.0 * std::numbers::pi * s / 6;
      verts.emplace_back(length * i, radius * std::cos(a), radius * std::sin(a));
    }
  }
  std::vector<Triangle> tris;
  for (int s = 0; s < 6; ++s) {
    const int a = s, b = (s + 1) % 6, c = 6 + s, d = 6 + (s + 1) % 6;
    tris.push_back({a, b, d});
    tris.push_back({a, d, c});
  }
  for (int k = 1; k + 1 < 6; ++k) {
    tris.push_back({0, k + 1, k});
    tris.push_back({6, 6 + k, 6 + k + 1});
  }
  return Mesh(std::move(verts), std::move(tris));
}

Mesh make_sphere(const Vec3& center, double radius, int subdivisions, double jitter, std::uint64_t seed) {
  Positions verts{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<Triangle> tris{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                             {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    for (const Triangle& t : tris) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wobble(1.0 - jitter, 1.0 + jitter);
  for (Vec3& v : verts) v = center + radius * wobble(rng) * v;
  return Mesh(std::move(verts), std::move(tris));
}

Mesh make_grid(int nx, int ny) {
  Positions verts;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) verts.emplace_back(i, j, 0.0);
  }
  std::vector<Triangle> tris;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i, b = a + 1, c = a + nx, d = c + 1;
      tris.push_back({a, b, d});
      tris.push_back({a, d, c});
    }
  }
  return Mesh(std::move(verts), std::move(tris));
}

Mesh make_tetrahedron() {
  Positions verts{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  std::vector<Triangle> tris{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return Mesh(std::move(verts), std::move(tris));
}

Skeleton make_chain(const std::vector<double>& lengths, double limit_deg) {
  std::vector<Joint> joints;
  JointLimits limits;
  for (auto& axis : limits.axes) axis = {-limit_deg, limit_deg};
  joints.push_back({"j0", -1, Vec3::Zero(), Mat3::Identity(), limits});
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    joints.push_back({"j" + std::to_string(k + 1), static_cast<int>(k), Vec3(lengths[k], 0, 0),
                      Mat3::Identity(), limits});
  }
  return Skeleton(std::move(joints));
}

Skeleton make_elbow_rig() {
  JointLimits limits;
  for (auto& axis : limits.axes) axis = {-60.0, 60.0};
  return Skeleton({{"shoulder", -1, Vec3::Zero(), Mat3::Identity(), limits},
                   {"elbow", 0, Vec3(10, 0, 0), Mat3::Identity(), limits},
                   {"wrist", 1, Vec3(10, 0, 0), Mat3::Identity(), limits}});
}

Mesh make_elbow_tube(int rings, int segments) { return make_tube(2.0, 20.0, rings, segments); }

Vec3 random_point(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  const double x = u(rng), y = u(rng), z = u(rng);
  return {x, y, z};
}

SkinCellSet random_cells(const Skeleton& skeleton, int m, int l, std::mt19937_64& rng) {
  SkinCellSet cells = initialize_cells(skeleton, m, l, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (SkinCell& cell : cells.cells) {
    for (Site& site : cell.sites) {
      for (int a = 0; a < 3; ++a) site.center[a] += 2.0 * u(rng);
      for (double& s : site.shape) s += u(rng);
      site.log_t += u(rng);
    }
    cell.log_c += u(rng);
    cell.log_r += u(rng);
  }
  return cells;
}

}  // namespace skincells::testing
