#include "skincells/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skincells {

Mesh::Mesh(Positions vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int n = static_cast<int>(vertices_.size());
  neighbors_.assign(n, {});
  incident_.assign(n, {});
  for (std::size_t f = 0; f < triangles_.size(); ++f) {
    const Triangle& tri = triangles_[f];
    for (int idx : tri) {
      if (idx < 0 || idx >= n) {
        throw Error("triangle " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                    " outside [0, " + std::to_string(n) + ")");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw Error("triangle " + std::to_string(f) + " is degenerate (repeated vertex index)");
    }
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
      incident_[a].push_back(static_cast<int>(f));
    }
  }
  for (int v = 0; v < n; ++v) {
    if (incident_[v].empty()) {
      throw Error("vertex " + std::to_string(v) + " is not referenced by any triangle");
    }
    auto& nb = neighbors_[v];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

LaplacianOperator::LaplacianOperator(std::vector<std::vector<int>> neighbors)
    : neighbors_(std::move(neighbors)) {
  for (std::size_t v = 0; v < neighbors_.size(); ++v) {
    if (neighbors_[v].empty()) {
      throw Error("vertex " + std::to_string(v) + " is isolated (no neighbors)");
    }
  }
}

Positions LaplacianOperator::apply(std::span<const Vec3> positions) const {
  if (positions.size() != neighbors_.size()) {
    throw Error("laplacian: expected " + std::to_string(neighbors_.size()) + " positions, got " +
                std::to_string(positions.size()));
  }
  Positions out(positions.size());
  for (std::size_t v = 0; v < neighbors_.size(); ++v) {
    Vec3 sum = Vec3::Zero();
    for (int u : neighbors_[v]) sum += positions[u];
    out[v] = sum / static_cast<double>(neighbors_[v].size()) - positions[v];
  }
  return out;
}

Positions LaplacianOperator::apply_transpose(std::span<const Vec3> values) const {
  if (values.size() != neighbors_.size()) {
    throw Error("laplacian: size mismatch in transpose application");
  }
  Positions out(values.size(), Vec3::Zero());
  for (std::size_t v = 0; v < neighbors_.size(); ++v) {
    const Vec3 share = values[v] / static_cast<double>(neighbors_[v].size());
    for (int u : neighbors_[v]) out[u] += share;
    out[v] -= values[v];
  }
  return out;
}

LaplacianOperator build_laplacian(const Mesh& mesh) {
  std::vector<std::vector<int>> nb(mesh.vertex_count());
  for (std::size_t v = 0; v < nb.size(); ++v) nb[v] = mesh.neighbors(static_cast<int>(v));
  return LaplacianOperator(std::move(nb));
}

Positions apply_laplacian(const LaplacianOperator& op, std::span<const Vec3> positions) {
  return op.apply(positions);
}

namespace {

Vec3 least_aligned_axis(const Vec3& n) {
  const Vec3 a = n.cwiseAbs();
  int axis = 0;
  if (a[1] < a[axis]) axis = 1;
  if (a[2] < a[axis]) axis = 2;
  return Vec3::Unit(axis);
}

}  // namespace

std::vector<Mat3> vertex_frames(const Mesh& mesh, std::span<const Vec3> positions) {
  if (positions.size() != mesh.vertex_count()) {
    throw Error("vertex_frames: position count does not match mesh");
  }
  const auto& tris = mesh.triangles();
  std::vector<Mat3> frames(positions.size());
  for (std::size_t v = 0; v < positions.size(); ++v) {
    Vec3 normal = Vec3::Zero();
    for (int f : mesh.incident_triangles(static_cast<int>(v))) {
      const Triangle& t = tris[f];
      normal += (positions[t[1]] - positions[t[0]]).cross(positions[t[2]] - positions[t[0]]);
    }
    const double len = normal.norm();
    normal = len > 1e-12 ? Vec3(normal / len) : Vec3::UnitZ();

    const Vec3 edge = positions[mesh.neighbors(static_cast<int>(v)).front()] - positions[v];
    Vec3 tangent = edge - edge.dot(normal) * normal;
    if (tangent.norm() < 1e-9) {
      const Vec3 axis = least_aligned_axis(normal);
      tangent = axis - axis.dot(normal) * normal;
    }
    tangent.normalize();

    Mat3& frame = frames[v];
    frame.col(0) = tangent;
    frame.col(1) = normal.cross(tangent);
    frame.col(2) = normal;
  }
  return frames;
}

bool segment_intersects_mesh(const Mesh& mesh, const Vec3& a, const Vec3& b,
                             std::span<const int> excluded) {
  const Vec3 full = b - a;
  const double length = full.norm();
  if (length <= 2.0 * kSegmentShrink) return false;
  const Vec3 dir = full / length;
  const Vec3 start = a + kSegmentShrink * dir;
  const Vec3 seg = (length - 2.0 * kSegmentShrink) * dir;

  const auto& verts = mesh.vertices();
  const auto& tris = mesh.triangles();
  for (std::size_t f = 0; f < tris.size(); ++f) {
    if (std::find(excluded.begin(), excluded.end(), static_cast<int>(f)) != excluded.end()) {
      continue;
    }
    // Moller-Trumbore with the segment parameter restricted to [0, 1].
    const Vec3& p0 = verts[tris[f][0]];
    const Vec3 e1 = verts[tris[f][1]] - p0;
    const Vec3 e2 = verts[tris[f][2]] - p0;
    const Vec3 pvec = seg.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14) continue;
    const double inv = 1.0 / det;
    const Vec3 tvec = start - p0;
    const double u = tvec.dot(pvec) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 qvec = tvec.cross(e1);
    const double v = seg.dot(qvec) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = e2.dot(qvec) * inv;
    if (t >= 0.0 && t <= 1.0) return true;
  }
  return false;
}

}  // namespace skincells
