#pragma once

#include <array>
#include <span>
#include <vector>

#include "skincells/common.hpp"

namespace skincells {

using Triangle = std::array<int, 3>;

/// Triangle mesh with rest positions in centimeters and derived one-ring adjacency.
///
/// Construction validates the connectivity: indices in range, no triangle with a
/// repeated index, and every vertex referenced by at least one triangle.
class Mesh {
 public:
  Mesh() = default;
  Mesh(Positions vertices, std::vector<Triangle> triangles);

  const Positions& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t vertex_count() const { return vertices_.size(); }

  /// Neighbors of `v`, sorted ascending.
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }
  const std::vector<int>& incident_triangles(int v) const { return incident_[v]; }

 private:
  Positions vertices_;
  std::vector<Triangle> triangles_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> incident_;
};

/// Uniform (umbrella) Laplacian: L(X)_v = mean of X over N(v) minus X_v.
class LaplacianOperator {
 public:
  /// Throws if any vertex has no neighbors.
  explicit LaplacianOperator(std::vector<std::vector<int>> neighbors);

  std::size_t vertex_count() const { return neighbors_.size(); }
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }

  Positions apply(std::span<const Vec3> positions) const;
  /// Adjoint of apply(), used to pull gradients back to positions.
  Positions apply_transpose(std::span<const Vec3> values) const;

 private:
  std::vector<std::vector<int>> neighbors_;
};

LaplacianOperator build_laplacian(const Mesh& mesh);
Positions apply_laplacian(const LaplacianOperator& op, std::span<const Vec3> positions);

/// Per-vertex orthonormal frames with columns (tangent, bitangent, normal).
///
/// The normal is the area-weighted average of incident face normals, the tangent is
/// the edge to the lowest-index neighbor projected onto the tangent plane. Degenerate
/// configurations fall back to the global axis least aligned with the normal.
std::vector<Mat3> vertex_frames(const Mesh& mesh, std::span<const Vec3> positions);

/// Endpoint shrink applied by segment_intersects_mesh, in cm.
inline constexpr double kSegmentShrink = 1e-4;

/// True iff the open segment (a, b), shrunk by kSegmentShrink at both ends, hits a
/// triangle not listed in `excluded`. Brute force over all triangles.
bool segment_intersects_mesh(const Mesh& mesh, const Vec3& a, const Vec3& b,
                             std::span<const int> excluded = {});

}  // namespace skincells
