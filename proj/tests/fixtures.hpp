#pragma once

#include <random>
#include <vector>

#include "skincells/field.hpp"
#include "skincells/mesh.hpp"
#include "skincells/skeleton.hpp"

namespace skincells::testing {

/// Open tube along +x from 0 to `length` with `rings` vertex rings of `segments` vertices.
Mesh make_tube(double radius, double length, int rings, int segments);

/// Closed hexagonal prism along +x (12 vertices).
Mesh make_hex_prism(double radius, double length);

/// Closed, jittered, subdivided octahedron around `center`.
Mesh make_sphere(const Vec3& center, double radius, int subdivisions, double jitter, std::uint64_t seed);

/// Flat grid in the z = 0 plane with `nx` x `ny` vertices and unit spacing.
Mesh make_grid(int nx, int ny);

Mesh make_tetrahedron();

/// Straight chain along +x: joint k sits at x = sum of the first k lengths.
Skeleton make_chain(const std::vector<double>& lengths, double limit_deg = 45.0);

/// Shoulder/elbow/wrist chain of two 10 cm bones with +-60 degree limits.
Skeleton make_elbow_rig();

/// Elbow fixture tube: radius 2 cm, 20 cm long, ~600 vertices.
Mesh make_elbow_tube(int rings = 30, int segments = 20);

Vec3 random_point(std::mt19937_64& rng, double extent);

/// Cells with random (but valid) parameters around the given rig.
SkinCellSet random_cells(const Skeleton& skeleton, int m, int l, std::mt19937_64& rng);

}  // namespace skincells::testing
