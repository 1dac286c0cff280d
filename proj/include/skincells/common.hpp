#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>
#include <vector>

namespace skincells {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Transform = Eigen::Affine3d;

/// Stacked 3D positions, one per mesh vertex.
using Positions = std::vector<Vec3>;

/// Non-fatal diagnostics collected by loaders (defaulted limits, out-of-limit poses, ...).
using Warnings = std::vector<std::string>;

/// Base error for invalid inputs and failed operations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skincells
