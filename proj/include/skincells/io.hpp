#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "skincells/field.hpp"
#include "skincells/mesh.hpp"
#include "skincells/optim.hpp"
#include "skincells/skeleton.hpp"
#include "skincells/skinning.hpp"

namespace skincells::io {

namespace fs = std::filesystem;

/// Wavefront OBJ: `v` and `f` records only; polygons are fan-triangulated and
/// positions multiplied by `scale` (use 100 for assets authored in meters).
Mesh load_obj(const fs::path& path, double scale = 1.0);
void save_obj(const fs::path& path, std::span<const Vec3> positions, std::span<const Triangle> triangles);

/// Skeleton JSON:
///   { "joints": [ { "name": "hip", "parent": null | "name" | index,
///                   "offset": [x, y, z],
///                   "limits": { "x": [min, max], "y": [...], "z": [...] } } ] }
/// Joints may be listed in any order; they are sorted so parents precede children.
/// Missing limit axes default to +-45 degrees and add a warning.
Skeleton load_skeleton(const fs::path& path, Warnings* warnings = nullptr, double scale = 1.0);
Skeleton parse_skeleton(std::string_view json_text, Warnings* warnings = nullptr, double scale = 1.0);
void save_skeleton(const fs::path& path, const Skeleton& skeleton);

inline constexpr std::array<char, 4> kFieldMagic{'S', 'K', 'C', 'L'};
inline constexpr std::uint32_t kFieldVersion = 1;
/// magic, version, n, m, l (u32 each) and the joint-name hash (u64).
inline constexpr std::size_t kFieldHeaderBytes = 28;

/// Size in bytes of a field file with n cells of m sites.
constexpr std::size_t field_file_size(std::size_t n, std::size_t m) {
  return kFieldHeaderBytes + 4 * n * (10 * m + 2);
}

/// Little-endian binary field: header then every parameter as a 32-bit float in
/// ParameterLayout order.
void save_field(const fs::path& path, const SkinCellSet& cells);
std::vector<std::uint8_t> encode_field(const SkinCellSet& cells);
/// When `skeleton` is given, its joint count and name hash must match the file.
SkinCellSet load_field(const fs::path& path, const Skeleton* skeleton = nullptr);
SkinCellSet decode_field(std::span<const std::uint8_t> bytes, const Skeleton* skeleton = nullptr);

/// `{"joint_count": n, "weights": [[[joint, weight], ...], ...]}`, weights printed with
/// 7 significant digits.
void export_weights(const fs::path& path, const BakedWeights& baked, std::size_t joint_count);
BakedWeights load_weights(const fs::path& path, std::size_t* joint_count = nullptr);

using Rgb = std::array<std::uint8_t, 3>;
const std::array<Rgb, 24>& palette();
Rgb blend_color(const WeightVector& weights);

/// Binary little-endian PLY with per-vertex colors blended from the palette.
void export_colored_ply(const fs::path& path, const Mesh& mesh, std::span<const WeightVector> weights);

/// Pose JSON: joint name -> [x, y, z] degrees, plus an optional "root_translation".
Pose load_pose(const fs::path& path, const Skeleton& skeleton, Warnings* warnings = nullptr);
Pose parse_pose(std::string_view json_text, const Skeleton& skeleton, Warnings* warnings = nullptr);

/// CSV with header `step,loss,loss_dm,loss_loc,loss_sp`.
void write_loss_history(std::ostream& out, std::span<const LossRecord> history);
void save_loss_history(const fs::path& path, std::span<const LossRecord> history);

}  // namespace skincells::io
