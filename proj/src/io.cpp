#include "skincells/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"

namespace skincells::io {

using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// OBJ face corner "12", "12/3", "12//4", "12/3/4"; negative indices are relative.
int parse_corner(const std::string& token, int vertex_count, int line) {
  const std::string head = token.substr(0, token.find('/'));
  std::size_t used = 0;
  int idx = 0;
  try {
    idx = std::stoi(head, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != head.size()) {
    throw Error("obj line " + std::to_string(line) + ": malformed face corner '" + token + "'");
  }
  const int resolved = idx > 0 ? idx - 1 : vertex_count + idx;
  if (idx == 0 || resolved < 0 || resolved >= vertex_count) {
    throw Error("obj line " + std::to_string(line) + ": face references missing vertex " + head);
  }
  return resolved;
}

}  // namespace

Mesh load_obj(const fs::path& path, double scale) {
  auto in = open_in(path);
  Positions vertices;
  std::vector<Triangle> triangles;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::istringstream ss(raw);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw Error("obj line " + std::to_string(line) + ": malformed vertex record");
      }
      vertices.push_back(p * scale);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string corner;
      while (ss >> corner) poly.push_back(parse_corner(corner, static_cast<int>(vertices.size()), line));
      if (poly.size() < 3) {
        throw Error("obj line " + std::to_string(line) + ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
    // vn, vt, g, o, s, usemtl, mtllib: ignored.
  }
  return Mesh(std::move(vertices), std::move(triangles));
}

void save_obj(const fs::path& path, std::span<const Vec3> positions, std::span<const Triangle> triangles) {
  auto out = open_out(path);
  char buf[128];
  for (const Vec3& p : positions) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const Triangle& t : triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  finish(out, path);
}

Skeleton parse_skeleton(std::string_view json_text, Warnings* warnings, double scale) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("skeleton: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("joints") || !doc["joints"].is_array()) {
    throw Error("skeleton: expected an object with a \"joints\" array");
  }
  const json& list = doc["joints"];
  const int count = static_cast<int>(list.size());
  if (count == 0) throw Error("skeleton: no joints");

  std::vector<Joint> raw(count);
  std::vector<int> parent(count, -1);
  std::map<std::string, int> by_name;
  std::vector<json> parent_refs(count);
  for (int i = 0; i < count; ++i) {
    const json& item = list[i];
    Joint& joint = raw[i];
    joint.name = item.value("name", "");
    if (joint.name.empty()) throw Error("skeleton: joint " + std::to_string(i) + " has no name");
    if (!by_name.emplace(joint.name, i).second) {
      throw Error("skeleton: duplicate joint name '" + joint.name + "'");
    }
    if (item.contains("offset")) {
      const json& off = item["offset"];
      if (!off.is_array() || off.size() != 3) {
        throw Error("skeleton: joint '" + joint.name + "' offset must be [x, y, z]");
      }
      joint.offset = Vec3(off[0].get<double>(), off[1].get<double>(), off[2].get<double>()) * scale;
    }
    const json limits = item.value("limits", json::object());
    bool defaulted = false;
    for (int a = 0; a < 3; ++a) {
      const std::string axis(1, "xyz"[a]);
      if (limits.contains(axis)) {
        const json& range = limits[axis];
        if (!range.is_array() || range.size() != 2) {
          throw Error("skeleton: joint '" + joint.name + "' limit " + axis + " must be [min, max]");
        }
        const double lo = range[0].get<double>();
        const double hi = range[1].get<double>();
        if (lo > hi) {
          throw Error("skeleton: joint '" + joint.name + "' limit " + axis + " has min > max");
        }
        joint.limits.axes[a] = {lo, hi};
      } else {
        joint.limits.axes[a] = {-45.0, 45.0};
        defaulted = true;
      }
    }
    if (defaulted && warnings) {
      warnings->push_back("joint '" + joint.name + "' is missing limits; using +-45 degrees");
    }
    parent_refs[i] = item.value("parent", json());
  }

  int roots = 0;
  for (int i = 0; i < count; ++i) {
    const json& ref = parent_refs[i];
    if (ref.is_null() || (ref.is_string() && ref.get<std::string>().empty()) ||
        (ref.is_number_integer() && ref.get<int>() < 0)) {
      parent[i] = -1;
      ++roots;
    } else if (ref.is_string()) {
      auto it = by_name.find(ref.get<std::string>());
      if (it == by_name.end()) {
        throw Error("skeleton: joint '" + raw[i].name + "' has unknown parent '" +
                    ref.get<std::string>() + "'");
      }
      parent[i] = it->second;
    } else if (ref.is_number_integer()) {
      const int p = ref.get<int>();
      if (p >= count) throw Error("skeleton: joint '" + raw[i].name + "' parent index out of range");
      parent[i] = p;
    } else {
      throw Error("skeleton: joint '" + raw[i].name + "' has an invalid parent reference");
    }
    if (parent[i] == i) throw Error("skeleton: cycle detected at joint '" + raw[i].name + "'");
  }
  if (roots > 1) throw Error("skeleton: multiple roots (" + std::to_string(roots) + ")");

  // Emit joints once their parent has been emitted, preserving file order otherwise.
  std::vector<int> new_index(count, -1);
  std::vector<Joint> ordered;
  ordered.reserve(count);
  bool progress = true;
  while (progress && static_cast<int>(ordered.size()) < count) {
    progress = false;
    for (int i = 0; i < count; ++i) {
      if (new_index[i] >= 0) continue;
      if (parent[i] >= 0 && new_index[parent[i]] < 0) continue;
      Joint joint = raw[i];
      joint.parent = parent[i] >= 0 ? new_index[parent[i]] : -1;
      new_index[i] = static_cast<int>(ordered.size());
      ordered.push_back(std::move(joint));
      progress = true;
    }
  }
  if (static_cast<int>(ordered.size()) < count) throw Error("skeleton: cycle detected in parent links");
  if (roots == 0) throw Error("skeleton: no root joint");
  return Skeleton(std::move(ordered));
}

Skeleton load_skeleton(const fs::path& path, Warnings* warnings, double scale) {
  try {
    return parse_skeleton(read_text(path), warnings, scale);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_skeleton(const fs::path& path, const Skeleton& skeleton) {
  json joints = json::array();
  for (const Joint& joint : skeleton.joints()) {
    json item;
    item["name"] = joint.name;
    item["parent"] = joint.parent >= 0 ? json(skeleton.joint(joint.parent).name) : json();
    item["offset"] = {joint.offset.x(), joint.offset.y(), joint.offset.z()};
    json limits;
    for (int a = 0; a < 3; ++a) {
      limits[std::string(1, "xyz"[a])] = {joint.limits.axes[a].first, joint.limits.axes[a].second};
    }
    item["limits"] = limits;
    joints.push_back(item);
  }
  auto out = open_out(path);
  out << json{{"joints", joints}}.dump(2) << '\n';
  finish(out, path);
}

namespace {

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_field(const SkinCellSet& cells) {
  const auto params = flatten(cells);
  std::vector<std::uint8_t> buf;
  buf.reserve(field_file_size(cells.joint_count(), cells.sites_per_cell()));
  buf.insert(buf.end(), kFieldMagic.begin(), kFieldMagic.end());
  put_u32(buf, kFieldVersion);
  put_u32(buf, static_cast<std::uint32_t>(cells.joint_count()));
  put_u32(buf, static_cast<std::uint32_t>(cells.sites_per_cell()));
  put_u32(buf, static_cast<std::uint32_t>(cells.l));
  put_u64(buf, cells.joint_hash);
  for (double v : params.values) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return buf;
}

void save_field(const fs::path& path, const SkinCellSet& cells) {
  const auto bytes = encode_field(cells);
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

SkinCellSet decode_field(std::span<const std::uint8_t> bytes, const Skeleton* skeleton) {
  if (bytes.size() < kFieldHeaderBytes) throw Error("field file truncated (header incomplete)");
  if (!std::equal(kFieldMagic.begin(), kFieldMagic.end(), bytes.begin())) {
    throw Error("not a field file (bad magic)");
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kFieldVersion) throw Error("unsupported field file version " + std::to_string(version));
  const std::size_t n = get_le(bytes, 8, 4);
  const std::size_t m = get_le(bytes, 12, 4);
  const int l = static_cast<int>(get_le(bytes, 16, 4));
  const std::uint64_t hash = get_le(bytes, 20, 8);
  if (n == 0 || m == 0 || l < 1) throw Error("field file header has zero cells, sites or l");
  const std::size_t expected = field_file_size(n, m);
  if (bytes.size() < expected) {
    throw Error("field file truncated: " + std::to_string(bytes.size()) + " bytes, expected " +
                std::to_string(expected));
  }
  if (bytes.size() > expected) throw Error("field file has trailing bytes");
  if (skeleton) {
    if (skeleton->joint_count() != n) {
      throw Error("field has " + std::to_string(n) + " cells but skeleton has " +
                  std::to_string(skeleton->joint_count()) + " joints");
    }
    if (skeleton->name_hash() != hash) throw Error("field joint names do not match skeleton");
  }

  SkinCellSet shape;
  shape.l = l;
  shape.joint_hash = hash;
  shape.cells.assign(n, SkinCell{std::vector<Site>(m)});
  std::vector<double> values(shape.parameter_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto raw = static_cast<std::uint32_t>(get_le(bytes, kFieldHeaderBytes + 4 * i, 4));
    values[i] = std::bit_cast<float>(raw);
  }
  return unflatten(values, shape);
}

SkinCellSet load_field(const fs::path& path, const Skeleton* skeleton) {
  auto in = open_in(path, std::ios::binary);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_field(bytes, skeleton);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void export_weights(const fs::path& path, const BakedWeights& baked, std::size_t joint_count) {
  auto out = open_out(path);
  out << "{\"joint_count\": " << joint_count << ", \"weights\": [\n";
  char buf[64];
  for (std::size_t v = 0; v < baked.vertex_count(); ++v) {
    out << "  [";
    const auto& row = baked.vertices[v];
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "[%d, %.7g]", row[k].joint, row[k].weight);
      out << (k ? ", " : "") << buf;
    }
    out << (v + 1 < baked.vertex_count() ? "],\n" : "]\n");
  }
  out << "]}\n";
  finish(out, path);
}

BakedWeights load_weights(const fs::path& path, std::size_t* joint_count) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("weights")) throw Error(path.string() + ": missing \"weights\"");
  const std::size_t n = doc.value("joint_count", std::size_t{0});
  if (joint_count) *joint_count = n;
  BakedWeights baked;
  for (const json& row : doc["weights"]) {
    std::vector<Influence> infl;
    for (const json& pair : row) {
      const int j = pair.at(0).get<int>();
      if (j < 0 || (n > 0 && static_cast<std::size_t>(j) >= n)) {
        throw Error(path.string() + ": joint index " + std::to_string(j) + " out of range");
      }
      infl.push_back({j, pair.at(1).get<double>()});
    }
    baked.vertices.push_back(std::move(infl));
  }
  return baked;
}

const std::array<Rgb, 24>& palette() {
  static const std::array<Rgb, 24> colors{{
      {255, 0, 0},     {0, 0, 255},     {0, 200, 0},     {255, 200, 0},   {200, 0, 200},
      {0, 200, 200},   {255, 120, 0},   {120, 60, 0},    {120, 0, 255},   {0, 120, 60},
      {255, 120, 180}, {120, 120, 120}, {180, 255, 60},  {0, 60, 120},    {255, 255, 120},
      {120, 0, 60},    {60, 180, 255},  {180, 120, 60},  {60, 60, 0},     {255, 60, 120},
      {120, 255, 200}, {60, 0, 120},    {200, 200, 255}, {0, 0, 0},
  }};
  return colors;
}

Rgb blend_color(const WeightVector& weights) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    const Rgb& c = palette()[static_cast<std::size_t>(j) % palette().size()];
    acc += weights[j] * Eigen::Vector3d(c[0], c[1], c[2]);
  }
  Rgb out;
  for (int a = 0; a < 3; ++a) {
    const double v = std::isfinite(acc[a]) ? std::round(acc[a]) : 0.0;
    out[a] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

void export_colored_ply(const fs::path& path, const Mesh& mesh, std::span<const WeightVector> weights) {
  if (weights.size() != mesh.vertex_count()) throw Error("colorize: weight count does not match mesh");
  auto out = open_out(path, std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << mesh.triangles().size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  std::vector<std::uint8_t> buf;
  auto put = [&buf](auto value, int width) {
    const auto bits = static_cast<std::uint64_t>(value);
    for (int i = 0; i < width; ++i) buf.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  };
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& p = mesh.vertices()[v];
    for (int a = 0; a < 3; ++a) put(std::bit_cast<std::uint32_t>(static_cast<float>(p[a])), 4);
    for (std::uint8_t c : blend_color(weights[v])) buf.push_back(c);
  }
  for (const Triangle& t : mesh.triangles()) {
    buf.push_back(3);
    for (int idx : t) put(static_cast<std::uint32_t>(idx), 4);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  finish(out, path);
}

Pose parse_pose(std::string_view json_text, const Skeleton& skeleton, Warnings* warnings) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("pose: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("pose: expected an object mapping joint names to angles");
  auto triple = [](const json& value, const std::string& key) {
    if (!value.is_array() || value.size() != 3) throw Error("pose: '" + key + "' must be [x, y, z]");
    return Vec3(value[0].get<double>(), value[1].get<double>(), value[2].get<double>());
  };
  Pose pose = Pose::rest(skeleton.joint_count());
  for (const auto& [key, value] : doc.items()) {
    if (key == "root_translation") {
      pose.root_translation = triple(value, key);
      continue;
    }
    int index = -1;
    for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
      if (skeleton.joint(static_cast<int>(j)).name == key) index = static_cast<int>(j);
    }
    if (index < 0) throw Error("pose: unknown joint '" + key + "'");
    pose.euler_deg[index] = triple(value, key);
    const auto& axes = skeleton.joint(index).limits.axes;
    for (int a = 0; a < 3; ++a) {
      const double angle = pose.euler_deg[index][a];
      if ((angle < axes[a].first || angle > axes[a].second) && warnings) {
        warnings->push_back("pose: joint '" + key + "' axis " + "xyz"[a] + " angle " +
                            std::to_string(angle) + " is outside its limits");
      }
    }
  }
  return pose;
}

Pose load_pose(const fs::path& path, const Skeleton& skeleton, Warnings* warnings) {
  return parse_pose(read_text(path), skeleton, warnings);
}

void write_loss_history(std::ostream& out, std::span<const LossRecord> history) {
  out << "step,loss,loss_dm,loss_loc,loss_sp\n";
  char buf[160];
  for (const LossRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.step, r.total, r.parts.deltamush,
                  r.parts.location, r.parts.sparsity);
    out << buf;
  }
}

void save_loss_history(const fs::path& path, std::span<const LossRecord> history) {
  auto out = open_out(path);
  write_loss_history(out, history);
  finish(out, path);
}

}  // namespace skincells::io
