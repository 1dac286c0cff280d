#include "skincells/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <random>

#include "CLI11.hpp"
#include "skincells/field.hpp"
#include "skincells/io.hpp"
#include "skincells/losses.hpp"
#include "skincells/optim.hpp"
#include "skincells/skinning.hpp"

namespace skincells::cli {

namespace {

constexpr double kUnitySumTolerance = 1e-6;

struct Options {
  int threads = 0;  // 0: fall back to SKINCELLS_THREADS, then 1
  std::uint64_t seed = 0;

  // Paths.
  std::string mesh, skeleton, field, out, weights, pose, history;

  // init
  int m = 6;
  int l = 4;
  std::optional<int> l_override;

  // optimize
  int steps = 1500;
  int pool = 1024;
  int batch = 16;
  double lambda_dm = 1.0;
  double lambda_loc = 6000.0;
  double lambda_sp = 1.0;
  double learning_rate = 1e-3;
  std::string mode = "full";

  // bake / pose
  std::string sparse_clamp = "off";

  // validate
  int samples = 100000;
  bool softmax = false;
  double beta = 50.0;

  // baseline
  std::string method = "proximity";
  double falloff = 3.5;
  double scale = 1.0;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SKINCELLS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void print_warnings(const Warnings& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

Skeleton read_skeleton(const Options& o, std::ostream& err) {
  Warnings warnings;
  Skeleton skeleton = io::load_skeleton(o.skeleton, &warnings, o.scale);
  print_warnings(warnings, err);
  return skeleton;
}

FieldOptions clamp_option(const std::string& value) {
  return FieldOptions{value == "on"};
}

std::vector<WeightVector> dense_rows(const BakedWeights& baked, std::size_t joints) {
  std::vector<WeightVector> rows(baked.vertex_count());
  for (std::size_t v = 0; v < rows.size(); ++v) rows[v] = baked.dense(v, joints);
  return rows;
}

int cmd_init(const Options& o, std::ostream& out, std::ostream& err) {
  const Mesh mesh = io::load_obj(o.mesh, o.scale);
  const Skeleton skeleton = read_skeleton(o, err);
  std::mt19937_64 rng(o.seed);
  const SkinCellSet cells = initialize_cells(skeleton, o.m, o.l, rng);
  io::save_field(o.out, cells);
  out << "initialized " << cells.joint_count() << " cells x " << o.m << " sites for a "
      << mesh.vertex_count() << "-vertex mesh -> " << o.out << '\n';
  return kSuccess;
}

int cmd_optimize(const Options& o, std::ostream& out, std::ostream& err) {
  const Mesh mesh = io::load_obj(o.mesh, o.scale);
  const Skeleton skeleton = read_skeleton(o, err);
  const SkinCellSet init = io::load_field(o.field, &skeleton);

  OptimizeConfig config;
  config.steps = o.steps;
  config.pool = o.pool;
  config.batch = o.batch;
  config.l = o.l_override.value_or(init.l);
  config.lambda = {o.lambda_dm, o.lambda_loc, o.lambda_sp};
  config.seed = o.seed;
  config.mode = parse_freeze_mode(o.mode);
  config.learning_rate = o.learning_rate;
  config.threads = resolve_threads(o.threads);

  const OptimizeResult result = optimize(config, mesh, skeleton, init);
  const std::string target = o.out.empty() ? o.field : o.out;
  io::save_field(target, result.cells);
  if (!o.history.empty()) io::save_loss_history(o.history, result.history);
  if (!result.history.empty()) {
    const LossRecord& first = result.history.front();
    const LossRecord& last = result.history.back();
    out << "steps " << result.history.size() << ", loss " << first.total << " -> " << last.total
        << " (dm " << last.parts.deltamush << ", loc " << last.parts.location << ", sp "
        << last.parts.sparsity << ")\n";
  }
  out << "wrote " << target << '\n';
  return kSuccess;
}

int cmd_bake(const Options& o, std::ostream& out, std::ostream&) {
  const SkinCellSet cells = io::load_field(o.field);
  const Mesh mesh = io::load_obj(o.mesh, o.scale);
  const int l = o.l_override.value_or(cells.l);
  const BakedWeights baked = bake_weights(cells, mesh.vertices(), l, clamp_option(o.sparse_clamp));
  io::export_weights(o.out, baked, cells.joint_count());
  out << "baked " << baked.vertex_count() << " vertices (l=" << l << ") -> " << o.out << '\n';
  return kSuccess;
}

int cmd_pose(const Options& o, std::ostream& out, std::ostream& err) {
  const Mesh mesh = io::load_obj(o.mesh, o.scale);
  const Skeleton skeleton = read_skeleton(o, err);
  BakedWeights baked;
  if (!o.weights.empty()) {
    baked = io::load_weights(o.weights);
  } else {
    const SkinCellSet cells = io::load_field(o.field, &skeleton);
    baked = bake_weights(cells, mesh.vertices(), o.l_override.value_or(cells.l),
                         clamp_option(o.sparse_clamp));
  }
  Warnings warnings;
  const Pose pose = io::load_pose(o.pose, skeleton, &warnings);
  print_warnings(warnings, err);
  const Positions deformed = lbs(mesh.vertices(), baked, skinning_transforms(skeleton, pose));
  io::save_obj(o.out, deformed, mesh.triangles());
  out << "posed " << deformed.size() << " vertices -> " << o.out << '\n';
  return kSuccess;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const Skeleton skeleton = read_skeleton(o, err);
  const SkinCellSet cells = io::load_field(o.field, &skeleton);

  const ParameterVector params = flatten(cells);
  std::size_t bad_params = 0;
  for (double v : params.values) bad_params += std::isfinite(v) ? 0 : 1;
  for (const SkinCell& cell : cells.cells) {
    bad_params += std::isfinite(cell.falloff()) && std::isfinite(cell.sparsity_relaxation()) ? 0 : 1;
  }
  out << "parameters: " << params.size() << " scalars, " << bad_params << " non-finite\n";
  if (bad_params > 0) {
    err << "error: field has non-finite parameters\n";
    return kFailure;
  }

  std::size_t leaf_sites = 0, leaf_sites_near = 0;
  for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
    if (!skeleton.children(static_cast<int>(j)).empty()) continue;
    const Vec3 joint = skeleton.rest_position(static_cast<int>(j));
    for (const Site& site : cells.cells[j].sites) {
      ++leaf_sites;
      if ((site.center - joint).norm() <= kLeafRadius) ++leaf_sites_near;
    }
  }
  out << "leaf sites within " << kLeafRadius << " cm of their joint: " << leaf_sites_near << " of "
      << leaf_sites << '\n';

  Eigen::AlignedBox3d box;
  for (std::size_t j = 0; j < skeleton.joint_count(); ++j) box.extend(skeleton.rest_position(static_cast<int>(j)));
  if (!o.mesh.empty()) {
    const Mesh mesh = io::load_obj(o.mesh, o.scale);
    for (const Vec3& p : mesh.vertices()) box.extend(p);
  }
  const double pad = std::max(0.5 * box.diagonal().norm(), 5.0);
  box.min().array() -= pad;
  box.max().array() += pad;

  std::vector<Vec3> site_centers;
  for (const SkinCell& cell : cells.cells) {
    for (const Site& site : cell.sites) site_centers.push_back(site.center);
  }

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t non_finite = 0, unity = 0, sparsity = 0, softmax_nan = 0;
  double worst_sum = 0.0;
  for (int i = 0; i < o.samples; ++i) {
    Vec3 x;
    for (int a = 0; a < 3; ++a) x[a] = box.min()[a] + unit(rng) * (box.max()[a] - box.min()[a]);
    for (bool clamp : {false, true}) {
      const WeightVector w = weight_field_eval(cells, x, FieldOptions{clamp});
      if (!w.allFinite()) {
        ++non_finite;
        continue;
      }
      const double dev = std::abs(w.sum() - 1.0);
      worst_sum = std::max(worst_sum, dev);
      if (dev > kUnitySumTolerance) ++unity;
      if (clamp && (w.array() != 0.0).count() > cells.l) ++sparsity;
    }
    if (o.softmax) {
      const Eigen::VectorXf s = softmax_field_eval<float>(site_centers, x, static_cast<float>(o.beta));
      if (!s.allFinite()) ++softmax_nan;
    }
  }
  out << "samples: " << o.samples << '\n'
      << "non-finite weights: " << non_finite << '\n'
      << "partition-of-unity violations: " << unity << " (max |sum-1| = " << worst_sum << ")\n"
      << "sparsity violations at c=0 (l=" << cells.l << "): " << sparsity << '\n';
  if (o.softmax) {
    out << "softmax baseline (single precision, beta=" << o.beta << "): " << softmax_nan << " of "
        << o.samples << " samples non-finite\n";
  }
  const bool ok = non_finite == 0 && unity == 0 && sparsity == 0;
  out << (ok ? "PASS" : "FAIL") << '\n';
  if (!ok) err << "error: field validation failed\n";
  return ok ? kSuccess : kFailure;
}

int cmd_colorize(const Options& o, std::ostream& out, std::ostream&) {
  const Mesh mesh = io::load_obj(o.mesh, o.scale);
  std::vector<WeightVector> rows;
  if (!o.weights.empty()) {
    std::size_t joints = 0;
    const BakedWeights baked = io::load_weights(o.weights, &joints);
    if (baked.vertex_count() != mesh.vertex_count()) throw Error("weights do not match mesh vertex count");
    if (joints == 0) {
      for (const auto& row : baked.vertices) {
        for (const Influence& inf : row) joints = std::max(joints, static_cast<std::size_t>(inf.joint) + 1);
      }
    }
    rows = dense_rows(baked, joints);
  } else {
    const SkinCellSet cells = io::load_field(o.field);
    rows.resize(mesh.vertex_count());
    for (std::size_t v = 0; v < rows.size(); ++v) rows[v] = weight_field_eval(cells, mesh.vertices()[v]);
  }
  io::export_colored_ply(o.out, mesh, rows);
  out << "colored " << rows.size() << " vertices -> " << o.out << '\n';
  return kSuccess;
}

int cmd_baseline(const Options& o, std::ostream& out, std::ostream& err) {
  const Mesh mesh = io::load_obj(o.mesh, o.scale);
  const Skeleton skeleton = read_skeleton(o, err);
  const std::size_t n = skeleton.joint_count();
  BakedWeights baked;
  baked.vertices.resize(mesh.vertex_count());
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& x = mesh.vertices()[v];
    WeightVector w;
    if (o.method == "proximity") {
      w = proximity_weights(x, skeleton, o.l, o.falloff);
    } else {
      // Softmax over joint-bone distances, computed naively in double precision.
      Eigen::VectorXd e(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) {
        e[static_cast<Eigen::Index>(j)] = std::exp(-o.beta * joint_bone_distance(skeleton, static_cast<int>(j), x));
      }
      w = e / e.sum();
      if (!w.allFinite()) {
        err << "error: softmax baseline produced non-finite weights at vertex " << v << '\n';
        return kFailure;
      }
    }
    baked.vertices[v] = sparsify(w, o.l);
  }
  io::export_weights(o.out, baked, n);
  out << o.method << " baseline for " << baked.vertex_count() << " vertices -> " << o.out << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse skinning weights from optimized skin-cell fields"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--threads", o.threads, "Worker threads (default: SKINCELLS_THREADS or 1)");

  auto add_scale = [&](CLI::App* cmd) {
    cmd->add_option("--scale", o.scale, "Uniform scale applied to loaded assets (e.g. 100 for meters)");
  };

  CLI::App* init = app.add_subcommand("init", "Initialize a skin-cell field along the skeleton");
  init->add_option("--mesh", o.mesh)->required();
  init->add_option("--skeleton", o.skeleton)->required();
  init->add_option("--m", o.m, "Sites per cell")->check(CLI::PositiveNumber);
  init->add_option("--l", o.l, "Max influences per point")->check(CLI::PositiveNumber);
  init->add_option("--seed", o.seed);
  init->add_option("--out", o.out)->required();
  add_scale(init);

  CLI::App* opt = app.add_subcommand("optimize", "Optimize a field over sampled poses");
  opt->add_option("--mesh", o.mesh)->required();
  opt->add_option("--skeleton", o.skeleton)->required();
  opt->add_option("--field", o.field, "Input field")->required();
  opt->add_option("--out", o.out, "Output field (default: overwrite --field)");
  opt->add_option("--steps", o.steps)->check(CLI::NonNegativeNumber);
  opt->add_option("--pool", o.pool)->check(CLI::PositiveNumber);
  opt->add_option("--batch", o.batch, "Poses per iteration")
      ->check(CLI::PositiveNumber);
  opt->add_option("--lambda-dm", o.lambda_dm)->check(CLI::NonNegativeNumber);
  opt->add_option("--lambda-loc", o.lambda_loc)->check(CLI::NonNegativeNumber);
  opt->add_option("--lambda-sp", o.lambda_sp)->check(CLI::NonNegativeNumber);
  opt->add_option("--lr", o.learning_rate)->check(CLI::PositiveNumber);
  opt->add_option("--mode", o.mode)->check(CLI::IsMember({"full", "falloff", "falloff-sparse"}));
  opt->add_option("--l", o.l_override, "Override the field's max influences");
  opt->add_option("--seed", o.seed);
  opt->add_option("--history", o.history, "Loss history CSV");
  add_scale(opt);

  CLI::App* bake = app.add_subcommand("bake", "Bake sparse per-vertex weights from a field");
  bake->add_option("--field", o.field)->required();
  bake->add_option("--mesh", o.mesh)->required();
  bake->add_option("--l", o.l_override);
  bake->add_option("--sparse-clamp", o.sparse_clamp, "Evaluate with every c_j = 0")
      ->check(CLI::IsMember({"on", "off"}));
  bake->add_option("--out", o.out)->required();
  add_scale(bake);

  CLI::App* pose = app.add_subcommand("pose", "Deform a mesh with linear blend skinning");
  pose->add_option("--mesh", o.mesh)->required();
  pose->add_option("--skeleton", o.skeleton)->required();
  auto* w_opt = pose->add_option("--weights", o.weights);
  auto* f_opt = pose->add_option("--field", o.field);
  w_opt->excludes(f_opt);
  pose->add_option("--pose", o.pose)->required();
  pose->add_option("--l", o.l_override);
  pose->add_option("--sparse-clamp", o.sparse_clamp)->check(CLI::IsMember({"on", "off"}));
  pose->add_option("--out", o.out)->required();
  add_scale(pose);

  CLI::App* validate = app.add_subcommand("validate", "Check partition of unity, sparsity and finiteness");
  validate->add_option("--field", o.field)->required();
  validate->add_option("--skeleton", o.skeleton)->required();
  validate->add_option("--mesh", o.mesh);
  validate->add_option("--samples", o.samples)->check(CLI::PositiveNumber);
  validate->add_option("--seed", o.seed);
  validate->add_flag("--softmax", o.softmax, "Also report NaN regions of a single-precision softmax field");
  validate->add_option("--beta", o.beta);
  add_scale(validate);

  CLI::App* colorize = app.add_subcommand("colorize", "Export a weight-colored PLY");
  auto* cf = colorize->add_option("--field", o.field);
  auto* cw = colorize->add_option("--weights", o.weights);
  cf->excludes(cw);
  colorize->add_option("--mesh", o.mesh)->required();
  colorize->add_option("--out", o.out)->required();
  add_scale(colorize);

  CLI::App* baseline = app.add_subcommand("baseline", "Proximity or softmax baseline weights");
  baseline->add_option("--mesh", o.mesh)->required();
  baseline->add_option("--skeleton", o.skeleton)->required();
  baseline->add_option("--method", o.method)->check(CLI::IsMember({"proximity", "softmax"}));
  baseline->add_option("--falloff", o.falloff)->check(CLI::PositiveNumber);
  baseline->add_option("--beta", o.beta);
  baseline->add_option("--l", o.l)->check(CLI::PositiveNumber);
  baseline->add_option("--seed", o.seed);
  baseline->add_option("--out", o.out)->required();
  add_scale(baseline);

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (*pose && o.weights.empty() && o.field.empty()) {
    err << "error: pose needs --weights or --field\n";
    return kUsage;
  }
  if (*colorize && o.weights.empty() && o.field.empty()) {
    err << "error: colorize needs --weights or --field\n";
    return kUsage;
  }

  try {
    if (*init) return cmd_init(o, out, err);
    if (*opt) return cmd_optimize(o, out, err);
    if (*bake) return cmd_bake(o, out, err);
    if (*pose) return cmd_pose(o, out, err);
    if (*validate) return cmd_validate(o, out, err);
    if (*colorize) return cmd_colorize(o, out, err);
    if (*baseline) return cmd_baseline(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace skincells::cli
