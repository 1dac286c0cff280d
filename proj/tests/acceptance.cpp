// Acceptance suite: one PASS/FAIL line per criterion; exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "skincells/cli.hpp"
#include "skincells/field.hpp"
#include "skincells/io.hpp"
#include "skincells/losses.hpp"
#include "skincells/optim.hpp"
#include "skincells/skinning.hpp"

namespace fs = std::filesystem;
using namespace skincells;
using namespace skincells::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

// Branching rig: spine of 4 joints, two 3-joint arms off the top, one head leaf.
Skeleton make_branching_rig() {
  JointLimits limits;
  std::vector<Joint> joints{
      {"root", -1, Vec3(0, 0, 0), Mat3::Identity(), limits},
      {"spine1", 0, Vec3(0, 4, 0), Mat3::Identity(), limits},
      {"spine2", 1, Vec3(0, 4, 0), Mat3::Identity(), limits},
      {"neck", 2, Vec3(0, 4, 0), Mat3::Identity(), limits},
      {"l_arm", 2, Vec3(3, 1, 0), Mat3::Identity(), limits},
      {"l_fore", 4, Vec3(5, 0, 0), Mat3::Identity(), limits},
      {"l_hand", 5, Vec3(5, 0, 0), Mat3::Identity(), limits},
      {"r_arm", 2, Vec3(-3, 1, 0), Mat3::Identity(), limits},
      {"r_fore", 7, Vec3(-5, 0, 0), Mat3::Identity(), limits},
      {"r_hand", 8, Vec3(-5, 0, 0), Mat3::Identity(), limits},
      {"head", 3, Vec3(0, 3, 1), Mat3::Identity(), limits},
  };
  return Skeleton(std::move(joints));
}

// ---------------------------------------------------------------------------
// 1 + 2: sparsity guarantee and partition of unity on the same probes.

struct ProbeStats {
  long probes = 0;
  long sparsity_violations = 0;
  long unity_violations = 0;
  long fallbacks = 0;
  double worst_sum_error = 0.0;
};

const ProbeStats& sparsity_probes() {
  static const ProbeStats stats = [] {
    ProbeStats s;
    const Skeleton rig = make_branching_rig();
    std::mt19937_64 rng(20241);
    constexpr int kSets = 20;
    constexpr int kPointsPerSet = 100000 / kSets;
    for (int set = 0; set < kSets; ++set) {
      SkinCellSet cells = random_cells(rig, 6, 4, rng);
      for (int l : {1, 2, 4, 8}) {
        cells.l = l;
        for (int p = 0; p < kPointsPerSet; ++p) {
          const Vec3 x = random_point(rng, 15.0) + Vec3(0, 8, 0);
          for (bool clamp : {true, false}) {
            const FieldTrace trace = weight_field_trace(cells, x, FieldOptions{clamp});
            const WeightVector& w = trace.weights;
            ++s.probes;
            if (trace.fallback) ++s.fallbacks;
            const double err = std::abs(w.sum() - 1.0);
            s.worst_sum_error = std::max(s.worst_sum_error, err);
            if (!(err <= 1e-6) || !w.allFinite()) ++s.unity_violations;
            if (clamp && (w.array() != 0.0).count() > l) ++s.sparsity_violations;
          }
        }
      }
    }
    return s;
  }();
  return stats;
}

Outcome criterion_sparsity() {
  const ProbeStats& s = sparsity_probes();
  return {s.sparsity_violations == 0,
          fmt("%ld clamped probes over l in {1,2,4,8}, %ld with more than l nonzeros", s.probes / 2,
              s.sparsity_violations)};
}

Outcome criterion_unity() {
  const ProbeStats& s = sparsity_probes();
  return {s.unity_violations == 0 && s.fallbacks > 0,
          fmt("%ld probes, worst |sum-1| = %.3g, %ld one-hot fallbacks, %ld violations", s.probes,
              s.worst_sum_error, s.fallbacks, s.unity_violations)};
}

// ---------------------------------------------------------------------------
// 3: proximity reduction.

// Independent modulated distance: dense F built entry by entry, sqrt of the quadratic form.
double oracle_cell_distance(const SkinCell& cell, const Vec3& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const Site& s : cell.sites) {
    double F[3][3] = {{std::exp(s.shape[0]), 0, 0},
                      {s.shape[1], std::exp(s.shape[2]), 0},
                      {s.shape[3], s.shape[4], std::exp(s.shape[5])}};
    double q = 0;
    for (int r = 0; r < 3; ++r) {
      double row = 0;
      for (int c = 0; c < 3; ++c) row += F[r][c] * (x[c] - s.center[c]);
      q += row * row;
    }
    const double d = std::sqrt(q), t = std::exp(s.log_t);
    best = std::min(best, d < t ? 0.5 * (d * d / t + t) : d);
  }
  return best;
}

Outcome criterion_proximity() {
  const Skeleton rig = make_branching_rig();
  std::mt19937_64 rng(7);
  SkinCellSet cells = random_cells(rig, 6, 4, rng);
  const double r = 3.5;
  for (SkinCell& cell : cells.cells) {
    cell.log_c = std::log(1e6);
    cell.log_r = std::log(r);
  }
  double worst = 0.0;
  for (int p = 0; p < 10000; ++p) {
    const Vec3 x = random_point(rng, 15.0) + Vec3(0, 8, 0);
    const WeightVector w = weight_field_eval(cells, x);
    std::vector<double> oracle(cells.joint_count());
    double total = 0;
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      oracle[j] = std::pow(oracle_cell_distance(cells.cells[j], x), -r);
      total += oracle[j];
    }
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      worst = std::max(worst, std::abs(w[static_cast<Eigen::Index>(j)] - oracle[j] / total));
    }
  }
  return {worst < 1e-6, fmt("10^4 points, max deviation %.3g", worst)};
}

// ---------------------------------------------------------------------------
// 4: stability against the softmax baseline.

Outcome criterion_softmax() {
  // Planar 3-bone chain with a side branch, all joints in z = 0.
  JointLimits limits;
  const Skeleton rig({{"a", -1, Vec3(-6, 0, 0), Mat3::Identity(), limits},
                      {"b", 0, Vec3(4, 0, 0), Mat3::Identity(), limits},
                      {"c", 1, Vec3(4, 1, 0), Mat3::Identity(), limits},
                      {"d", 2, Vec3(4, -1, 0), Mat3::Identity(), limits},
                      {"e", 1, Vec3(0, 4, 0), Mat3::Identity(), limits}});
  std::mt19937_64 rng(4);
  SkinCellSet cells = initialize_cells(rig, 6, 4, rng);
  std::vector<Vec3> sites;
  for (SkinCell& cell : cells.cells) {
    for (Site& s : cell.sites) {
      s.center.z() = 0.0;
      sites.push_back(s.center);
    }
  }
  constexpr int kRes = 256;
  long far_pixels = 0, far_nan = 0, cell_finite = 0;
  for (int iy = 0; iy < kRes; ++iy) {
    for (int ix = 0; ix < kRes; ++ix) {
      const Vec3 x(-10.0 + 20.0 * (ix + 0.5) / kRes, -10.0 + 20.0 * (iy + 0.5) / kRes, 0.0);
      double nearest = std::numeric_limits<double>::infinity();
      for (const Vec3& s : sites) nearest = std::min(nearest, (x - s).norm());
      const Eigen::VectorXf soft = softmax_field_eval<float>(sites, x, 50.0f);
      if (nearest > 3.0) {
        ++far_pixels;
        if (soft.array().isNaN().any()) ++far_nan;
      }
      const WeightVector w = weight_field_eval(cells, x);
      if (w.allFinite() && std::abs(w.sum() - 1.0) <= 1e-6) ++cell_finite;
    }
  }
  const long total = static_cast<long>(kRes) * kRes;
  return {far_nan >= 1 && cell_finite == total,
          fmt("softmax NaN at %ld of %ld pixels beyond distance 3; skin cells finite at %ld/%ld", far_nan,
              far_pixels, cell_finite, total)};
}

// ---------------------------------------------------------------------------
// 5: gradient check against central differences.

struct GradientReport {
  long checked = 0;
  long failures = 0;
  double worst = 0.0;
};

void check_gradient(const LossContext& context, const LossWeights& lambda, const SkinCellSet& cells,
                    const std::vector<SkinningTransforms>& poses, GradientReport& report) {
  const SkinningObjective objective(context, lambda);
  const auto bases = objective.bases(cells, poses);
  const auto analytic = objective.evaluate(cells, poses, true, &bases).gradient;
  ParameterVector params = flatten(cells);
  constexpr double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> plus = params.values, minus = params.values;
    plus[i] += h;
    minus[i] -= h;
    const double fp = objective.evaluate(unflatten(plus, cells), poses, false, &bases).total;
    const double fm = objective.evaluate(unflatten(minus, cells), poses, false, &bases).total;
    const double fd = (fp - fm) / (2 * h);
    const double scale = std::max(std::abs(fd), std::abs(analytic[i]));
    if (scale <= 1e-8) continue;
    const double rel = std::abs(fd - analytic[i]) / scale;
    ++report.checked;
    report.worst = std::max(report.worst, rel);
    if (!(rel < 1e-4)) ++report.failures;
  }
}

Outcome criterion_gradient() {
  const Mesh prism = make_hex_prism(1.0, 4.0);
  const Skeleton rig = make_chain({2.0, 2.0});
  const LossContext context(prism, rig, build_springs(prism, rig), 2);
  std::mt19937_64 rng(55);
  const LossWeights terms[] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, LossWeights{}};
  GradientReport reports[4];
  for (int point = 0; point < 10; ++point) {
    SkinCellSet cells = random_cells(rig, 2, 2, rng);
    std::vector<SkinningTransforms> poses;
    for (int p = 0; p < 3; ++p) poses.push_back(skinning_transforms(rig, sample_pose(rig, rng)));
    for (int t = 0; t < 4; ++t) check_gradient(context, terms[t], cells, poses, reports[t]);
  }
  bool pass = true;
  std::string detail;
  const char* names[] = {"L_DM", "L_loc", "L_sp", "total"};
  for (int t = 0; t < 4; ++t) {
    pass = pass && reports[t].failures == 0 && reports[t].checked > 0;
    detail += fmt("%s %ld/%ld ok (worst %.2g)%s", names[t], reports[t].checked - reports[t].failures,
                  reports[t].checked, reports[t].worst, t < 3 ? "; " : "");
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 6: rest-pose zeros.

Outcome criterion_rest_zeros() {
  double worst_loss = 0.0;
  bool lbs_exact = true;
  std::mt19937_64 rng(6);
  auto probe = [&](const Mesh& mesh, const Skeleton& rig, int l) {
    const LossContext context(mesh, rig, build_springs(mesh, rig), l);
    const SkinningTransforms identity(rig.joint_count(), Transform::Identity());
    for (int trial = 0; trial < 5; ++trial) {
      const SkinCellSet cells = random_cells(rig, 6, l, rng);
      std::vector<WeightVector> weights;
      for (const Vec3& v : mesh.vertices()) weights.push_back(weight_field_eval(cells, v));
      const PoseEvaluation e = evaluate_pose(context, weights, identity, LossWeights{}, false);
      worst_loss = std::max({worst_loss, e.parts.deltamush, e.parts.location, e.parts.sparsity});
      const Positions posed = lbs(mesh.vertices(), weights, identity);
      lbs_exact = lbs_exact && posed == mesh.vertices();
      const BakedWeights baked = bake_weights(cells, mesh.vertices(), l);
      lbs_exact = lbs_exact && lbs(mesh.vertices(), baked, identity) == mesh.vertices();
    }
  };
  probe(make_hex_prism(1.0, 4.0), make_chain({2.0, 2.0}), 1);
  probe(make_elbow_tube(), make_elbow_rig(), 2);
  return {worst_loss <= 1e-12 && lbs_exact,
          fmt("max loss term %.3g; LBS bit-exact: %s", worst_loss, lbs_exact ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 7, 8, 9: end-to-end elbow fixture.

struct ElbowFixture {
  Mesh mesh = make_elbow_tube();
  Skeleton rig = make_elbow_rig();
  SkinCellSet init;
  OptimizeResult trained;
};

SkinCellSet elbow_init(const Skeleton& rig) {
  std::mt19937_64 rng(1);
  return initialize_cells(rig, 6, 4, rng);
}

const ElbowFixture& elbow_fixture() {
  static const ElbowFixture fixture = [] {
    ElbowFixture f;
    f.init = elbow_init(f.rig);
    OptimizeConfig config;
    config.steps = 300;
    config.seed = 3;
    f.trained = optimize(config, f.mesh, f.rig, f.init);
    return f;
  }();
  return fixture;
}

double window_mean(const std::vector<LossRecord>& history, std::size_t begin, std::size_t count) {
  double sum = 0;
  for (std::size_t i = begin; i < begin + count; ++i) sum += history[i].total;
  return sum / static_cast<double>(count);
}

double max_relative_stretch(const ElbowFixture& f, const SkinCellSet& cells) {
  const SpringSet springs = build_springs(f.mesh, f.rig);
  Pose pose = Pose::rest(f.rig.joint_count());
  pose.euler_deg[1] = Vec3(0, 0, 60);
  const SkinningTransforms transforms = skinning_transforms(f.rig, pose);
  const BakedWeights baked = bake_weights(cells, f.mesh.vertices(), 4);
  const Positions posed = lbs(f.mesh.vertices(), baked, transforms);
  const std::vector<double> d = spring_distances(springs, posed, transforms, f.rig);
  double worst = 0;
  for (std::size_t s = 0; s < springs.size(); ++s) {
    const double rest = springs.springs[s].rest_length;
    worst = std::max(worst, std::abs(d[s] - rest) / rest);
  }
  return worst;
}

Outcome criterion_end_to_end() {
  const ElbowFixture& f = elbow_fixture();
  const auto& h = f.trained.history;
  const double first = window_mean(h, 0, 50), last = window_mean(h, h.size() - 50, 50);
  const double stretch_init = max_relative_stretch(f, f.init);
  const double stretch_trained = max_relative_stretch(f, f.trained.cells);
  return {last <= 0.5 * first && stretch_trained < stretch_init,
          fmt("%zu vertices; mean loss first 50 = %.4g, last 50 = %.4g (ratio %.3f); max stretch at 60 deg "
              "%.4f -> %.4f",
              f.mesh.vertex_count(), first, last, last / first, stretch_init, stretch_trained)};
}

Outcome criterion_tradeoff() {
  const ElbowFixture& f = elbow_fixture();
  const LossContext context(f.mesh, f.rig, build_springs(f.mesh, f.rig), 4);
  std::mt19937_64 rng(808);
  std::vector<SkinningTransforms> eval_poses;
  for (int p = 0; p < 64; ++p) eval_poses.push_back(skinning_transforms(f.rig, sample_pose(f.rig, rng)));
  const SkinningObjective unweighted(context, LossWeights{1, 1, 1});

  // The fixture's loss plateaus after roughly 8000 steps at the default learning rate.
  constexpr int kSteps = 8000;
  constexpr std::size_t kWindow = 500;
  LossParts converged[2];
  double drift[2];
  const double lambdas[2] = {600.0, 6000.0};
  for (int k = 0; k < 2; ++k) {
    OptimizeConfig config;
    config.steps = kSteps;
    config.seed = 3;
    config.lambda.location = lambdas[k];
    const OptimizeResult r = optimize(config, f.mesh, f.rig, f.init);
    converged[k] = unweighted.evaluate(r.cells, eval_poses, false).parts;
    const double previous = window_mean(r.history, kSteps - 2 * kWindow, kWindow);
    drift[k] = (previous - window_mean(r.history, kSteps - kWindow, kWindow)) / previous;
  }
  const bool pass = converged[1].location < converged[0].location &&
                    converged[1].deltamush > converged[0].deltamush;
  return {pass, fmt("%d steps (last-window loss drift %.1f%% / %.1f%%); lambda_loc 600 -> 6000: L_loc %.5g -> "
                    "%.5g, L_DM %.5g -> %.5g",
                    kSteps, 100 * drift[0], 100 * drift[1], converged[0].location, converged[1].location,
                    converged[0].deltamush, converged[1].deltamush)};
}

Outcome criterion_lod() {
  const ElbowFixture& f = elbow_fixture();
  const Mesh lods[3] = {make_tube(2.0, 20.0, 19, 16), make_tube(2.0, 20.0, 37, 16),
                        make_tube(2.0, 20.0, 73, 32)};
  BakedWeights baked[3];
  for (int k = 0; k < 3; ++k) baked[k] = bake_weights(f.trained.cells, lods[k].vertices(), 4);
  const std::size_t n = f.rig.joint_count();
  const Mesh& fine = lods[2];
  double worst = 0;
  long matched = 0;
  for (int coarse = 0; coarse < 2; ++coarse) {
    for (std::size_t v = 0; v < lods[coarse].vertex_count(); ++v) {
      const Vec3& x = lods[coarse].vertices()[v];
      std::size_t hit = fine.vertex_count();
      for (std::size_t u = 0; u < fine.vertex_count(); ++u) {
        if ((fine.vertices()[u] - x).norm() < 1e-9) {
          hit = u;
          break;
        }
      }
      if (hit == fine.vertex_count()) return {false, fmt("coarse vertex %zu has no fine counterpart", v)};
      ++matched;
      const WeightVector fine_field = weight_field_eval(f.trained.cells, fine.vertices()[hit]);
      worst = std::max(worst, (baked[coarse].dense(v, n) - fine_field).cwiseAbs().maxCoeff());
      worst = std::max(worst, (baked[coarse].dense(v, n) - baked[2].dense(hit, n)).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 0.05, fmt("LODs of %zu/%zu/%zu vertices, %ld coarse vertices matched, max L-inf %.3g",
                             lods[0].vertex_count(), lods[1].vertex_count(), lods[2].vertex_count(),
                             matched, worst)};
}

// ---------------------------------------------------------------------------
// 10: serialization.

Outcome criterion_serialization() {
  std::mt19937_64 rng(10);
  bool exact = true, sizes = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int chain = 1 + static_cast<int>(rng() % 8);
    const Skeleton rig = make_chain(std::vector<double>(static_cast<std::size_t>(chain), 1.5));
    const int m = 1 + static_cast<int>(rng() % 7);
    const SkinCellSet cells = random_cells(rig, m, 1 + static_cast<int>(rng() % 6), rng);
    const auto bytes = io::encode_field(cells);
    sizes = sizes && bytes.size() == io::field_file_size(cells.joint_count(), cells.sites_per_cell());
    const SkinCellSet back = io::decode_field(bytes, &rig);
    const ParameterVector a = flatten(cells), b = flatten(back);
    for (std::size_t i = 0; i < a.size(); ++i) {
      exact = exact && static_cast<float>(a.values[i]) == b.values[i];
    }
    exact = exact && io::encode_field(back) == bytes && back.l == cells.l;
  }
  const std::size_t payload = io::field_file_size(80, 6) - io::kFieldHeaderBytes;
  const std::size_t total = io::field_file_size(80, 6);
  const bool budget = payload == 19840 && total <= 21 * 1024;
  return {exact && sizes && budget,
          fmt("100 random round trips %s; n=80 m=6 payload %zu B, file %zu B", exact && sizes ? "exact" : "FAILED",
              payload, total)};
}

// ---------------------------------------------------------------------------
// 11: ablation freeze modes.

Outcome criterion_ablation() {
  const Mesh mesh = make_elbow_tube();
  const Skeleton rig = make_elbow_rig();
  const SkinCellSet init = elbow_init(rig);
  const ParameterLayout layout{init.sites_per_cell()};
  std::string detail;
  bool pass = true;
  for (FreezeMode mode : {FreezeMode::falloff, FreezeMode::falloff_sparsity}) {
    OptimizeConfig config;
    config.steps = 25;
    config.pool = 64;
    config.mode = mode;
    const SkinCellSet trained = optimize(config, mesh, rig, init).cells;
    const auto before = io::encode_field(init), after = io::encode_field(trained);
    long changed_allowed = 0, changed_frozen = 0;
    for (std::size_t j = 0; j < init.joint_count(); ++j) {
      for (std::size_t i = 0; i < layout.per_cell(); ++i) {
        const std::size_t index = layout.cell(j) + i;
        const std::size_t offset = io::kFieldHeaderBytes + 4 * index;
        const bool differs = !std::equal(before.begin() + offset, before.begin() + offset + 4, after.begin() + offset);
        const bool allowed = index == layout.log_r(j) || (mode == FreezeMode::falloff_sparsity && index == layout.log_c(j));
        if (differs) (allowed ? changed_allowed : changed_frozen)++;
      }
    }
    pass = pass && changed_frozen == 0 && changed_allowed > 0;
    detail += fmt("%s: %ld trainable values changed, %ld frozen values changed; ",
                  std::string(to_string(mode)).c_str(), changed_allowed, changed_frozen);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 12: CLI determinism.

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / "skincells_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Mesh mesh = make_elbow_tube();
  io::save_obj(dir / "tube.obj", mesh.vertices(), mesh.triangles());
  io::save_skeleton(dir / "rig.json", make_elbow_rig());
  const std::string obj = (dir / "tube.obj").string(), rig = (dir / "rig.json").string();
  if (run_cli({"init", "--mesh", obj, "--skeleton", rig, "--seed", "5", "--out", (dir / "init.skcl").string()}) != 0) {
    return {false, "init failed"};
  }
  for (const char* run : {"a", "b"}) {
    const int code = run_cli({"--threads", "1", "optimize", "--mesh", obj, "--skeleton", rig, "--field",
                              (dir / "init.skcl").string(), "--out", (dir / (std::string(run) + ".skcl")).string(),
                              "--steps", "40", "--pool", "64", "--seed", "9", "--history",
                              (dir / (std::string(run) + ".csv")).string()});
    if (code != 0) return {false, "optimize failed"};
  }
  const std::string a = slurp(dir / "a.csv"), b = slurp(dir / "b.csv");
  const bool fields_equal = slurp(dir / "a.skcl") == slurp(dir / "b.skcl");
  const long lines = std::count(a.begin(), a.end(), '\n');
  fs::remove_all(dir);
  return {!a.empty() && a == b && fields_equal,
          fmt("two seeded runs: %ld-line histories %s, fields %s", lines, a == b ? "identical" : "DIFFER",
              fields_equal ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "sparsity guarantee at c=0", 30, criterion_sparsity},
      {2, "partition of unity", 0, criterion_unity},
      {3, "proximity reduction", 0, criterion_proximity},
      {4, "stability vs softmax baseline", 10, criterion_softmax},
      {5, "gradient correctness", 0, criterion_gradient},
      {6, "rest-pose zeros", 0, criterion_rest_zeros},
      {7, "end-to-end elbow fixture", 300, criterion_end_to_end},
      {8, "lambda_loc trade-off direction", 0, criterion_tradeoff},
      {9, "LOD consistency", 0, criterion_lod},
      {10, "serialization", 0, criterion_serialization},
      {11, "ablation freeze modes", 0, criterion_ablation},
      {12, "CLI determinism", 0, criterion_determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds) {
      outcome.pass = false;
      outcome.detail += fmt("; over the %.0f s budget", c.budget_seconds);
    }
    if (!outcome.pass) ++failed;
    std::printf("[%s] criterion %2d: %s: %s (%.2f s)\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
