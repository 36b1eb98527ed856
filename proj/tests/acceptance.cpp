// Acceptance suite: ten numbered criteria, one PASS/FAIL line each.
// Returns nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "bendloss/bending.hpp"
#include "bendloss/contour.hpp"
#include "bendloss/grid.hpp"
#include "bendloss/io.hpp"
#include "bendloss/losses.hpp"
#include "bendloss/metrics.hpp"
#include "bendloss/pipeline.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bendloss;

namespace {

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;
  bool ok = true;
  std::string detail;
  double seconds = 0.0;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void require(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

std::vector<Criterion> results;

template <typename Fn>
void run(int id, const std::string& title, double limit_seconds, Fn&& body) {
  Criterion c{id, title, limit_seconds};
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.limit_seconds > 0 && c.seconds >= c.limit_seconds)
    c.fail("runtime " + std::to_string(c.seconds) + "s exceeds " +
           std::to_string(c.limit_seconds) + "s");
  results.push_back(c);
  std::printf("[%s] criterion %2d: %s (%.2fs)%s%s\n", c.ok ? "PASS" : "FAIL", c.id,
              c.title.c_str(), c.seconds, c.detail.empty() ? "" : " -- ", c.detail.c_str());
  std::fflush(stdout);
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "bendloss_acceptance";
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd =
      std::string("\"") + BENDLOSS_CLI_PATH + "\" " + args + " > \"" + stdout_file.string() +
      "\" 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return status;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

// Exhaustive single-rectangle family on a 4x4 grid, plus the empty map.
std::vector<LabelMap> rect_family() {
  std::vector<LabelMap> maps{fixtures::blank(4, 4)};
  for (int x0 = 0; x0 < 4; ++x0)
    for (int x1 = x0; x1 < 4; ++x1)
      for (int y0 = 0; y0 < 4; ++y0)
        for (int y1 = y0; y1 < 4; ++y1) {
          LabelMap m = fixtures::blank(4, 4);
          fixtures::draw_rect(m, x0, y0, x1, y1, 1);
          maps.push_back(m);
        }
  return maps;
}

// Deterministic slice of the two-disjoint-rectangle family.
std::vector<LabelMap> two_rect_family(std::size_t cap) {
  std::vector<LabelMap> maps;
  const auto singles = rect_family();
  for (std::size_t i = 1; i < singles.size() && maps.size() < cap; ++i)
    for (std::size_t j = i + 1; j < singles.size() && maps.size() < cap; ++j) {
      const LabelMap& a = singles[i];
      const LabelMap& b = singles[j];
      bool disjoint = true;
      for (int k = 0; k < 16 && disjoint; ++k)
        disjoint = !(a.data()[k] != 0 && b.data()[k] != 0);
      if (!disjoint) continue;
      LabelMap m = a;
      for (int k = 0; k < 16; ++k)
        if (b.data()[k] != 0) m.data()[k] = 2;
      maps.push_back(m);
    }
  return maps;
}

struct OracleTally {
  long long pairs = 0;
  long long mismatches = 0;
  long long matching_violations = 0;
};

void compare_with_oracle(const LabelMap& gt, const LabelMap& pred, OracleTally& tally) {
  ++tally.pairs;
  bool ok = true;

  ok &= aji(gt, pred) == oracle::aji(gt, pred);
  ok &= dice_global(gt, pred) == oracle::dice(gt, pred);

  const PanopticResult pan = panoptic(gt, pred);
  const oracle::Panoptic opan = oracle::panoptic(gt, pred);
  ok &= pan.rq == opan.rq && pan.sq == opan.sq && pan.pq == opan.pq;

  const auto overlapped = identify_overlapped(gt);
  ok &= overlapped == oracle::overlapped_ids(gt);
  ok &= ajio(gt, pred, overlapped) == oracle::ajio(gt, pred, overlapped);
  ok &= acco(gt, pred, overlapped) == oracle::acco(gt, pred, overlapped);
  if (!ok) ++tally.mismatches;

  // Criterion 5: the IoU > 0.5 relation must be one-to-one in both directions.
  std::set<std::uint32_t> gs, ps;
  for (const MatchedPair& p : pan.match.pairs) {
    if (!(p.iou > 0.5) || !gs.insert(p.gt_id).second || !ps.insert(p.pred_id).second)
      ++tally.matching_violations;
  }
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  OracleTally oracle_tally;

  // 1. Pattern-table constants.
  run(1, "pattern table: 28 patterns, 5 groups, published constants", 1.0, [&](Criterion& c) {
    BendingParams params;  // mu = 20
    const auto table = pattern_table(params);
    c.require(table.size() == 28, "expected 28 patterns");

    std::set<int> groups;
    const std::vector<double> convex_expected = {0.0, 0.28, 1.41, 2.00, 9.66};
    const std::vector<double> concave_expected = {0.0, 5.69, 28.28, 40.00, 193.14};
    for (const auto& p : table) {
      groups.insert(p.group);
      bool hit = false;
      for (std::size_t i = 0; i < convex_expected.size(); ++i)
        hit |= std::abs(p.convex_energy - convex_expected[i]) <= 0.005 &&
               std::abs(p.concave_energy - concave_expected[i]) <= 0.005;
      c.require(hit, "pattern value outside the published set");
    }
    c.require(groups.size() == 5, "expected exactly 5 groups");

    // The CLI surface reports the same table.
    const fs::path out = dir / "pattern.txt";
    c.require(run_cli("pattern-table --mu 20", out) == 0, "CLI pattern-table failed");
    const std::string text = slurp(out);
    int rows = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      double convex = 0, concave = 0;
      int group = 0, px = 0, py = 0, nx = 0, ny = 0;
      if (std::sscanf(line.c_str(), "group=%d prev=(%d,%d) next=(%d,%d) convex=%lf concave=%lf",
                      &group, &px, &py, &nx, &ny, &convex, &concave) == 7) {
        ++rows;
        bool hit = false;
        for (std::size_t i = 0; i < convex_expected.size(); ++i)
          hit |= std::abs(convex - convex_expected[i]) <= 0.005 &&
                 std::abs(concave - concave_expected[i]) <= 0.005;
        c.require(hit, "CLI row outside the published set");
      }
    }
    c.require(rows == 28, "CLI printed " + std::to_string(rows) + " rows");
  });

  // 2. Dihedral invariance of the bending loss.
  run(2, "bending loss identical under all 8 dihedral transforms", 10.0, [&](Criterion& c) {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 100; ++trial) {
      const LabelMap m = fixtures::random_label_map(rng, 64, 8);
      const double base = bending_loss(m).loss;
      for (int k = 1; k < 8; ++k) {
        const double t = bending_loss(dihedral_transform(m, k)).loss;
        if (std::abs(t - base) > 1e-12) {
          c.fail("trial " + std::to_string(trial) + " transform " + std::to_string(k) +
                 " differs by " + std::to_string(std::abs(t - base)));
          return;
        }
      }
    }
  });

  // 3. Merged vs separated discrimination.
  run(3, "merged discs bend harder; separated stay below 9.66", 1.0, [&](Criterion& c) {
    const BendingReport merged = bending_loss(fixtures::merged_discs());
    const BendingReport separated = bending_loss(fixtures::separated_discs());
    int high = 0;
    for (const auto& p : merged.per_point) high += p.energy >= 28.0;
    c.require(high >= 2, "merged fixture has " + std::to_string(high) + " points with BE >= 28");
    c.require(merged.loss > separated.loss, "merged loss not strictly greater");
    c.require(separated.max_energy() <= 9.66,
              "separated max BE " + std::to_string(separated.max_energy()));
  });

  // 4 & 5 share one corpus.
  run(4, "metrics equal the brute-force oracle exactly", 60.0, [&](Criterion& c) {
    const auto singles = rect_family();
    for (const LabelMap& gt : singles)
      for (const LabelMap& pred : singles) compare_with_oracle(gt, pred, oracle_tally);

    const auto doubles = two_rect_family(60);
    for (const LabelMap& gt : doubles)
      for (const LabelMap& pred : doubles) compare_with_oracle(gt, pred, oracle_tally);

    std::mt19937 rng(103);
    for (int trial = 0; trial < 1000; ++trial) {
      const LabelMap gt = fixtures::random_label_map_sized(rng, 32, 32, 5);
      const LabelMap pred = fixtures::random_label_map_sized(rng, 32, 32, 5);
      compare_with_oracle(gt, pred, oracle_tally);
    }
    c.require(oracle_tally.pairs >= 11000,
              "only " + std::to_string(oracle_tally.pairs) + " pairs exercised");
    c.require(oracle_tally.mismatches == 0,
              std::to_string(oracle_tally.mismatches) + " oracle mismatches");
  });

  run(5, "IoU > 0.5 matching is one-to-one on the whole corpus", 0.0, [&](Criterion& c) {
    c.require(oracle_tally.pairs > 0, "criterion 4 corpus missing");
    c.require(oracle_tally.matching_violations == 0,
              std::to_string(oracle_tally.matching_violations) + " violations");
  });

  // 6. Analytic polygon gradient vs central finite differences.
  run(6, "polygon bending gradient matches finite differences", 5.0, [&](Criterion& c) {
    std::mt19937 rng(107);
    std::uniform_int_distribution<int> size(6, 40);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = size(rng);
      std::uniform_real_distribution<double> radius(1.0, 3.0);
      std::vector<Eigen::Vector2d> v(n);
      for (int i = 0; i < n; ++i) {
        const double angle = 2.0 * M_PI * (i + 0.2 * std::uniform_real_distribution<double>(
                                                         -1.0, 1.0)(rng)) /
                             n;
        v[i] = {radius(rng) * std::cos(angle), radius(rng) * std::sin(angle)};
      }
      std::vector<bool> concave(n, false);
      for (int i = 0; i < n; ++i) concave[i] = rng() % 4 == 0;

      const PolygonBending out = polygon_bending_gradient(v, concave);
      const double h = 1e-5;
      for (int i = 0; i < n; ++i)
        for (int axis = 0; axis < 2; ++axis) {
          auto perturbed = v;
          perturbed[i][axis] += h;
          const double up = polygon_bending_gradient(perturbed, concave).loss;
          perturbed[i][axis] = v[i][axis] - h;
          const double down = polygon_bending_gradient(perturbed, concave).loss;
          const double fd = (up - down) / (2.0 * h);
          const double rel =
              std::abs(out.gradient[i][axis] - fd) / std::max(1.0, std::abs(fd));
          if (rel >= 1e-4) {
            c.fail("trial " + std::to_string(trial) + ": relative error " + std::to_string(rel));
            return;
          }
        }
    }
  });

  // 7. Watershed separation on ideal inputs.
  run(7, "watershed: 2 instances on touching discs, 1 on isolated", 5.0, [&](Criterion& c) {
    const LabelMap gt = fixtures::touching_discs();
    const HvGroundTruth maps = hv_ground_truth(gt, identify_overlapped(gt));
    const FloatMap prob = foreground_of(gt).cast<float>();
    const PostprocessResult r = watershed_postprocess(prob, maps.all_nuclei);
    c.require(instances_of(r.labels).size() == 2,
              "touching discs produced " + std::to_string(instances_of(r.labels).size()) +
                  " instances");
    const MetricsReport score = evaluate(gt, r.labels);
    c.require(score.aji >= 0.95, "AJI " + std::to_string(score.aji));
    c.require(score.acco.has_value() && *score.acco == 1.0, "ACCO != 1.0");

    const LabelMap lone = fixtures::isolated_disc();
    const HvGroundTruth lone_maps = hv_ground_truth(lone, identify_overlapped(lone));
    const PostprocessResult lr =
        watershed_postprocess(foreground_of(lone).cast<float>(), lone_maps.all_nuclei);
    c.require(instances_of(lr.labels).size() == 1, "isolated disc not a single instance");
  });

  // 8. Loss kernel constants.
  run(8, "loss kernels: ln 2, zero at equality, affine in alpha", 0.0, [&](Criterion& c) {
    BinaryMask ones(2, 2);
    ones.setConstant(1);
    const double ce = cross_entropy(fixtures::constant_map(2, 2, 0.5f), ones);
    c.require(std::abs(ce - std::log(2.0)) <= 1e-9, "cross entropy != ln 2");

    FloatMap half(2, 2);
    half.setConstant(0.5f);
    BinaryMask truth(2, 2);
    truth.setZero();
    truth(0, 0) = 1;
    FloatMap same = truth.cast<float>();
    c.require(dice_loss(same, truth) == 0.0, "dice at pred == truth");

    std::mt19937 rng(109);
    const FloatMapPair d{fixtures::uniform_float_map(rng, 5, 5),
                         fixtures::uniform_float_map(rng, 5, 5)};
    BinaryMask region(5, 5);
    region.setConstant(1);
    c.require(mse(d, d) == 0.0, "mse at D == D*");
    c.require(msge(d, d, region) == 0.0, "msge at D == D*");
    c.require(dist_loss(d, d, region) == 0.0, "dist at D == D*");

    const double li = 0.3, lh = 0.7, lo = 0.1, lb = 0.9;
    for (double alpha : {0.0, 0.5, 2.0}) {
      const LossBreakdown t = total_loss(li, lh, lo, lb, alpha);
      c.require(t.total == li + lh + lo + alpha * lb, "total not exactly affine in alpha");
    }
  });

  // 9. File and patch round trips.
  run(9, "round trips: png16/lmap/FMAP and 1000x1000 patching", 0.0, [&](Criterion& c) {
    std::mt19937 rng(113);
    for (int trial = 0; trial < 100; ++trial) {
      const LabelMap m = fixtures::random_label_map(rng, 48);
      const fs::path lp = dir / "rt.lmap";
      const fs::path pp = dir / "rt.png";
      write_label_map(m, lp, LabelFormat::lmap);
      write_label_map(m, pp, LabelFormat::png16);
      if (!(read_label_map(lp, LabelFormat::lmap) == m).all() ||
          !(read_label_map(pp, LabelFormat::png16) == m).all()) {
        c.fail("label round trip failed at trial " + std::to_string(trial));
        return;
      }
      FloatMap f(m.rows(), m.cols());
      for (Eigen::Index y = 0; y < m.rows(); ++y)
        for (Eigen::Index x = 0; x < m.cols(); ++x)
          f(y, x) = std::uniform_real_distribution<float>(-5.0f, 5.0f)(rng);
      const fs::path fp = dir / "rt.fmap";
      write_float_map(f, fp);
      if (!(read_float_map(fp) == f).all()) {
        c.fail("fmap round trip failed at trial " + std::to_string(trial));
        return;
      }
    }

    FloatMap big(1000, 1000);
    for (int y = 0; y < 1000; ++y)
      for (int x = 0; x < 1000; ++x)
        big(y, x) = static_cast<float>((x * 31 + y * 17) % 257) / 257.0f;
    const auto set = extract_patches(big);  // 270 / 80
    c.require(set.patches.size() == 169, std::to_string(set.patches.size()) + " patches");
    std::vector<FloatMap> windows;
    for (const auto& p : set.patches) windows.push_back(center_window(p, set.index));
    const FloatMap merged = merge_patches(windows, set.index);
    c.require((merged == big).all(), "patch round trip not bit-identical");
  });

  // 10. End-to-end CLI determinism.
  run(10, "evaluate and postprocess outputs byte-identical across runs/jobs", 0.0,
      [&](Criterion& c) {
        const fs::path gt_dir = dir / "gt";
        const fs::path pred_dir = dir / "pred";
        fs::create_directories(gt_dir);
        fs::create_directories(pred_dir);
        std::mt19937 rng(127);
        for (int i = 0; i < 8; ++i) {
          const LabelMap gt = fixtures::random_label_map_sized(rng, 48, 48, 6);
          const LabelMap pred =
              i % 2 == 0 ? gt : fixtures::random_label_map_sized(rng, 48, 48, 6);
          char name[32];
          std::snprintf(name, sizeof name, "img_%02d.png", i);
          write_label_map(gt, gt_dir / name, LabelFormat::png16);
          write_label_map(pred, pred_dir / name, LabelFormat::png16);
        }

        const std::string base_args =
            "evaluate \"" + gt_dir.string() + "\" \"" + pred_dir.string() + "\"";
        struct Variant {
          std::string args;
          fs::path stdout_file;
          fs::path out_dir;
        };
        std::vector<Variant> variants;
        for (int run_i = 0; run_i < 2; ++run_i)
          for (int jobs : {1, 8}) {
            Variant v;
            v.out_dir = dir / ("eval_out_" + std::to_string(run_i) + "_" + std::to_string(jobs));
            v.stdout_file = dir / ("eval_stdout_" + std::to_string(run_i) + "_" +
                                   std::to_string(jobs) + ".txt");
            v.args = base_args + " --jobs " + std::to_string(jobs) + " --out \"" +
                     v.out_dir.string() + "\"";
            variants.push_back(v);
          }
        for (const auto& v : variants) {
          fs::remove_all(v.out_dir);
          if (run_cli(v.args, v.stdout_file) != 0) {
            c.fail("evaluate run failed");
            return;
          }
        }
        for (std::size_t i = 1; i < variants.size(); ++i) {
          c.require(same_bytes(variants[0].stdout_file, variants[i].stdout_file),
                    "stdout differs between runs");
          c.require(same_bytes(variants[0].out_dir / "summary.metrics",
                               variants[i].out_dir / "summary.metrics"),
                    "summary differs between runs");
          c.require(same_bytes(variants[0].out_dir / "img_03.png.metrics",
                               variants[i].out_dir / "img_03.png.metrics"),
                    "per-image report differs between runs");
        }

        // postprocess determinism on the touching-discs fixture.
        const LabelMap gt = fixtures::touching_discs();
        const HvGroundTruth maps = hv_ground_truth(gt, identify_overlapped(gt));
        write_float_map(foreground_of(gt).cast<float>(), dir / "prob.fmap");
        write_float_map_pair(maps.all_nuclei, dir / "hv.fmap");
        for (int i = 0; i < 2; ++i) {
          const std::string args = "postprocess --prob \"" + (dir / "prob.fmap").string() +
                                   "\" --hv \"" + (dir / "hv.fmap").string() + "\" --out \"" +
                                   (dir / ("post_" + std::to_string(i) + ".lmap")).string() +
                                   "\"";
          if (run_cli(args, dir / ("post_stdout_" + std::to_string(i) + ".txt")) != 0) {
            c.fail("postprocess run failed");
            return;
          }
        }
        c.require(same_bytes(dir / "post_0.lmap", dir / "post_1.lmap"),
                  "postprocess output differs between runs");
      });

  int failures = 0;
  for (const Criterion& c : results) failures += c.ok ? 0 : 1;
  std::printf("%zu criteria, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}
