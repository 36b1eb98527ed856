// bendloss command line: evaluation, bending analysis, ground-truth distance
// maps, watershed postprocessing, loss parity checks, patch extract/merge.
//
// Exit codes: 0 success, 1 internal error, 2 user/input error.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "bendloss/bending.hpp"
#include "bendloss/grid.hpp"
#include "bendloss/io.hpp"
#include "bendloss/losses.hpp"
#include "bendloss/metrics.hpp"
#include "bendloss/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Input problems that should exit with status 2.
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

bendloss::LabelFormat parse_format(const std::string& name) {
  if (name == "png16") return bendloss::LabelFormat::png16;
  if (name == "lmap") return bendloss::LabelFormat::lmap;
  throw UserError("unknown label format '" + name + "' (expected png16 or lmap)");
}

bendloss::LabelFormat format_for(const fs::path& path, const std::string& format_flag) {
  if (!format_flag.empty()) return parse_format(format_flag);
  const std::string ext = path.extension().string();
  if (ext == ".png") return bendloss::LabelFormat::png16;
  return bendloss::LabelFormat::lmap;
}

/// Runs fn(0..n-1) on up to `jobs` threads; output slots are pre-indexed so
/// results are independent of scheduling.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min<std::size_t>(jobs, n);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// --- evaluate ----------------------------------------------------------------

std::vector<std::string> list_label_maps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UserError(dir.string() + " is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".lmap") names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::string metrics_kv(const bendloss::MetricsReport& r) {
  std::string out;
  const auto add = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  // Keys stay alphabetically sorted.
  if (r.acco) add("acco", num(*r.acco));
  add("aji", num(r.aji));
  if (r.ajio) add("ajio", num(*r.ajio));
  add("dice", num(r.dice));
  add("n_gt", std::to_string(r.counts.n_gt));
  add("n_overlapped", std::to_string(r.counts.n_overlapped));
  add("n_pred", std::to_string(r.counts.n_pred));
  add("pq", num(r.pq));
  add("rq", num(r.rq));
  add("sq", num(r.sq));
  add("tau", num(r.tau));
  return out;
}

std::string table_row(const std::string& name, const bendloss::MetricsReport& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? fixed4(*v) : std::string("-"); };
  return name + "\t" + fixed4(r.aji) + "\t" + fixed4(r.dice) + "\t" + fixed4(r.rq) + "\t" +
         fixed4(r.sq) + "\t" + fixed4(r.pq) + "\t" + opt(r.ajio) + "\t" + opt(r.acco);
}

bendloss::MetricsReport mean_report(const std::vector<bendloss::MetricsReport>& reports) {
  bendloss::MetricsReport m;
  if (reports.empty()) return m;
  double ajio_sum = 0, acco_sum = 0;
  std::size_t ajio_n = 0, acco_n = 0;
  for (const auto& r : reports) {
    m.aji += r.aji;
    m.dice += r.dice;
    m.rq += r.rq;
    m.sq += r.sq;
    m.pq += r.pq;
    if (r.ajio) {
      ajio_sum += *r.ajio;
      ++ajio_n;
    }
    if (r.acco) {
      acco_sum += *r.acco;
      ++acco_n;
    }
    m.tau = r.tau;
  }
  const auto n = static_cast<double>(reports.size());
  m.aji /= n;
  m.dice /= n;
  m.rq /= n;
  m.sq /= n;
  m.pq /= n;
  if (ajio_n > 0) m.ajio = ajio_sum / static_cast<double>(ajio_n);
  if (acco_n > 0) m.acco = acco_sum / static_cast<double>(acco_n);
  return m;
}

bendloss::MetricsReport pooled_report(const std::vector<bendloss::MetricsReport>& reports) {
  bendloss::MetricsReport m;
  bendloss::EvalCounts& c = m.counts;
  for (const auto& r : reports) {
    c.n_gt += r.counts.n_gt;
    c.n_pred += r.counts.n_pred;
    c.n_overlapped += r.counts.n_overlapped;
    c.matched_overlapped += r.counts.matched_overlapped;
    c.aji_intersection += r.counts.aji_intersection;
    c.aji_union += r.counts.aji_union;
    c.dice_intersection += r.counts.dice_intersection;
    c.dice_total += r.counts.dice_total;
    c.tp += r.counts.tp;
    c.fp += r.counts.fp;
    c.fn += r.counts.fn;
    c.sq_iou_sum += r.counts.sq_iou_sum;
    c.ajio_intersection += r.counts.ajio_intersection;
    c.ajio_union += r.counts.ajio_union;
    m.tau = r.tau;
  }
  m.aji = c.aji_union == 0
              ? 1.0
              : static_cast<double>(c.aji_intersection) / static_cast<double>(c.aji_union);
  m.dice = c.dice_total == 0
               ? 1.0
               : 2.0 * static_cast<double>(c.dice_intersection) / static_cast<double>(c.dice_total);
  if (c.n_gt == 0 && c.n_pred == 0) {
    m.rq = m.sq = m.pq = 1.0;
  } else {
    const auto tp = static_cast<double>(c.tp);
    m.rq = tp / (tp + 0.5 * static_cast<double>(c.fp + c.fn));
    m.sq = c.tp > 0 ? c.sq_iou_sum / tp : 0.0;
    m.pq = m.rq * m.sq;
  }
  if (c.n_overlapped > 0) {
    m.ajio = static_cast<double>(c.ajio_intersection) / static_cast<double>(c.ajio_union);
    m.acco =
        static_cast<double>(c.matched_overlapped) / static_cast<double>(c.n_overlapped);
  }
  return m;
}

int cmd_evaluate(const fs::path& gt_dir, const fs::path& pred_dir, double tau,
                 const std::string& aggregate, unsigned jobs, const std::string& out_dir) {
  const auto gt_names = list_label_maps(gt_dir);
  const auto pred_names = list_label_maps(pred_dir);
  if (gt_names.empty() || pred_names.empty())
    throw UserError("no label maps (*.png, *.lmap) found in the given directories");

  std::vector<std::string> unmatched;
  std::set_symmetric_difference(gt_names.begin(), gt_names.end(), pred_names.begin(),
                                pred_names.end(), std::back_inserter(unmatched));
  if (!unmatched.empty()) {
    std::string msg = "unmatched filenames:";
    for (const auto& n : unmatched) msg += " " + n;
    throw UserError(msg);
  }

  std::vector<bendloss::MetricsReport> reports(gt_names.size());
  parallel_for(gt_names.size(), jobs, [&](std::size_t i) {
    const bendloss::LabelMap gt = bendloss::read_label_map(gt_dir / gt_names[i]);
    const bendloss::LabelMap pred = bendloss::read_label_map(pred_dir / gt_names[i]);
    reports[i] = bendloss::evaluate(gt, pred, std::nullopt, tau);
  });

  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::cout << "image\taji\tdice\trq\tsq\tpq\tajio\tacco\n";
  for (std::size_t i = 0; i < gt_names.size(); ++i) {
    std::cout << table_row(gt_names[i], reports[i]) << "\n";
    if (!out_dir.empty()) {
      std::ofstream f(fs::path(out_dir) / (gt_names[i] + ".metrics"));
      f << metrics_kv(reports[i]);
    }
  }
  const bendloss::MetricsReport summary =
      aggregate == "pooled" ? pooled_report(reports) : mean_report(reports);
  std::cout << table_row(aggregate, summary) << "\n";
  if (!out_dir.empty()) {
    std::ofstream f(fs::path(out_dir) / "summary.metrics");
    f << "aggregate=" << aggregate << "\n" << metrics_kv(summary);
  }
  return 0;
}

// --- bend --------------------------------------------------------------------

int cmd_bend(const fs::path& map_path, const bendloss::BendingParams& params,
             const std::string& out_path, const std::string& image_path) {
  const bendloss::LabelMap labels = bendloss::read_label_map(map_path);
  const bendloss::BendingReport report = bendloss::bending_loss(labels, params);
  for (const auto& d : report.diagnostics) std::cerr << "warning: " << d << "\n";

  std::cout << "l_be=" << num(report.loss) << "\n";
  std::cout << "max_be=" << num(report.max_energy()) << "\n";
  std::cout << "points=" << report.per_point.size() << "\n";

  if (!out_path.empty()) {
    using Channel = bendloss::Grid<std::uint8_t>;
    Channel r(labels.rows(), labels.cols());
    Channel g(labels.rows(), labels.cols());
    Channel b(labels.rows(), labels.cols());
    r.setZero();
    g.setZero();
    b.setZero();
    if (!image_path.empty()) {
      const bendloss::LabelMap backdrop = bendloss::read_label_map(image_path);
      bendloss::require_same_shape(backdrop, labels, "overlay backdrop");
      const std::uint32_t hi = std::max(1u, static_cast<std::uint32_t>(backdrop.maxCoeff()));
      for (Eigen::Index y = 0; y < labels.rows(); ++y)
        for (Eigen::Index x = 0; x < labels.cols(); ++x) {
          const auto v = static_cast<std::uint8_t>(backdrop(y, x) * 255u / hi);
          r(y, x) = g(y, x) = b(y, x) = v;
        }
    }
    // Energy buckets: grey 0, blue (0, 9.66], green (9.66, 40], red above.
    for (const auto& p : report.per_point) {
      std::uint8_t cr = 128, cg = 128, cb = 128;
      if (p.energy > 40.0) {
        cr = 230, cg = 40, cb = 40;
      } else if (p.energy > 9.66) {
        cr = 40, cg = 200, cb = 60;
      } else if (p.energy > 0.0) {
        cr = 60, cg = 100, cb = 240;
      }
      r(p.point.y, p.point.x) = cr;
      g(p.point.y, p.point.x) = cg;
      b(p.point.y, p.point.x) = cb;
    }
    bendloss::write_rgb8_png(r, g, b, out_path);
  }
  return 0;
}

// --- pattern-table -------------------------------------------------------------

int cmd_pattern_table(double mu) {
  bendloss::BendingParams params;
  params.mu = mu;
  const auto table = bendloss::pattern_table(params);
  std::cout << "# " << table.size() << " curve patterns, mu=" << num(mu) << "\n";
  for (int group = 1; group <= 5; ++group)
    for (const auto& p : table) {
      if (p.group != group) continue;
      char line[128];
      std::snprintf(line, sizeof line,
                    "group=%d prev=(%d,%d) next=(%d,%d) convex=%.2f concave=%.2f", p.group,
                    p.prev_neighbor.x, p.prev_neighbor.y, p.next_neighbor.x, p.next_neighbor.y,
                    p.convex_energy, p.concave_energy);
      std::cout << line << "\n";
    }
  return 0;
}

// --- gt-distmap ------------------------------------------------------------------

int cmd_gt_distmap(const fs::path& gt_path, const fs::path& out_dir) {
  const bendloss::LabelMap gt = bendloss::read_label_map(gt_path);
  const auto overlapped = bendloss::identify_overlapped(gt);
  const bendloss::HvGroundTruth maps = bendloss::hv_ground_truth(gt, overlapped);

  fs::create_directories(out_dir);
  const std::string stem = gt_path.stem().string();
  bendloss::write_float_map_pair(maps.all_nuclei, out_dir / (stem + "_hv.fmap"));
  bendloss::write_float_map_pair(maps.overlapped_only, out_dir / (stem + "_ohv.fmap"));
  std::ofstream ids(out_dir / (stem + "_overlapped.txt"));
  for (std::uint32_t id : overlapped) ids << id << "\n";
  return 0;
}

// --- postprocess ------------------------------------------------------------------

int cmd_postprocess(const fs::path& prob_path, const fs::path& hv_path,
                    const bendloss::PostprocessParams& params, const fs::path& out_path,
                    const std::string& format_flag) {
  const bendloss::FloatMap prob = bendloss::read_float_map(prob_path);
  const bendloss::FloatMapPair hv = bendloss::read_float_map_pair(hv_path);
  const bendloss::PostprocessResult result = bendloss::watershed_postprocess(prob, hv, params);
  for (const auto& d : result.diagnostics) std::cerr << "warning: " << d << "\n";
  bendloss::write_label_map(result.labels, out_path, format_for(out_path, format_flag));
  std::cout << "instances=" << bendloss::instances_of(result.labels).size() << "\n";
  return 0;
}

// --- loss --------------------------------------------------------------------------

int cmd_loss(const fs::path& prob_path, const fs::path& hv_path, const fs::path& ohv_path,
             const fs::path& gt_path, const std::string& pred_labels_path,
             const bendloss::BendingParams& params, bool msge_whole_image) {
  const bendloss::FloatMap prob = bendloss::read_float_map(prob_path);
  const bendloss::FloatMapPair pred_hv = bendloss::read_float_map_pair(hv_path);
  const bendloss::FloatMapPair pred_ohv = bendloss::read_float_map_pair(ohv_path);
  const bendloss::LabelMap gt = bendloss::read_label_map(gt_path);

  const bendloss::BinaryMask truth = bendloss::foreground_of(gt);
  const auto overlapped = bendloss::identify_overlapped(gt);
  const bendloss::HvGroundTruth gt_maps = bendloss::hv_ground_truth(gt, overlapped);

  bendloss::BinaryMask region = truth;
  if (msge_whole_image) region.setConstant(1);

  const double l_inst = bendloss::inst_loss(prob, truth);
  const double l_hv = bendloss::dist_loss(pred_hv, gt_maps.all_nuclei, region);
  const double l_ohv = bendloss::dist_loss(pred_ohv, gt_maps.overlapped_only, region);

  bendloss::LabelMap pred_labels;
  if (!pred_labels_path.empty()) {
    pred_labels = bendloss::read_label_map(pred_labels_path);
  } else {
    // Without explicit predicted instances, take components of the binarized map.
    pred_labels = bendloss::connected_components((prob >= 0.5f).cast<std::uint8_t>());
  }
  const bendloss::BendingReport bend = bendloss::bending_loss(pred_labels, params);

  const bendloss::LossBreakdown breakdown =
      bendloss::total_loss(l_inst, l_hv, l_ohv, bend.loss, params.alpha);
  std::cout << "alpha=" << num(breakdown.alpha) << "\n";
  std::cout << "l_be=" << num(breakdown.l_be) << "\n";
  std::cout << "l_hv=" << num(breakdown.l_hv) << "\n";
  std::cout << "l_inst=" << num(breakdown.l_inst) << "\n";
  std::cout << "l_ohv=" << num(breakdown.l_ohv) << "\n";
  std::cout << "total=" << num(breakdown.total) << "\n";
  return 0;
}

// --- patch / merge ---------------------------------------------------------------------

bool is_float_input(const fs::path& path) { return path.extension() == ".fmap"; }

int cmd_patch(const fs::path& input, const fs::path& out_dir, int patch, int stride) {
  fs::create_directories(out_dir);
  json index;
  index["patch"] = patch;
  index["stride"] = stride;
  json windows = json::array();

  const auto record = [&](const bendloss::PatchIndex& idx, std::size_t count,
                          const std::string& ext) {
    index["height"] = idx.height;
    index["width"] = idx.width;
    for (std::size_t i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "patch_%04zu%s", i, ext.c_str());
      windows.push_back({{"x", idx.origins[i].x}, {"y", idx.origins[i].y}, {"file", name}});
    }
  };

  if (is_float_input(input)) {
    const auto channels = bendloss::read_fmap(input);
    index["type"] = "float";
    index["channels"] = channels.size();
    std::vector<bendloss::PatchSet<float>> sets;
    for (const auto& c : channels) sets.push_back(bendloss::extract_patches(c, patch, stride));
    record(sets[0].index, sets[0].patches.size(), ".fmap");
    for (std::size_t i = 0; i < sets[0].patches.size(); ++i) {
      std::vector<bendloss::FloatMap> patch_channels;
      for (const auto& s : sets) patch_channels.push_back(s.patches[i]);
      bendloss::write_fmap(patch_channels, out_dir / windows[i]["file"].get<std::string>());
    }
  } else {
    const bendloss::LabelMap labels = bendloss::read_label_map(input);
    index["type"] = "label";
    index["channels"] = 1;
    const auto set = bendloss::extract_patches(labels, patch, stride);
    record(set.index, set.patches.size(), ".lmap");
    for (std::size_t i = 0; i < set.patches.size(); ++i)
      bendloss::write_label_map(set.patches[i], out_dir / windows[i]["file"].get<std::string>(),
                                bendloss::LabelFormat::lmap);
  }
  index["windows"] = windows;
  std::ofstream f(out_dir / "index.json");
  f << index.dump(2) << "\n";
  std::cout << "patches=" << windows.size() << "\n";
  return 0;
}

bendloss::PatchIndex load_index(const json& index) {
  bendloss::PatchIndex idx;
  idx.height = index.at("height").get<int>();
  idx.width = index.at("width").get<int>();
  idx.patch_size = index.at("patch").get<int>();
  idx.stride = index.at("stride").get<int>();
  for (const auto& wjs : index.at("windows"))
    idx.origins.push_back({wjs.at("x").get<int>(), wjs.at("y").get<int>()});
  return idx;
}

/// Accepts full patches (center-cropped) as well as already stride-sized windows.
template <typename Scalar>
bendloss::Grid<Scalar> as_window(const bendloss::Grid<Scalar>& grid,
                                 const bendloss::PatchIndex& idx) {
  if (grid.rows() == idx.patch_size && grid.cols() == idx.patch_size)
    return bendloss::center_window(grid, idx);
  return grid;
}

int cmd_merge(const fs::path& index_path, const fs::path& out_path,
              const std::string& format_flag) {
  std::ifstream f(index_path);
  if (!f) throw UserError("cannot open " + index_path.string());
  json index = json::parse(f, nullptr, true, true);
  const bendloss::PatchIndex idx = load_index(index);
  const fs::path dir = index_path.parent_path();

  std::vector<fs::path> files;
  for (const auto& wjs : index.at("windows")) {
    const fs::path p = dir / wjs.at("file").get<std::string>();
    if (!fs::exists(p)) throw UserError("missing patch file " + p.string());
    files.push_back(p);
  }

  if (index.at("type") == "float") {
    const auto n_channels = index.at("channels").get<std::size_t>();
    std::vector<std::vector<bendloss::FloatMap>> windows(n_channels);
    for (const auto& file : files) {
      const auto channels = bendloss::read_fmap(file);
      if (channels.size() != n_channels)
        throw UserError(file.string() + ": channel count differs from the index");
      for (std::size_t c = 0; c < n_channels; ++c)
        windows[c].push_back(as_window(channels[c], idx));
    }
    std::vector<bendloss::FloatMap> merged;
    for (auto& w : windows) merged.push_back(bendloss::merge_patches(w, idx));
    bendloss::write_fmap(merged, out_path);
  } else {
    std::vector<bendloss::LabelMap> windows;
    for (const auto& file : files)
      windows.push_back(as_window(bendloss::read_label_map(file), idx));
    bendloss::write_label_map(bendloss::merge_patches(windows, idx), out_path,
                              format_for(out_path, format_flag));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bending-loss toolkit for nuclei instance segmentation"};
  app.require_subcommand(1);

  bendloss::BendingParams bend_params;
  bendloss::PostprocessParams post_params;
  double tau = 0.5;
  unsigned jobs = 1;
  std::string out, format_flag, image_path, aggregate = "mean";

  std::string gt_dir, pred_dir;
  auto* evaluate =
      app.add_subcommand("evaluate", "score predicted label maps against ground truth");
  evaluate->add_option("gt", gt_dir, "ground-truth directory")->required();
  evaluate->add_option("pred", pred_dir, "prediction directory")->required();
  evaluate->add_option("--tau", tau, "match threshold for acco");
  evaluate->add_option("--aggregate", aggregate, "summary aggregation: mean or pooled")
      ->check(CLI::IsMember({"mean", "pooled"}));
  evaluate->add_option("--jobs", jobs, "parallel image workers");
  evaluate->add_option("--out", out, "directory for per-image key=value reports");

  std::string map_path;
  auto* bend = app.add_subcommand("bend", "bending analysis of a label map");
  bend->add_option("map", map_path, "label map (png16 or lmap)")->required();
  bend->add_option("--mu", bend_params.mu, "concave point weight");
  bend->add_option("--alpha", bend_params.alpha, "bending loss weight");
  bend->add_option("--concavity-extent", bend_params.concavity_extent,
                   "arc distance of the mid-point test");
  bend->add_option("--out", out, "overlay png path");
  bend->add_option("--image", image_path, "greyscale backdrop (png16)");

  auto* pattern = app.add_subcommand("pattern-table", "print the 28 curve patterns");
  pattern->add_option("--mu", bend_params.mu, "concave point weight");

  std::string gt_path;
  auto* distmap = app.add_subcommand("gt-distmap", "write HV/OHV ground-truth distance maps");
  distmap->add_option("gt", gt_path, "ground-truth label map")->required();
  distmap->add_option("--out", out, "output directory")->required();

  std::string prob_path, hv_path;
  auto* postprocess = app.add_subcommand("postprocess", "watershed instance recovery");
  postprocess->add_option("--prob", prob_path, "probability map (1-channel fmap)")->required();
  postprocess->add_option("--hv", hv_path, "distance map pair (2-channel fmap)")->required();
  postprocess->add_option("--prob-threshold", post_params.prob_threshold, "foreground threshold");
  postprocess->add_option("--contour-threshold", post_params.contour_threshold, "ridge threshold");
  postprocess->add_option("--min-marker-area", post_params.min_marker_area, "marker area, pixels");
  postprocess->add_option("--out", out, "output label map")->required();
  postprocess->add_option("--format", format_flag, "png16 or lmap");

  std::string ohv_path, pred_labels_path;
  bool msge_whole_image = false;
  auto* loss = app.add_subcommand("loss", "loss breakdown for one image");
  loss->add_option("--pred-prob", prob_path, "predicted probability map (fmap)")->required();
  loss->add_option("--pred-hv", hv_path, "predicted HV pair (fmap)")->required();
  loss->add_option("--pred-ohv", ohv_path, "predicted OHV pair (fmap)")->required();
  loss->add_option("--gt", gt_path, "ground-truth label map")->required();
  loss->add_option("--pred-labels", pred_labels_path,
                   "predicted label map for the bending term (default: binarized prob)");
  loss->add_option("--mu", bend_params.mu, "concave point weight");
  loss->add_option("--alpha", bend_params.alpha, "bending loss weight");
  loss->add_option("--concavity-extent", bend_params.concavity_extent,
                   "arc distance of the mid-point test");
  loss->add_flag("--msge-whole-image", msge_whole_image,
                 "average the gradient loss over all pixels instead of nuclei");

  std::string input_path;
  int patch_size = 270, stride = 80;
  auto* patch = app.add_subcommand("patch", "extract overlapping patches");
  patch->add_option("input", input_path, "source grid (png16, lmap or fmap)")->required();
  patch->add_option("--out", out, "output directory")->required();
  patch->add_option("--patch", patch_size, "patch size, pixels");
  patch->add_option("--stride", stride, "output window size, pixels");

  std::string index_path;
  auto* merge = app.add_subcommand("merge", "reassemble patches into one grid");
  merge->add_option("--index", index_path, "index.json written by patch")->required();
  merge->add_option("--out", out, "merged output path")->required();
  merge->add_option("--format", format_flag, "png16 or lmap (label inputs)");

  try {
    app.parse(argc, argv);

    if (*evaluate) return cmd_evaluate(gt_dir, pred_dir, tau, aggregate, jobs, out);
    if (*bend) return cmd_bend(map_path, bend_params, out, image_path);
    if (*pattern) return cmd_pattern_table(bend_params.mu);
    if (*distmap) return cmd_gt_distmap(gt_path, out);
    if (*postprocess) return cmd_postprocess(prob_path, hv_path, post_params, out, format_flag);
    if (*loss)
      return cmd_loss(prob_path, hv_path, ohv_path, gt_path, pred_labels_path, bend_params,
                      msge_whole_image);
    if (*patch) return cmd_patch(input_path, out, patch_size, stride);
    if (*merge) return cmd_merge(index_path, out, format_flag);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const bendloss::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::overflow_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // File-open failures surface here; treat them as input errors.
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.find("cannot open") != std::string::npos ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
