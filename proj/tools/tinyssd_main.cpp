// tinyssd command-line entry point. Every subcommand is a thin wrapper over
// a library operation; exit codes: 0 success, 1 contract violation, 2 bad
// usage.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tinyssd/checkpoint.hpp"
#include "tinyssd/config.hpp"
#include "tinyssd/dataset.hpp"
#include "tinyssd/gradcheck.hpp"
#include "tinyssd/synth.hpp"

namespace fs = std::filesystem;
using namespace tinyssd;

namespace {

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg =
      opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
  if (opts.seed_set) {
    cfg.seed = opts.seed;
    cfg.train.seed = opts.seed;
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path,
                  "configuration file (JSON); defaults apply when omitted");
  cmd->add_option("--seed", opts.seed, "override the configured seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

void dump_priors_csv(std::ostream& out, const PriorSet& set) {
  out << "layer,cell_i,cell_j,cx,cy,w,h\n";
  out.precision(17);
  for (size_t n = 0; n < set.size(); ++n) {
    const BoxCenter& b = set.boxes[n];
    out << set.layer_of[n] << "," << set.cell_row[n] << "," << set.cell_col[n]
        << "," << b.cx << "," << b.cy << "," << b.w << "," << b.h << "\n";
  }
}

PriorSet read_priors_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("priors csv: cannot open " + path);
  PriorSet set;
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("priors csv: empty file " + path);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    double values[7];
    for (int k = 0; k < 7; ++k) {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error("priors csv: malformed row in " + path);
      values[k] = std::stod(field);
    }
    set.layer_of.push_back(int(values[0]));
    set.cell_row.push_back(int(values[1]));
    set.cell_col.push_back(int(values[2]));
    set.boxes.push_back({values[3], values[4], values[5], values[6]});
  }
  return set;
}

TinyNet<float> load_net(const RunConfig& cfg, const std::string& ckpt_path) {
  TinyNet<float> net(cfg.model);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  checkpoint_into(ckpt, net.params());
  return net;
}

std::vector<uint8_t> active_mask(const RunConfig& cfg, const PriorSet& set) {
  if (!cfg.priors.ignore_boundary_priors) return {};
  return boundary_mask(set);
}

int cmd_priors(const CommonOpts& opts, const std::string& out_path,
               bool filtered) {
  const RunConfig cfg = resolve_config(opts);
  PriorSet set = config_priors(cfg);
  if (filtered || cfg.priors.ignore_boundary_priors)
    set = boundary_filter(set).priors;
  if (out_path.empty()) {
    dump_priors_csv(std::cout, set);
  } else {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("priors: cannot open " + out_path);
    dump_priors_csv(f, set);
  }
  return 0;
}

int cmd_match(const CommonOpts& opts, const std::string& annotation_path,
              const std::string& priors_path, const std::string& out_path) {
  const RunConfig cfg = resolve_config(opts);
  const PriorSet set = priors_path.empty() ? config_priors(cfg)
                                           : read_priors_csv(priors_path);
  const auto gts = load_annotations(annotation_path);
  const MatchAssignment m = match(set, gts, cfg.train.match_threshold);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("match: cannot open " + out_path);
    out = &file;
  }
  *out << "prior_index,status,gt_index,label,iou\n";
  out->precision(17);
  for (size_t i = 0; i < m.size(); ++i)
    *out << i << "," << (m.positive(i) ? "pos" : "neg") << "," << m.gt_index[i]
         << "," << m.label[i] << "," << m.overlap[i] << "\n";
  std::cerr << "positives: " << m.num_pos << " / " << m.size() << "\n";
  return 0;
}

int cmd_gradcheck(const CommonOpts& opts, int instances) {
  const RunConfig cfg = resolve_config(opts);
  const GradCheckReport report = run_gradcheck(cfg.seed, instances);
  std::printf("loss-level max rel err: %.3e\n", report.max_rel_err_loss);
  std::printf("net-level  max rel err: %.3e\n", report.max_rel_err_net);
  if (!report.ok()) {
    std::fprintf(stderr, "gradcheck failed (tolerance 1e-3)\n");
    return 1;
  }
  return 0;
}

int cmd_synth(const CommonOpts& opts, const std::string& out_dir, int count) {
  const RunConfig cfg = resolve_config(opts);
  const int n = count > 0 ? count : cfg.synth_count;
  const auto samples = synth_dataset(cfg.seed, n, cfg.synth);
  const std::string manifest = write_dataset(out_dir, samples);
  std::cout << "wrote " << samples.size() << " samples, manifest " << manifest
            << "\n";
  return 0;
}

int cmd_augment(const CommonOpts& opts, const std::string& manifest,
                const std::string& out_dir, int count) {
  const RunConfig cfg = resolve_config(opts);
  const auto dataset = load_dataset(manifest);
  if (dataset.empty()) throw std::runtime_error("augment: empty dataset");
  std::vector<ImageSample> out;
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(cfg.seed, uint64_t(k % dataset.size()),
                        uint64_t(k / dataset.size())));
    out.push_back(
        augment_pipeline(dataset[size_t(k) % dataset.size()], cfg.augment, rng));
  }
  const std::string out_manifest = write_dataset(out_dir, out);
  std::cout << "wrote " << out.size() << " augmented samples, manifest "
            << out_manifest << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& manifest,
              const std::string& ckpt_path, const std::string& trace_path,
              const std::string& eval_manifest) {
  const RunConfig cfg = resolve_config(opts);
  const auto dataset = load_dataset(manifest);
  const PriorSet priors = config_priors(cfg);
  const auto mask = active_mask(cfg, priors);

  TinyNet<float> net(cfg.model);
  Rng init_rng(derive_seed(cfg.seed, 0x1217, 0));
  net.init_xavier(init_rng);

  const TrainResult result =
      train(net, dataset, priors, cfg.train, cfg.augment, mask);

  save_checkpoint(checkpoint_from(net.params(), result.steps, cfg.seed),
                  ckpt_path);
  std::cout << "checkpoint written to " << ckpt_path << "\n";

  if (!trace_path.empty()) {
    std::ofstream f(trace_path);
    if (!f) throw std::runtime_error("train: cannot open " + trace_path);
    f << "iteration,loss\n";
    f.precision(17);
    for (size_t k = 0; k < result.loss_trace.size(); ++k)
      f << k << "," << result.loss_trace[k] << "\n";
  }

  if (!eval_manifest.empty()) {
    const auto eval_ds = load_dataset(eval_manifest);
    const EvalSummary summary = evaluate_detector(
        net, eval_ds, priors, cfg.inference, cfg.eval, mask);
    for (size_t c = 0; c < summary.per_class_ap.size(); ++c)
      std::printf("class %zu (%s): AP %.4f\n", c + 1,
                  synth_class_name(int(c) + 1), summary.per_class_ap[c]);
    std::printf("mAP: %.4f\n", summary.map);
  }
  return 0;
}

int cmd_detect(const CommonOpts& opts, const std::string& ckpt_path,
               const std::string& image_path, const std::string& manifest,
               const std::string& out_path, const std::string& overlay_path) {
  const RunConfig cfg = resolve_config(opts);
  const TinyNet<float> net = load_net(cfg, ckpt_path);
  const PriorSet priors = config_priors(cfg);
  const auto mask = active_mask(cfg, priors);
  const std::vector<uint8_t>& mask_ref = mask;

  auto detect_one = [&](const Image& img) {
    const Image fitted =
        img.height == cfg.model.input_size && img.width == cfg.model.input_size
            ? img
            : resize_bilinear(img, cfg.model.input_size, cfg.model.input_size);
    const Predictions<float> pred = net.forward(fitted);
    return detect(pred, priors, cfg.inference, {}, mask_ref);
  };

  if (!image_path.empty()) {
    const Image img = read_image(image_path);
    const auto dets = detect_one(img);
    if (out_path.empty()) {
      std::cout.precision(17);
      for (const Detection& d : dets)
        std::cout << d.label << " " << d.score << " " << d.box.xmin << " "
                  << d.box.ymin << " " << d.box.xmax << " " << d.box.ymax
                  << "\n";
    } else {
      save_detections(out_path, dets);
    }
    if (!overlay_path.empty()) {
      Image overlay = img;
      const float color[1] = {1.0f};
      for (const Detection& d : dets)
        draw_box(overlay, d.box, std::span<const float>(color, 1));
      write_image(overlay, overlay_path);
    }
    return 0;
  }

  if (manifest.empty())
    throw std::runtime_error("detect: need --image or --dataset");
  if (out_path.empty())
    throw std::runtime_error("detect: --dataset mode needs --out directory");
  fs::create_directories(out_path);
  const auto entries = load_manifest(manifest);
  for (const ManifestEntry& entry : entries) {
    const auto dets = detect_one(read_image(entry.image_path));
    save_detections(
        (fs::path(out_path) / (stem_of(entry.image_path) + ".txt")).string(),
        dets);
  }
  std::cout << "wrote detections for " << entries.size() << " images to "
            << out_path << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& manifest,
             const std::string& det_dir, const std::string& csv_path) {
  const RunConfig cfg = resolve_config(opts);
  const auto entries = load_manifest(manifest);

  std::vector<std::vector<GtAnnotation>> gts(entries.size());
  std::vector<DetRecord> records;
  for (size_t id = 0; id < entries.size(); ++id) {
    for (const GroundTruth& gt : load_annotations(entries[id].annotation_path))
      gts[id].push_back({gt.box, gt.label, false});
    const fs::path det_file =
        fs::path(det_dir) / (stem_of(entries[id].image_path) + ".txt");
    if (!fs::exists(det_file)) continue;  // image without detections
    for (const Detection& d : load_detections(det_file.string()))
      records.push_back({int(id), d.label, d.score, d.box});
  }

  std::vector<double> aps;
  for (int cls = 1; cls <= cfg.model.num_classes; ++cls)
    aps.push_back(average_precision(records, gts, cls, cfg.eval).ap);
  const double map = mean_ap(aps);

  for (size_t c = 0; c < aps.size(); ++c)
    std::printf("class %zu (%s): AP %.4f\n", c + 1,
                synth_class_name(int(c) + 1), aps[c]);
  std::printf("mAP: %.4f\n", map);

  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("eval: cannot open " + csv_path);
    f << "class,ap\n";
    f.precision(17);
    for (size_t c = 0; c < aps.size(); ++c) f << c + 1 << "," << aps[c] << "\n";
    f << "mAP," << map << "\n";
  }
  return 0;
}

int cmd_bench(const CommonOpts& opts, int repeat) {
  const RunConfig cfg = resolve_config(opts);
  const PriorSet priors = config_priors(cfg);
  Rng rng(derive_seed(cfg.seed, 0xBE4C, 0));

  Predictions<double> pred;
  pred.num_priors = priors.size();
  pred.num_classes = cfg.model.num_classes;
  pred.conf.resize(pred.num_priors * size_t(pred.logit_cols()));
  pred.loc.resize(pred.num_priors * 4);
  for (double& v : pred.conf) v = rng.uniform(-3.0, 3.0);
  for (double& v : pred.loc) v = rng.uniform(-0.5, 0.5);

  size_t total_dets = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeat; ++r)
    total_dets += detect(pred, priors, cfg.inference).size();
  const auto stop = std::chrono::steady_clock::now();
  const double seconds =
      std::chrono::duration<double>(stop - start).count();

  std::printf("priors: %zu, repeats: %d, detections: %zu\n", priors.size(),
              repeat, total_dets);
  std::printf("elapsed: %.3f s, boxes/second: %.0f\n", seconds,
              seconds > 0 ? priors.size() * double(repeat) / seconds : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-shot multibox detector toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_path, manifest, annotation_path, priors_path, ckpt_path,
      image_path, trace_path, eval_manifest, det_dir, csv_path, overlay_path;
  int synth_count = 0, augment_count = 16, instances = 20, repeat = 10;
  bool filtered = false;

  CLI::App* priors_cmd =
      app.add_subcommand("priors", "dump default boxes as CSV");
  add_common(priors_cmd, opts);
  priors_cmd->add_option("-o,--out", out_path, "output CSV path");
  priors_cmd->add_flag("--boundary-filter", filtered,
                       "keep only boxes fully inside the image");

  CLI::App* match_cmd =
      app.add_subcommand("match", "assign ground truths to default boxes");
  add_common(match_cmd, opts);
  match_cmd->add_option("-a,--annotations", annotation_path,
                        "annotation sidecar file")
      ->required();
  match_cmd->add_option("-p,--priors", priors_path,
                        "priors CSV (from the priors subcommand)");
  match_cmd->add_option("-o,--out", out_path, "output CSV path");

  CLI::App* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "finite-difference audit of the analytic gradients");
  add_common(gradcheck_cmd, opts);
  gradcheck_cmd->add_option("--instances", instances,
                            "randomized loss instances to probe");

  CLI::App* synth_cmd =
      app.add_subcommand("synth", "materialize the synthetic dataset");
  add_common(synth_cmd, opts);
  synth_cmd->add_option("-o,--out", out_path, "output directory")->required();
  synth_cmd->add_option("-n,--count", synth_count, "number of images");

  CLI::App* augment_cmd = app.add_subcommand(
      "augment", "write augmented samples for visual inspection");
  add_common(augment_cmd, opts);
  augment_cmd->add_option("-d,--dataset", manifest, "dataset manifest")
      ->required();
  augment_cmd->add_option("-o,--out", out_path, "output directory")
      ->required();
  augment_cmd->add_option("-n,--count", augment_count,
                          "number of samples");

  CLI::App* train_cmd = app.add_subcommand("train", "train the toy detector");
  add_common(train_cmd, opts);
  train_cmd->add_option("-d,--dataset", manifest, "training manifest")
      ->required();
  train_cmd->add_option("-o,--out", ckpt_path, "checkpoint output path")
      ->required();
  train_cmd->add_option("--log", trace_path, "loss trace CSV path");
  train_cmd->add_option("--eval-dataset", eval_manifest,
                        "held-out manifest scored after training");

  CLI::App* detect_cmd =
      app.add_subcommand("detect", "run inference on images");
  add_common(detect_cmd, opts);
  detect_cmd->add_option("-k,--checkpoint", ckpt_path, "model checkpoint")
      ->required();
  detect_cmd->add_option("-i,--image", image_path, "single image input");
  detect_cmd->add_option("-d,--dataset", manifest, "dataset manifest input");
  detect_cmd->add_option("-o,--out", out_path,
                         "detections file (single image) or directory");
  detect_cmd->add_option("--overlay", overlay_path,
                         "write the image with boxes drawn");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score detection files against annotations");
  add_common(eval_cmd, opts);
  eval_cmd->add_option("-d,--dataset", manifest, "dataset manifest")
      ->required();
  eval_cmd->add_option("--detections", det_dir, "directory of detection files")
      ->required();
  eval_cmd->add_option("-o,--out", csv_path, "per-class AP table as CSV");

  CLI::App* bench_cmd =
      app.add_subcommand("bench", "measure decode+NMS throughput");
  add_common(bench_cmd, opts);
  bench_cmd->add_option("-r,--repeat", repeat, "detect invocations to time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (priors_cmd->parsed()) return cmd_priors(opts, out_path, filtered);
    if (match_cmd->parsed())
      return cmd_match(opts, annotation_path, priors_path, out_path);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(opts, instances);
    if (synth_cmd->parsed()) return cmd_synth(opts, out_path, synth_count);
    if (augment_cmd->parsed())
      return cmd_augment(opts, manifest, out_path, augment_count);
    if (train_cmd->parsed())
      return cmd_train(opts, manifest, ckpt_path, trace_path, eval_manifest);
    if (detect_cmd->parsed())
      return cmd_detect(opts, ckpt_path, image_path, manifest, out_path,
                        overlay_path);
    if (eval_cmd->parsed()) return cmd_eval(opts, manifest, det_dir, csv_path);
    if (bench_cmd->parsed()) return cmd_bench(opts, repeat);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
