// Acceptance suite: runs every contract criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits nonzero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "tinyssd/augment.hpp"
#include "tinyssd/config.hpp"
#include "tinyssd/eval.hpp"
#include "tinyssd/gradcheck.hpp"
#include "tinyssd/inference.hpp"
#include "tinyssd/synth.hpp"
#include "tinyssd/train.hpp"

using namespace tinyssd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void criterion(int num, const std::string& name,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("%s  %2d  %s%s%s\n", ok ? "PASS" : "FAIL", num, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// ---- 1: box-count goldens ------------------------------------------------

bool box_count_goldens(std::string& detail) {
  const auto start = Clock::now();
  const size_t n300 = build_priors(ssd300_layers()).size();
  const size_t n512 = build_priors(ssd512_layers()).size();
  const double elapsed = seconds_since(start);
  std::ostringstream ss;
  ss << "ssd300=" << n300 << " ssd512=" << n512 << " in " << elapsed << "s";
  detail = ss.str();
  return n300 == 8732 && n512 == 24564 && elapsed < 1.0;
}

// ---- 2: evenly spaced scales ----------------------------------------------

bool scale_rule(std::string& detail) {
  const auto scales = layer_scales(6, 0.2, 0.9);
  const double expected[6] = {0.2, 0.34, 0.48, 0.62, 0.76, 0.9};
  double worst = 0.0;
  for (int k = 0; k < 6; ++k)
    worst = std::max(worst, std::abs(scales[k] - expected[k]));
  detail = "max deviation " + std::to_string(worst);
  return worst < 1e-9;
}

// ---- 3: encode/decode roundtrip --------------------------------------------

bool roundtrip(std::string& detail) {
  Rng rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    auto random_center = [&]() {
      return BoxCenter{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                       rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)};
    };
    const BoxCenter g = random_center(), d = random_center();
    const BoxCenter back = decode(encode(g, d), d);
    worst = std::max({worst, std::abs(back.cx - g.cx),
                      std::abs(back.cy - g.cy), std::abs(back.w - g.w),
                      std::abs(back.h - g.h)});
  }
  detail = "max coordinate error " + std::to_string(worst);
  return worst < 1e-6;
}

// ---- 4: loss equals the straight-line oracle --------------------------------

bool loss_oracle(std::string& detail) {
  double worst = 0.0;
  int nontrivial = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    Rng rng(derive_seed(4004, uint64_t(inst)));
    const size_t num_priors = 1 + size_t(rng.uniform_int(32));
    const int classes = 1 + rng.uniform_int(4);
    Predictions<double> pred;
    pred.num_priors = num_priors;
    pred.num_classes = classes;
    pred.conf.resize(num_priors * size_t(classes + 1));
    pred.loc.resize(num_priors * 4);
    for (double& v : pred.conf) v = rng.uniform(-4.0, 4.0);
    for (double& v : pred.loc) v = rng.uniform(-4.0, 4.0);

    MatchAssignment m;
    m.gt_index.assign(num_priors, -1);
    m.label.assign(num_priors, 0);
    m.target.assign(num_priors, OffsetVector{});
    m.overlap.assign(num_priors, 0.0);
    std::vector<std::array<double, 4>> targets(num_priors, {0, 0, 0, 0});
    for (size_t i = 0; i < num_priors; ++i) {
      if (rng.uniform() >= 0.3) continue;
      m.gt_index[i] = int(i);
      m.label[i] = 1 + rng.uniform_int(classes);
      m.target[i] = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                     rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      targets[i] = {m.target[i].tcx, m.target[i].tcy, m.target[i].tw,
                    m.target[i].th};
      ++m.num_pos;
    }

    const LossReport<double> report = multibox_loss(pred, m);
    const oracle::MultiBoxResult expected = oracle::multibox(
        num_priors, classes, pred.conf, pred.loc, m.label, targets, 1.0, 3.0);
    worst = std::max({worst, std::abs(report.total - expected.total),
                      std::abs(report.conf_loss - expected.conf),
                      std::abs(report.loc_loss - expected.loc)});
    if (m.num_pos > 0) ++nontrivial;
  }
  std::ostringstream ss;
  ss << "max |impl - oracle| " << worst << " over 1000 instances ("
     << nontrivial << " with positives)";
  detail = ss.str();
  return worst < 1e-10 && nontrivial > 500;
}

// ---- 5: finite-difference gradient checks ----------------------------------

bool gradient_checks(std::string& detail) {
  const auto start = Clock::now();
  const GradCheckReport report = run_gradcheck(/*seed=*/1, /*instances=*/20);
  const double elapsed = seconds_since(start);
  std::ostringstream ss;
  ss << "loss " << report.max_rel_err_loss << ", net "
     << report.max_rel_err_net << ", " << elapsed << "s";
  detail = ss.str();
  return report.ok(1e-3) && elapsed < 120.0;
}

// ---- 6: matching properties -------------------------------------------------

bool matching_properties(std::string& detail) {
  std::vector<int> grids{4};
  const PriorSet priors = build_priors(toy_layers(grids));
  for (int inst = 0; inst < 1000; ++inst) {
    Rng rng(derive_seed(6006, uint64_t(inst)));
    std::vector<GroundTruth> gts;
    const int n = 1 + rng.uniform_int(4);
    for (int j = 0; j < n; ++j) {
      const double w = rng.uniform(0.05, 0.5);
      const double h = rng.uniform(0.05, 0.5);
      const double x0 = rng.uniform(0.0, 1.0 - w);
      const double y0 = rng.uniform(0.0, 1.0 - h);
      gts.push_back({{x0, y0, x0 + w, y0 + h}, 1 + rng.uniform_int(3)});
    }
    const MatchAssignment m = match(priors, gts);

    // each gt with positive best overlap owns at least one positive prior
    std::vector<char> has_pos(gts.size(), 0);
    for (size_t i = 0; i < m.size(); ++i)
      if (m.positive(i)) has_pos[size_t(m.gt_index[i])] = 1;
    for (size_t j = 0; j < gts.size(); ++j) {
      double best = 0.0;
      for (size_t i = 0; i < priors.size(); ++i)
        best = std::max(best,
                        iou(gts[j].box, center_to_corner(priors.boxes[i])));
      if (best > 0.0 && !has_pos[j]) {
        detail = "gt without positive prior at instance " +
                 std::to_string(inst);
        return false;
      }
    }

    // hard-mining budget is exact
    if (m.num_pos > 0) {
      Predictions<double> pred;
      pred.num_priors = priors.size();
      pred.num_classes = 3;
      pred.conf.resize(priors.size() * 4);
      pred.loc.assign(priors.size() * 4, 0.0);
      for (double& v : pred.conf) v = rng.uniform(-2.0, 2.0);
      const auto selected = hard_negative_select(pred, m, 3.0);
      const size_t negatives = priors.size() - size_t(m.num_pos);
      const size_t budget = std::min(size_t(3 * m.num_pos), negatives);
      if (selected.size() != budget ||
          selected.size() > size_t(3 * m.num_pos)) {
        detail = "mining budget violated at instance " + std::to_string(inst);
        return false;
      }
      for (size_t i : selected)
        if (m.positive(i)) {
          detail = "positive row selected as negative";
          return false;
        }
    }
  }
  detail = "1000 instances clean";
  return true;
}

// ---- 7: NMS against the quadratic oracle ------------------------------------

bool nms_oracle(std::string& detail) {
  for (int inst = 0; inst < 1000; ++inst) {
    Rng rng(derive_seed(7007, uint64_t(inst)));
    const int n = 1 + rng.uniform_int(200);
    std::vector<BoxCorner> boxes(n);
    std::vector<std::array<double, 4>> raw(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
      const double x0 = rng.uniform(0.0, 0.7);
      const double y0 = rng.uniform(0.0, 0.7);
      const double w = rng.uniform(0.02, 0.3);
      const double h = rng.uniform(0.02, 0.3);
      boxes[i] = {x0, y0, x0 + w, y0 + h};
      raw[i] = {x0, y0, x0 + w, y0 + h};
      scores[i] = rng.uniform();
    }
    const auto kept = nms(scores, boxes, 0.45);
    const auto expected = oracle::nms(scores, raw, 0.45);
    if (kept != expected) {
      detail = "kept-set mismatch at instance " + std::to_string(inst);
      return false;
    }
  }
  detail = "1000 instances, exact kept-set equality";
  return true;
}

// ---- 8: augmentation constraints ---------------------------------------------

bool augmentation_constraints(std::string& detail) {
  const SynthConfig synth_cfg;
  const AugmentConfig cfg;
  size_t constrained = 0;
  uint64_t k = 0;
  while (constrained < 10000) {
    const ImageSample s = synth_image(8080, k % 500, synth_cfg);
    Rng rng(derive_seed(8088, k));
    const PatchResult res = sample_patch(s, cfg, rng);
    ++k;
    if (res.option == 0 || res.option > 5 || res.fallback) continue;
    ++constrained;

    const double area = res.patch.area();
    const double aspect = res.patch.width() / res.patch.height();
    if (area < cfg.patch_area_min || area > cfg.patch_area_max ||
        aspect < cfg.patch_aspect_min || aspect > cfg.patch_aspect_max) {
      detail = "patch geometry out of range at draw " + std::to_string(k);
      return false;
    }
    for (const GroundTruth& gt : s.gts)
      if (iou(res.patch, gt.box) < res.min_jaccard) {
        detail = "jaccard bound violated at draw " + std::to_string(k);
        return false;
      }
    for (const GroundTruth& gt : res.sample.gts)
      if (gt.box.xmin < 0.0 || gt.box.ymin < 0.0 || gt.box.xmax > 1.0 ||
          gt.box.ymax > 1.0 || gt.box.width() <= 0.0 ||
          gt.box.height() <= 0.0) {
        detail = "invalid surviving box at draw " + std::to_string(k);
        return false;
      }
    // center rule: every survivor's source center lies inside the patch
    for (const GroundTruth& out_gt : res.sample.gts) {
      bool explained = false;
      for (const GroundTruth& in_gt : s.gts) {
        const double cx = 0.5 * (in_gt.box.xmin + in_gt.box.xmax);
        const double cy = 0.5 * (in_gt.box.ymin + in_gt.box.ymax);
        if (in_gt.label == out_gt.label && cx >= res.patch.xmin &&
            cx <= res.patch.xmax && cy >= res.patch.ymin &&
            cy <= res.patch.ymax)
          explained = true;
      }
      if (!explained) {
        detail = "survivor without an in-patch center at draw " +
                 std::to_string(k);
        return false;
      }
    }

    // bit-exact reproducibility of the same draw
    Rng rng2(derive_seed(8088, k - 1));
    const PatchResult res2 = sample_patch(s, cfg, rng2);
    if (res2.sample.image.data != res.sample.image.data ||
        res2.sample.gts.size() != res.sample.gts.size()) {
      detail = "draw not reproducible at " + std::to_string(k);
      return false;
    }
  }
  std::ostringstream ss;
  ss << "10000 constrained samples ok (" << k << " draws)";
  detail = ss.str();
  return true;
}

// ---- 9: hand-traced AP fixture -------------------------------------------------

bool ap_fixture(std::string& detail) {
  const std::vector<DetRecord> dets{
      {0, 1, 0.95, {0.10, 0.10, 0.30, 0.30}},
      {0, 1, 0.90, {0.12, 0.10, 0.32, 0.30}},
      {1, 1, 0.85, {0.20, 0.20, 0.50, 0.48}},
      {0, 1, 0.80, {0.55, 0.55, 0.85, 0.85}},
      {1, 1, 0.60, {0.60, 0.60, 0.80, 0.80}},
  };
  const std::vector<std::vector<GtAnnotation>> gts{
      {{{0.10, 0.10, 0.30, 0.30}, 1, false},
       {{0.60, 0.60, 0.90, 0.90}, 1, false}},
      {{{0.20, 0.20, 0.50, 0.50}, 1, false}},
  };
  EvalConfig eleven;
  eleven.interpolation = ApInterpolation::eleven_point;
  EvalConfig all;
  all.interpolation = ApInterpolation::all_points;
  const double ap11 = average_precision(dets, gts, 1, eleven).ap;
  const double ap_all = average_precision(dets, gts, 1, all).ap;
  std::ostringstream ss;
  ss << "eleven_point " << ap11 << " (want 37/44), all_points " << ap_all
     << " (want 5/6)";
  detail = ss.str();
  return std::abs(ap11 - 37.0 / 44.0) < 1e-12 &&
         std::abs(ap_all - 5.0 / 6.0) < 1e-12;
}

// ---- 10 & 11: end-to-end training -----------------------------------------------

bool desk_scale_training(std::string& detail) {
  const auto start = Clock::now();
  RunConfig cfg;  // stock configuration
  cfg.train.iterations = 5000;

  const auto train_ds = synth_dataset(1001, 2000, cfg.synth);
  const auto holdout = synth_dataset(2002, 500, cfg.synth);
  const PriorSet priors = config_priors(cfg);

  TinyNet<float> net(cfg.model);
  Rng init_rng(derive_seed(cfg.seed, 0x1217, 0));
  net.init_xavier(init_rng);

  const TrainResult result =
      train(net, train_ds, priors, cfg.train, cfg.augment);

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const std::vector<double> head(result.loss_trace.begin(),
                                 result.loss_trace.begin() + 50);
  const std::vector<double> tail(result.loss_trace.begin() + 450,
                                 result.loss_trace.begin() + 500);
  const double early = median(head), late = median(tail);

  const EvalSummary summary =
      evaluate_detector(net, holdout, priors, cfg.inference, cfg.eval);
  const double elapsed = seconds_since(start);
  std::ostringstream ss;
  ss << "mAP@0.5 " << summary.map << " (";
  for (size_t c = 0; c < summary.per_class_ap.size(); ++c)
    ss << (c ? " " : "") << summary.per_class_ap[c];
  ss << "), loss medians " << early << " -> " << late << ", " << elapsed
     << "s";
  detail = ss.str();
  return summary.map >= 0.75 && late < early;
}

bool multihead_ablation(std::string& detail) {
  // reduced protocol, same seed for both arms; only the direction matters
  SynthConfig synth_cfg;
  const auto train_ds = synth_dataset(3003, 600, synth_cfg);
  const auto holdout = synth_dataset(4004, 200, synth_cfg);

  TrainConfig tcfg;
  tcfg.iterations = 800;
  tcfg.batch_accumulation = 8;
  tcfg.seed = 7;
  AugmentConfig aug;

  auto run_arm = [&](const NetSpec& spec, const PriorSet& priors) {
    TinyNet<float> net(spec);
    Rng init_rng(derive_seed(tcfg.seed, 0x1217, 0));
    net.init_xavier(init_rng);
    train(net, train_ds, priors, tcfg, aug);
    return evaluate_detector(net, holdout, priors, InferenceConfig{},
                             EvalConfig{})
        .map;
  };

  NetSpec full;  // heads at grids 8/4/2/1
  std::vector<int> full_grids{8, 4, 2, 1};
  const auto full_layers = toy_layers(full_grids);
  const double full_map = run_arm(full, build_priors(full_layers));

  NetSpec coarse = full;
  coarse.head_stages = {5};       // only the 1x1 head survives
  coarse.boxes_per_cell = {4};
  const std::vector<LayerSpec> coarse_layers{full_layers.back()};
  const double coarse_map = run_arm(coarse, build_priors(coarse_layers));

  std::ostringstream ss;
  ss << "full mAP " << full_map << " vs coarsest-only " << coarse_map;
  detail = ss.str();
  return coarse_map < full_map;
}

}  // namespace

int main() {
  criterion(1, "box-count goldens (8732 / 24564)", box_count_goldens);
  criterion(2, "evenly spaced layer scales", scale_rule);
  criterion(3, "encode/decode roundtrip < 1e-6", roundtrip);
  criterion(4, "multibox loss equals the brute-force oracle", loss_oracle);
  criterion(5, "finite-difference gradient checks", gradient_checks);
  criterion(6, "matching and hard-mining properties", matching_properties);
  criterion(7, "greedy NMS equals the quadratic oracle", nms_oracle);
  criterion(8, "constrained augmentation sampling", augmentation_constraints);
  criterion(9, "hand-traced AP fixture", ap_fixture);
  criterion(10, "desk-scale training reaches mAP@0.5 >= 0.75",
            desk_scale_training);
  criterion(11, "multi-head ablation direction", multihead_ablation);

  if (failures > 0)
    std::printf("%d criterion(s) failed\n", failures);
  else
    std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
