#pragma once

#include <span>
#include <vector>

#include "tinyssd/inference.hpp"

namespace tinyssd {

enum class ApInterpolation { eleven_point, all_points };

struct EvalConfig {
  double iou_threshold = 0.5;
  ApInterpolation interpolation = ApInterpolation::eleven_point;
};

struct GtAnnotation {
  BoxCorner box;
  int label = 1;
  bool difficult = false;  // excluded from scoring when set
};

struct DetRecord {
  int image_id = 0;
  int label = 0;
  double score = 0.0;
  BoxCorner box;
};

struct PRCurve {
  std::vector<double> recall;     // one point per scored detection
  std::vector<double> precision;
  double ap = 0.0;
};

// VOC-style average precision for one class. Detections are ranked by score
// (stable for ties, preserving input order); each is greedily matched to the
// unmatched same-image ground truth of maximal IoU when that IoU reaches the
// threshold. Detections whose best overlap lands on a difficult ground truth
// are ignored. A class with no ground truths scores 0.
PRCurve average_precision(std::span<const DetRecord> dets,
                          const std::vector<std::vector<GtAnnotation>>& gts,
                          int cls, const EvalConfig& cfg = {});

// Unweighted mean over per-class APs. Throws on an empty list.
double mean_ap(std::span<const double> aps);

}  // namespace tinyssd
