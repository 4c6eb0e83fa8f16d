#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tinyssd/loss.hpp"
#include "tinyssd/priors.hpp"

namespace tinyssd {

struct Detection {
  int label = 0;  // class index >= 1, never background
  double score = 0.0;
  BoxCorner box;  // clipped to the unit square
};

struct InferenceConfig {
  double conf_threshold = 0.01;
  double nms_iou = 0.45;
  int top_k = 200;
};

// Greedy non-maximum suppression: repeatedly keep the highest-scoring
// remaining box (ties toward the lower index) and drop every remaining box
// whose IoU with it exceeds the threshold. Returns kept indices in
// descending score order.
std::vector<size_t> nms(std::span<const double> scores,
                        std::span<const BoxCorner> boxes,
                        double iou_threshold);

namespace detail {

// Internal detect over double buffers; prior_mask (optional) drops rows.
std::vector<Detection> detect_rows(std::span<const double> conf,
                                   std::span<const double> loc,
                                   int num_classes, const PriorSet& priors,
                                   const InferenceConfig& cfg,
                                   const OffsetScaling& scaling,
                                   std::span<const uint8_t> prior_mask);

}  // namespace detail

// Decode raw outputs into final detections: per-prior softmax, per-class
// score threshold (inclusive), offset decoding against the priors, clipping,
// per-class NMS, then a cross-class sort truncated to top_k.
template <typename T>
std::vector<Detection> detect(const Predictions<T>& pred,
                              const PriorSet& priors,
                              const InferenceConfig& cfg = {},
                              const OffsetScaling& scaling = {},
                              std::span<const uint8_t> prior_mask = {}) {
  if (pred.num_priors != priors.size())
    throw std::invalid_argument("detect: predictions/prior count mismatch");
  std::vector<double> conf(pred.conf.begin(), pred.conf.end());
  std::vector<double> loc(pred.loc.begin(), pred.loc.end());
  return detail::detect_rows(conf, loc, pred.num_classes, priors, cfg,
                             scaling, prior_mask);
}

}  // namespace tinyssd
