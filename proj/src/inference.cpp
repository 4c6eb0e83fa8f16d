#include "tinyssd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tinyssd {

std::vector<size_t> nms(std::span<const double> scores,
                        std::span<const BoxCorner> boxes,
                        double iou_threshold) {
  if (scores.size() != boxes.size())
    throw std::invalid_argument("nms: scores/boxes size mismatch");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("nms: non-finite score");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t(0));
  // stable sort keeps the lower index first among equal scores
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  std::vector<size_t> kept;
  std::vector<uint8_t> removed(scores.size(), 0);
  for (size_t oi = 0; oi < order.size(); ++oi) {
    const size_t i = order[oi];
    if (removed[i]) continue;
    kept.push_back(i);
    for (size_t oj = oi + 1; oj < order.size(); ++oj) {
      const size_t j = order[oj];
      if (removed[j]) continue;
      if (iou(boxes[i], boxes[j]) > iou_threshold) removed[j] = 1;
    }
  }
  return kept;
}

namespace detail {

std::vector<Detection> detect_rows(std::span<const double> conf,
                                   std::span<const double> loc,
                                   int num_classes, const PriorSet& priors,
                                   const InferenceConfig& cfg,
                                   const OffsetScaling& scaling,
                                   std::span<const uint8_t> prior_mask) {
  const size_t num_priors = priors.size();
  const int cols = num_classes + 1;
  if (conf.size() != num_priors * size_t(cols) || loc.size() != num_priors * 4)
    throw std::invalid_argument("detect: inconsistent tensor sizes");
  if (!prior_mask.empty() && prior_mask.size() != num_priors)
    throw std::invalid_argument("detect: prior mask size mismatch");

  // per-prior class probabilities
  std::vector<double> prob(conf.size());
  for (size_t i = 0; i < num_priors; ++i) {
    const double* row = conf.data() + i * cols;
    double mx = row[0];
    for (int k = 1; k < cols; ++k) mx = std::max(mx, row[k]);
    double sum = 0.0;
    for (int k = 0; k < cols; ++k) sum += std::exp(row[k] - mx);
    for (int k = 0; k < cols; ++k)
      prob[i * cols + k] = std::exp(row[k] - mx) / sum;
  }

  struct Pooled {
    Detection det;
    size_t prior;
  };
  std::vector<Pooled> pooled;

  std::vector<double> scores;
  std::vector<BoxCorner> boxes;
  std::vector<size_t> prior_of;
  for (int cls = 1; cls <= num_classes; ++cls) {
    scores.clear();
    boxes.clear();
    prior_of.clear();
    for (size_t i = 0; i < num_priors; ++i) {
      if (!prior_mask.empty() && !prior_mask[i]) continue;
      const double s = prob[i * cols + cls];
      if (s < cfg.conf_threshold) continue;
      const OffsetVector t{loc[i * 4 + 0], loc[i * 4 + 1], loc[i * 4 + 2],
                           loc[i * 4 + 3]};
      scores.push_back(s);
      boxes.push_back(
          clip_unit(center_to_corner(decode(t, priors.boxes[i], scaling))));
      prior_of.push_back(i);
    }
    for (size_t k : nms(scores, boxes, cfg.nms_iou))
      pooled.push_back({{cls, scores[k], boxes[k]}, prior_of[k]});
  }

  std::sort(pooled.begin(), pooled.end(), [](const Pooled& a, const Pooled& b) {
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.det.label != b.det.label) return a.det.label < b.det.label;
    return a.prior < b.prior;
  });
  if (cfg.top_k >= 0 && pooled.size() > size_t(cfg.top_k))
    pooled.resize(size_t(cfg.top_k));

  std::vector<Detection> out;
  out.reserve(pooled.size());
  for (const Pooled& p : pooled) out.push_back(p.det);
  return out;
}

}  // namespace detail

}  // namespace tinyssd
