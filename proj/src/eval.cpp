#include "tinyssd/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tinyssd {

PRCurve average_precision(std::span<const DetRecord> dets,
                          const std::vector<std::vector<GtAnnotation>>& gts,
                          int cls, const EvalConfig& cfg) {
  PRCurve curve;

  size_t npos = 0;
  for (const auto& image_gts : gts)
    for (const GtAnnotation& gt : image_gts)
      if (gt.label == cls && !gt.difficult) ++npos;
  if (npos == 0) return curve;  // AP defined as 0

  std::vector<size_t> order;
  for (size_t k = 0; k < dets.size(); ++k)
    if (dets[k].label == cls) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<std::vector<uint8_t>> matched(gts.size());
  for (size_t im = 0; im < gts.size(); ++im)
    matched[im].assign(gts[im].size(), 0);

  size_t tp = 0, fp = 0;
  for (size_t k : order) {
    const DetRecord& det = dets[k];
    if (det.image_id < 0 || size_t(det.image_id) >= gts.size())
      throw std::invalid_argument("average_precision: image id out of range");
    const auto& image_gts = gts[det.image_id];

    double best = 0.0, best_difficult = 0.0;
    int best_j = -1;
    for (size_t j = 0; j < image_gts.size(); ++j) {
      if (image_gts[j].label != cls) continue;
      const double v = iou(det.box, image_gts[j].box);
      if (image_gts[j].difficult) {
        best_difficult = std::max(best_difficult, v);
        continue;
      }
      if (matched[det.image_id][j]) continue;
      if (v > best) {
        best = v;
        best_j = int(j);
      }
    }

    if (best_difficult >= cfg.iou_threshold && best_difficult > best)
      continue;  // ignored: neither TP nor FP
    if (best_j >= 0 && best >= cfg.iou_threshold) {
      matched[det.image_id][best_j] = 1;
      ++tp;
    } else {
      ++fp;
    }
    curve.recall.push_back(double(tp) / double(npos));
    curve.precision.push_back(double(tp) / double(tp + fp));
  }

  if (cfg.interpolation == ApInterpolation::eleven_point) {
    double sum = 0.0;
    for (int step = 0; step <= 10; ++step) {
      const double r = step / 10.0;
      double p = 0.0;
      for (size_t k = 0; k < curve.recall.size(); ++k)
        if (curve.recall[k] >= r) p = std::max(p, curve.precision[k]);
      sum += p;
    }
    curve.ap = sum / 11.0;
  } else {
    // area under the monotone precision envelope
    std::vector<double> env(curve.precision);
    for (size_t k = env.size(); k-- > 1;)
      env[k - 1] = std::max(env[k - 1], env[k]);
    double ap = 0.0, prev_r = 0.0;
    for (size_t k = 0; k < env.size(); ++k) {
      ap += (curve.recall[k] - prev_r) * env[k];
      prev_r = curve.recall[k];
    }
    curve.ap = ap;
  }
  return curve;
}

double mean_ap(std::span<const double> aps) {
  if (aps.empty()) throw std::invalid_argument("mean_ap: no classes");
  return std::accumulate(aps.begin(), aps.end(), 0.0) / double(aps.size());
}

}  // namespace tinyssd
