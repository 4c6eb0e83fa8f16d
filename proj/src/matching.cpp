#include "tinyssd/matching.hpp"

#include <stdexcept>

namespace tinyssd {

MatchAssignment match(const PriorSet& priors, std::span<const GroundTruth> gts,
                      double threshold, const OffsetScaling& scaling) {
  const size_t num_priors = priors.size();
  if (num_priors == 0) throw std::invalid_argument("match: empty prior set");

  MatchAssignment out;
  out.gt_index.assign(num_priors, -1);
  out.label.assign(num_priors, 0);
  out.target.assign(num_priors, OffsetVector{});
  out.overlap.assign(num_priors, 0.0);

  std::vector<int> live;  // ground truths with positive area
  for (size_t j = 0; j < gts.size(); ++j)
    if (gts[j].box.width() > 0.0 && gts[j].box.height() > 0.0)
      live.push_back(int(j));
  if (live.empty()) return out;

  std::vector<BoxCorner> prior_corner(num_priors);
  for (size_t i = 0; i < num_priors; ++i)
    prior_corner[i] = center_to_corner(priors.boxes[i]);

  // overlap matrix, gt-major
  const size_t num_gts = live.size();
  std::vector<double> ov(num_gts * num_priors);
  for (size_t g = 0; g < num_gts; ++g) {
    const BoxCorner& gt_box = gts[live[g]].box;
    for (size_t i = 0; i < num_priors; ++i)
      ov[g * num_priors + i] = iou(gt_box, prior_corner[i]);
  }

  auto assign = [&](size_t prior, size_t g, double overlap) {
    const GroundTruth& gt = gts[live[g]];
    out.gt_index[prior] = live[g];
    out.label[prior] = gt.label;
    out.target[prior] =
        encode(corner_to_center(gt.box), priors.boxes[prior], scaling);
    out.overlap[prior] = overlap;
  };

  // Phase 1: each gt claims a prior, best available overlap first.
  std::vector<uint8_t> gt_done(num_gts, 0);
  std::vector<uint8_t> claimed(num_priors, 0);
  for (size_t round = 0; round < num_gts; ++round) {
    double best = 0.0;
    size_t best_g = 0, best_i = 0;
    bool found = false;
    for (size_t g = 0; g < num_gts; ++g) {
      if (gt_done[g]) continue;
      const double* row = &ov[g * num_priors];
      for (size_t i = 0; i < num_priors; ++i) {
        if (claimed[i]) continue;
        if (row[i] > best) {
          best = row[i];
          best_g = g;
          best_i = i;
          found = true;
        }
      }
    }
    if (!found) break;  // remaining gts have zero overlap everywhere
    gt_done[best_g] = 1;
    claimed[best_i] = 1;
    assign(best_i, best_g, best);
  }

  // Phase 2: unclaimed priors above threshold join their best gt.
  for (size_t i = 0; i < num_priors; ++i) {
    if (claimed[i]) continue;
    double best = 0.0;
    size_t best_g = 0;
    for (size_t g = 0; g < num_gts; ++g) {
      const double v = ov[g * num_priors + i];
      if (v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best > threshold)
      assign(i, best_g, best);
    else
      out.overlap[i] = best;  // diagnostic only; prior stays negative
  }

  for (size_t i = 0; i < num_priors; ++i)
    if (out.gt_index[i] >= 0) ++out.num_pos;
  return out;
}

}  // namespace tinyssd
