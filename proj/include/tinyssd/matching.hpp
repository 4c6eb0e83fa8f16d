#pragma once

#include <span>
#include <vector>

#include "tinyssd/priors.hpp"

namespace tinyssd {

struct GroundTruth {
  BoxCorner box;
  int label = 1;  // class index, 1-based; 0 is reserved for background
};

// Per-prior outcome of ground-truth matching. A prior is positive when it was
// assigned a ground truth (gt_index >= 0); its regression target is the
// encoded offset from the prior to that ground truth.
struct MatchAssignment {
  std::vector<int> gt_index;  // -1 for negatives
  std::vector<int> label;     // 0 for negatives
  std::vector<OffsetVector> target;
  std::vector<double> overlap;  // IoU with the assigned gt, or the best gt
  int num_pos = 0;

  size_t size() const { return gt_index.size(); }
  bool positive(size_t i) const { return gt_index[i] >= 0; }
};

// Two-phase assignment. Phase 1 is bipartite: ground truths claim their
// best-overlap prior one at a time, highest available overlap first, each
// prior claimable once. Phase 2 marks every unclaimed prior positive for its
// best-overlap ground truth when that overlap exceeds `threshold` (strict).
// Ties break toward the lowest ground-truth index, then the lowest prior
// index. Zero-area ground truths are ignored.
MatchAssignment match(const PriorSet& priors, std::span<const GroundTruth> gts,
                      double threshold = 0.5, const OffsetScaling& scaling = {});

}  // namespace tinyssd
