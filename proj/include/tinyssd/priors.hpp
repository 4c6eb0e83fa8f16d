#pragma once

#include <span>
#include <vector>

#include "tinyssd/box.hpp"

namespace tinyssd {

// Tiling recipe for one prediction layer: a square grid of cells, a base
// scale, the following layer's scale (used by the extra geometric-mean box)
// and the aspect ratio menu.
struct LayerSpec {
  int grid_size = 1;
  double scale = 0.2;
  double next_scale = 0.9;
  std::vector<double> aspect_ratios = {1.0};
  bool include_extra = true;

  int boxes_per_cell() const {
    return int(aspect_ratios.size()) + (include_extra ? 1 : 0);
  }
};

// All default boxes of a model, in canonical order: layer-major, then cells
// row-major (row index outer), then the fixed ratio order within a cell.
struct PriorSet {
  std::vector<BoxCenter> boxes;
  std::vector<int> layer_of;
  std::vector<int> cell_row;
  std::vector<int> cell_col;

  size_t size() const { return boxes.size(); }
};

// Evenly spaced scales between s_min and s_max across m layers.
// Throws std::invalid_argument for m < 2 or a degenerate range.
std::vector<double> layer_scales(int m, double s_min, double s_max);

// Default boxes of a single layer. Within a cell the order is: ratio 1, the
// extra sqrt(s_k * s_{k+1}) box (if enabled), then the remaining ratios in
// the order listed. Boxes are not clipped to the unit square.
std::vector<BoxCenter> layer_priors(const LayerSpec& spec);

// Concatenation of layer_priors over all layers, with per-prior provenance.
PriorSet build_priors(std::span<const LayerSpec> specs);

struct BoundaryFilter {
  PriorSet priors;                     // only priors fully inside [0,1]^2
  std::vector<size_t> original_index;  // filtered position -> source index
};

// Drop priors whose corner form crosses the image boundary.
BoundaryFilter boundary_filter(const PriorSet& priors);

// Keep-mask over a prior set: 1 = fully inside the unit square.
std::vector<uint8_t> boundary_mask(const PriorSet& priors);

// Canonical 300-input configuration: grids (38,19,10,5,3,1), 4/6/6/6/4/4
// boxes per cell, first-layer scale pinned to 0.1, remaining layers evenly
// spaced over [0.2, 0.9]. Totals 8732 boxes.
std::vector<LayerSpec> ssd300_layers();

// Canonical 512-input configuration: grids (64,32,16,8,4,2,1), 4/6/6/6/6/4/4
// boxes per cell, first-layer scale 0.07, remaining layers over [0.15, 0.9].
// Totals 24564 boxes.
std::vector<LayerSpec> ssd512_layers();

// 4-box tiling ({1, extra, 2, 1/2}) across the given grids with evenly
// spaced scales; used by the toy detector. If first_scale_override > 0 it
// replaces the spacing rule for the first layer (the remaining layers are
// spaced over [s_min, s_max] as usual).
std::vector<LayerSpec> toy_layers(std::span<const int> grids,
                                  double s_min = 0.2, double s_max = 0.9,
                                  double first_scale_override = -1.0);

}  // namespace tinyssd
