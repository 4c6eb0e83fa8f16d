#include "tinyssd/priors.hpp"

#include <cmath>
#include <stdexcept>

namespace tinyssd {

std::vector<double> layer_scales(int m, double s_min, double s_max) {
  if (m < 2) throw std::invalid_argument("layer_scales: need m >= 2");
  if (!(s_min > 0.0 && s_min < s_max && s_max <= 1.0))
    throw std::invalid_argument("layer_scales: need 0 < s_min < s_max <= 1");
  std::vector<double> scales(m);
  for (int k = 0; k < m; ++k)
    scales[k] = s_min + (s_max - s_min) * k / (m - 1);
  return scales;
}

std::vector<BoxCenter> layer_priors(const LayerSpec& spec) {
  if (spec.grid_size < 1)
    throw std::invalid_argument("layer_priors: grid_size must be >= 1");
  std::vector<BoxCenter> out;
  out.reserve(size_t(spec.grid_size) * spec.grid_size * spec.boxes_per_cell());
  const double f = spec.grid_size;
  const double extra = std::sqrt(spec.scale * spec.next_scale);
  for (int i = 0; i < spec.grid_size; ++i) {
    for (int j = 0; j < spec.grid_size; ++j) {
      const double cx = (j + 0.5) / f;
      const double cy = (i + 0.5) / f;
      bool extra_emitted = false;
      for (double ar : spec.aspect_ratios) {
        const double r = std::sqrt(ar);
        out.push_back({cx, cy, spec.scale * r, spec.scale / r});
        if (spec.include_extra && !extra_emitted && ar == 1.0) {
          out.push_back({cx, cy, extra, extra});
          extra_emitted = true;
        }
      }
      if (spec.include_extra && !extra_emitted)
        out.push_back({cx, cy, extra, extra});
    }
  }
  return out;
}

PriorSet build_priors(std::span<const LayerSpec> specs) {
  if (specs.empty())
    throw std::invalid_argument("build_priors: empty spec list");
  PriorSet set;
  for (size_t layer = 0; layer < specs.size(); ++layer) {
    const LayerSpec& spec = specs[layer];
    const auto boxes = layer_priors(spec);
    const int per_cell = spec.boxes_per_cell();
    for (size_t n = 0; n < boxes.size(); ++n) {
      const int cell = int(n) / per_cell;
      set.boxes.push_back(boxes[n]);
      set.layer_of.push_back(int(layer));
      set.cell_row.push_back(cell / spec.grid_size);
      set.cell_col.push_back(cell % spec.grid_size);
    }
  }
  return set;
}

std::vector<uint8_t> boundary_mask(const PriorSet& priors) {
  std::vector<uint8_t> keep(priors.size());
  for (size_t i = 0; i < priors.size(); ++i) {
    const BoxCenter& b = priors.boxes[i];
    keep[i] = b.cx - 0.5 * b.w >= 0.0 && b.cy - 0.5 * b.h >= 0.0 &&
              b.cx + 0.5 * b.w <= 1.0 && b.cy + 0.5 * b.h <= 1.0;
  }
  return keep;
}

BoundaryFilter boundary_filter(const PriorSet& priors) {
  const auto keep = boundary_mask(priors);
  BoundaryFilter out;
  for (size_t i = 0; i < priors.size(); ++i) {
    if (!keep[i]) continue;
    out.priors.boxes.push_back(priors.boxes[i]);
    out.priors.layer_of.push_back(priors.layer_of[i]);
    out.priors.cell_row.push_back(priors.cell_row[i]);
    out.priors.cell_col.push_back(priors.cell_col[i]);
    out.original_index.push_back(i);
  }
  return out;
}

namespace {

// Within-cell ratio order is frozen as (1, extra, 2, 1/2, 3, 1/3); the list
// below is in emission order given that the extra box follows ratio 1.
std::vector<double> ratio_menu(bool wide) {
  if (wide) return {1.0, 2.0, 0.5, 3.0, 1.0 / 3.0};
  return {1.0, 2.0, 0.5};
}

std::vector<LayerSpec> chain(const std::vector<int>& grids,
                             const std::vector<double>& scales,
                             const std::vector<bool>& wide) {
  std::vector<LayerSpec> specs(grids.size());
  for (size_t k = 0; k < grids.size(); ++k) {
    specs[k].grid_size = grids[k];
    specs[k].scale = scales[k];
    specs[k].next_scale = k + 1 < scales.size() ? scales[k + 1] : 1.0;
    specs[k].aspect_ratios = ratio_menu(wide[k]);
    specs[k].include_extra = true;
  }
  return specs;
}

}  // namespace

std::vector<LayerSpec> ssd300_layers() {
  const std::vector<int> grids = {38, 19, 10, 5, 3, 1};
  std::vector<double> scales = {0.1};
  for (double s : layer_scales(5, 0.2, 0.9)) scales.push_back(s);
  return chain(grids, scales, {false, true, true, true, false, false});
}

std::vector<LayerSpec> ssd512_layers() {
  const std::vector<int> grids = {64, 32, 16, 8, 4, 2, 1};
  std::vector<double> scales = {0.07};
  for (double s : layer_scales(6, 0.15, 0.9)) scales.push_back(s);
  return chain(grids, scales, {false, true, true, true, true, false, false});
}

std::vector<LayerSpec> toy_layers(std::span<const int> grids, double s_min,
                                  double s_max, double first_scale_override) {
  if (grids.empty()) throw std::invalid_argument("toy_layers: no grids");
  const int m = int(grids.size());
  std::vector<double> scales;
  if (first_scale_override > 0.0) {
    scales.push_back(first_scale_override);
    if (m > 1) {
      if (m == 2)
        scales.push_back(s_min);
      else
        for (double s : layer_scales(m - 1, s_min, s_max)) scales.push_back(s);
    }
  } else {
    if (m == 1)
      scales.push_back(s_min);
    else
      scales = layer_scales(m, s_min, s_max);
  }
  return chain(std::vector<int>(grids.begin(), grids.end()), scales,
               std::vector<bool>(grids.size(), false));
}

}  // namespace tinyssd
