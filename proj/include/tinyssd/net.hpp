#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tinyssd/image.hpp"
#include "tinyssd/loss.hpp"
#include "tinyssd/rng.hpp"
#include "tinyssd/tensor.hpp"

namespace tinyssd {

// Architecture of the toy detector: a stack of (3x3 conv, ReLU, 2x2 stride-2
// max-pool) stages, with prediction heads attached to the stages whose grid
// sizes match the prior layers. Each head is a pair of 3x3 same-padding
// convolutions emitting (c+1)*k confidence channels and 4*k offset channels.
struct NetSpec {
  int input_size = 64;
  int channels = 1;
  std::vector<int> stage_channels = {8, 16, 32, 48, 64, 64};
  std::vector<int> head_stages = {2, 3, 4, 5};  // stage indices with heads
  std::vector<int> boxes_per_cell = {4, 4, 4, 4};
  int num_classes = 3;
  bool l2norm_first_head = true;  // normalize the finest head's features
  double l2norm_init = 20.0;
  // Input preprocessing and trunk bias init. Pixels arrive in [0, 1]; the
  // shift centers them so the first convolution sees a symmetric signal,
  // and a small positive bias keeps trunk ReLUs responsive at the start.
  double input_shift = -0.5;
  double stage_bias_init = 0.1;

  int num_stages() const { return int(stage_channels.size()); }
  int num_heads() const { return int(head_stages.size()); }
  int stage_size(int s) const { return input_size >> (s + 1); }
  int head_grid(int h) const { return stage_size(head_stages[h]); }

  size_t total_priors() const {
    size_t n = 0;
    for (int h = 0; h < num_heads(); ++h)
      n += size_t(head_grid(h)) * head_grid(h) * boxes_per_cell[h];
    return n;
  }

  void validate() const {
    if (input_size < 2 || channels < 1 || num_classes < 1)
      throw std::invalid_argument("NetSpec: bad input dimensions");
    if (stage_channels.empty())
      throw std::invalid_argument("NetSpec: no stages");
    if (input_size % (1 << num_stages()) != 0)
      throw std::invalid_argument(
          "NetSpec: input size not divisible through all stages");
    if (head_stages.size() != boxes_per_cell.size() || head_stages.empty())
      throw std::invalid_argument("NetSpec: head configuration mismatch");
    for (size_t h = 0; h < head_stages.size(); ++h) {
      if (head_stages[h] < 0 || head_stages[h] >= num_stages())
        throw std::invalid_argument("NetSpec: head stage out of range");
      if (h > 0 && head_stages[h] <= head_stages[h - 1])
        throw std::invalid_argument("NetSpec: head stages must increase");
      if (boxes_per_cell[h] < 1)
        throw std::invalid_argument("NetSpec: boxes_per_cell must be >= 1");
    }
  }
};

template <typename T>
struct NetParams {
  std::vector<Tensor<T>> stage_w, stage_b;  // conv weights [Co,3,3,Ci], bias [Co]
  std::vector<Tensor<T>> conf_w, conf_b;
  std::vector<Tensor<T>> loc_w, loc_b;
  Tensor<T> gamma;  // l2norm scales; empty when disabled

  void zero() {
    for (auto* group : {&stage_w, &stage_b, &conf_w, &conf_b, &loc_w, &loc_b})
      for (Tensor<T>& t : *group) t.zero();
    gamma.zero();
  }
};

// Fixed name/order mapping used by the optimizer and the checkpoint format.
template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> named_tensors(
    NetParams<T>& p) {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (size_t s = 0; s < p.stage_w.size(); ++s) {
    out.emplace_back("stage" + std::to_string(s) + ".weight", &p.stage_w[s]);
    out.emplace_back("stage" + std::to_string(s) + ".bias", &p.stage_b[s]);
  }
  for (size_t h = 0; h < p.conf_w.size(); ++h) {
    out.emplace_back("head" + std::to_string(h) + ".conf.weight", &p.conf_w[h]);
    out.emplace_back("head" + std::to_string(h) + ".conf.bias", &p.conf_b[h]);
    out.emplace_back("head" + std::to_string(h) + ".loc.weight", &p.loc_w[h]);
    out.emplace_back("head" + std::to_string(h) + ".loc.bias", &p.loc_b[h]);
  }
  if (!p.gamma.empty()) out.emplace_back("l2norm.gamma", &p.gamma);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> named_tensors(
    const NetParams<T>& p) {
  auto mut = named_tensors(const_cast<NetParams<T>&>(p));
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(name, t);
  return out;
}

namespace detail {

// 3x3 same-padding convolution over an HWC tensor.
template <typename T>
void conv3x3_forward(const Tensor<T>& in, int H, int W, int Ci,
                     const Tensor<T>& w, const Tensor<T>& b, int Co,
                     Tensor<T>& out) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      T* orow = &out.data[(size_t(y) * W + x) * Co];
      for (int co = 0; co < Co; ++co) {
        T acc = b.data[co];
        const T* wk = &w.data[size_t(co) * 9 * Ci];
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            const T* irow = &in.data[(size_t(yy) * W + xx) * Ci];
            const T* wrow = wk + ((dy + 1) * 3 + (dx + 1)) * Ci;
            for (int ci = 0; ci < Ci; ++ci) acc += irow[ci] * wrow[ci];
          }
        }
        orow[co] = acc;
      }
    }
  }
}

// Channel-wise L2 feature normalization with a learned per-channel scale:
// each location's channel vector is divided by its norm (plus a small guard)
// and multiplied by gamma. Treats the tensor as (numel / C) x C rows.
template <typename T>
void l2norm_forward(const Tensor<T>& in, const Tensor<T>& gamma,
                    Tensor<T>& out, std::vector<T>& norms) {
  const size_t C = gamma.numel();
  const size_t cells = in.numel() / C;
  norms.assign(cells, T(0));
  for (size_t n = 0; n < cells; ++n) {
    const T* v = &in.data[n * C];
    double sq = 0.0;
    for (size_t c = 0; c < C; ++c) sq += double(v[c]) * double(v[c]);
    const double norm = std::sqrt(sq);
    norms[n] = T(norm);
    const double denom = norm + 1e-10;
    for (size_t c = 0; c < C; ++c)
      out.data[n * C + c] = T(double(gamma.data[c]) * double(v[c]) / denom);
  }
}

// gin and ggamma accumulate.
template <typename T>
void l2norm_backward(const Tensor<T>& in, const Tensor<T>& gamma,
                     const std::vector<T>& norms, const Tensor<T>& gout,
                     Tensor<T>& gin, Tensor<T>& ggamma) {
  const size_t C = gamma.numel();
  const size_t cells = in.numel() / C;
  for (size_t n = 0; n < cells; ++n) {
    const T* v = &in.data[n * C];
    const T* g = &gout.data[n * C];
    const double norm = double(norms[n]);
    const double denom = norm + 1e-10;
    double dot = 0.0;
    for (size_t c = 0; c < C; ++c)
      dot += double(g[c]) * double(gamma.data[c]) * double(v[c]);
    for (size_t c = 0; c < C; ++c) {
      double grad = double(gamma.data[c]) * double(g[c]) / denom;
      if (norm > 0.0) grad -= double(v[c]) * dot / (norm * denom * denom);
      gin.data[n * C + c] += T(grad);
      ggamma.data[c] += T(double(g[c]) * double(v[c]) / denom);
    }
  }
}

// Gradients of conv3x3_forward. gw/gb/gin accumulate; gin may be null.
template <typename T>
void conv3x3_backward(const Tensor<T>& in, int H, int W, int Ci,
                      const Tensor<T>& w, int Co, const Tensor<T>& gout,
                      Tensor<T>& gw, Tensor<T>& gb, Tensor<T>* gin) {
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const T* grow = &gout.data[(size_t(y) * W + x) * Co];
      for (int co = 0; co < Co; ++co) {
        const T g = grow[co];
        if (g == T(0)) continue;
        gb.data[co] += g;
        T* gwk = &gw.data[size_t(co) * 9 * Ci];
        const T* wk = &w.data[size_t(co) * 9 * Ci];
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            const size_t ibase = (size_t(yy) * W + xx) * Ci;
            const int koff = ((dy + 1) * 3 + (dx + 1)) * Ci;
            const T* irow = &in.data[ibase];
            T* gwrow = gwk + koff;
            for (int ci = 0; ci < Ci; ++ci) gwrow[ci] += g * irow[ci];
            if (gin) {
              T* ginrow = &gin->data[ibase];
              const T* wrow = wk + koff;
              for (int ci = 0; ci < Ci; ++ci) ginrow[ci] += g * wrow[ci];
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

template <typename T>
class TinyNet {
 public:
  struct Cache {
    Tensor<T> input;
    std::vector<Tensor<T>> stage_act;          // post-ReLU, pre-pool
    std::vector<Tensor<T>> stage_out;          // pooled stage output
    std::vector<std::vector<int32_t>> pool_src;  // argmax into stage_act
    Tensor<T> l2_out;                          // normalized head-0 features
    std::vector<T> l2_norm;                    // per-location feature norm
  };

  explicit TinyNet(NetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    int ci = spec_.channels;
    for (int s = 0; s < spec_.num_stages(); ++s) {
      const int co = spec_.stage_channels[s];
      params_.stage_w.emplace_back(
          std::vector<size_t>{size_t(co), 3, 3, size_t(ci)});
      params_.stage_b.emplace_back(std::vector<size_t>{size_t(co)});
      ci = co;
    }
    for (int h = 0; h < spec_.num_heads(); ++h) {
      const size_t hc = size_t(spec_.stage_channels[spec_.head_stages[h]]);
      const size_t conf_ch = size_t(spec_.boxes_per_cell[h]) *
                             size_t(spec_.num_classes + 1);
      const size_t loc_ch = size_t(spec_.boxes_per_cell[h]) * 4;
      params_.conf_w.emplace_back(std::vector<size_t>{conf_ch, 3, 3, hc});
      params_.conf_b.emplace_back(std::vector<size_t>{conf_ch});
      params_.loc_w.emplace_back(std::vector<size_t>{loc_ch, 3, 3, hc});
      params_.loc_b.emplace_back(std::vector<size_t>{loc_ch});
    }
    if (spec_.l2norm_first_head) {
      params_.gamma = Tensor<T>(std::vector<size_t>{
          size_t(spec_.stage_channels[spec_.head_stages[0]])});
      for (T& g : params_.gamma.data) g = T(spec_.l2norm_init);
    }
  }

  const NetSpec& spec() const { return spec_; }
  NetParams<T>& params() { return params_; }
  const NetParams<T>& params() const { return params_; }
  size_t num_priors() const { return spec_.total_priors(); }

  NetParams<T> zero_params() const {
    NetParams<T> z;
    auto clone_zero = [](const std::vector<Tensor<T>>& src,
                         std::vector<Tensor<T>>& dst) {
      for (const Tensor<T>& t : src) dst.emplace_back(Tensor<T>(t.shape));
    };
    clone_zero(params_.stage_w, z.stage_w);
    clone_zero(params_.stage_b, z.stage_b);
    clone_zero(params_.conf_w, z.conf_w);
    clone_zero(params_.conf_b, z.conf_b);
    clone_zero(params_.loc_w, z.loc_w);
    clone_zero(params_.loc_b, z.loc_b);
    if (!params_.gamma.empty()) z.gamma = Tensor<T>(params_.gamma.shape);
    return z;
  }

  // Fan-based uniform initialization for all convolutions; head biases stay
  // zero, trunk biases take the configured resting value and the l2norm
  // scales keep theirs.
  void init_xavier(Rng& rng) {
    auto fill = [&rng](Tensor<T>& w) {
      // [Co, 3, 3, Ci]
      const double fan_in = double(w.shape[3]) * 9.0;
      const double fan_out = double(w.shape[0]) * 9.0;
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (T& v : w.data) v = T(rng.uniform(-a, a));
    };
    for (Tensor<T>& w : params_.stage_w) fill(w);
    for (Tensor<T>& b : params_.stage_b)
      for (T& v : b.data) v = T(spec_.stage_bias_init);
    for (int h = 0; h < spec_.num_heads(); ++h) {
      fill(params_.conf_w[h]);
      fill(params_.loc_w[h]);
    }
  }

  Predictions<T> forward(const Image& img) const {
    Cache scratch;
    return run(img, scratch);
  }

  Predictions<T> forward(const Image& img, Cache& cache) const {
    return run(img, cache);
  }

  // Accumulates parameter gradients into `grads` (caller zeroes them).
  void backward(const Cache& cache, std::span<const T> grad_conf,
                std::span<const T> grad_loc, NetParams<T>& grads) const {
    const int S = spec_.num_stages();
    std::vector<Tensor<T>> gstage_out;
    for (int s = 0; s < S; ++s)
      gstage_out.emplace_back(Tensor<T>(cache.stage_out[s].shape));

    // heads
    for (int h = 0; h < spec_.num_heads(); ++h) {
      const int stage = spec_.head_stages[h];
      const int G = spec_.head_grid(h);
      const int k = spec_.boxes_per_cell[h];
      const int cols = spec_.num_classes + 1;
      const int hc = spec_.stage_channels[stage];

      Tensor<T> gconf_map(
          std::vector<size_t>{size_t(G), size_t(G), size_t(k) * cols});
      Tensor<T> gloc_map(
          std::vector<size_t>{size_t(G), size_t(G), size_t(k) * 4});
      const size_t row0 = head_row_offset(h);
      for (int cell = 0; cell < G * G; ++cell) {
        for (int b = 0; b < k; ++b) {
          const size_t row = row0 + size_t(cell) * k + b;
          for (int cl = 0; cl < cols; ++cl)
            gconf_map.data[size_t(cell) * k * cols + b * cols + cl] =
                grad_conf[row * cols + cl];
          for (int m = 0; m < 4; ++m)
            gloc_map.data[size_t(cell) * k * 4 + b * 4 + m] =
                grad_loc[row * 4 + m];
        }
      }

      const bool normed = h == 0 && spec_.l2norm_first_head;
      const Tensor<T>& head_in = normed ? cache.l2_out : cache.stage_out[stage];
      Tensor<T> ghead_in(head_in.shape);
      detail::conv3x3_backward(head_in, G, G, hc, params_.conf_w[h],
                               int(params_.conf_w[h].shape[0]), gconf_map,
                               grads.conf_w[h], grads.conf_b[h], &ghead_in);
      detail::conv3x3_backward(head_in, G, G, hc, params_.loc_w[h],
                               int(params_.loc_w[h].shape[0]), gloc_map,
                               grads.loc_w[h], grads.loc_b[h], &ghead_in);

      if (normed)
        detail::l2norm_backward(cache.stage_out[stage], params_.gamma,
                                cache.l2_norm, ghead_in, gstage_out[stage],
                                grads.gamma);
      else
        for (size_t n = 0; n < ghead_in.numel(); ++n)
          gstage_out[stage].data[n] += ghead_in.data[n];
    }

    // trunk, top down
    for (int s = S - 1; s >= 0; --s) {
      const Tensor<T>& gout = gstage_out[s];
      Tensor<T> gact(cache.stage_act[s].shape);
      for (size_t n = 0; n < gout.numel(); ++n)
        gact.data[cache.pool_src[s][n]] += gout.data[n];
      // ReLU mask from the cached activations
      for (size_t n = 0; n < gact.numel(); ++n)
        if (cache.stage_act[s].data[n] <= T(0)) gact.data[n] = T(0);

      const Tensor<T>& in = s == 0 ? cache.input : cache.stage_out[s - 1];
      const int size = spec_.input_size >> s;
      const int ci = s == 0 ? spec_.channels : spec_.stage_channels[s - 1];
      Tensor<T>* gin = nullptr;
      if (s > 0) gin = &gstage_out[s - 1];
      detail::conv3x3_backward(in, size, size, ci, params_.stage_w[s],
                               spec_.stage_channels[s], gact, grads.stage_w[s],
                               grads.stage_b[s], gin);
    }
  }

 private:
  size_t head_row_offset(int h) const {
    size_t off = 0;
    for (int i = 0; i < h; ++i)
      off += size_t(spec_.head_grid(i)) * spec_.head_grid(i) *
             spec_.boxes_per_cell[i];
    return off;
  }

  Predictions<T> run(const Image& img, Cache& cache) const {
    if (img.height != spec_.input_size || img.width != spec_.input_size ||
        img.channels != spec_.channels)
      throw std::invalid_argument("forward: image does not match NetSpec");

    const int S = spec_.num_stages();
    cache.input = Tensor<T>(std::vector<size_t>{
        size_t(img.height), size_t(img.width), size_t(img.channels)});
    const T shift = T(spec_.input_shift);
    for (size_t n = 0; n < img.data.size(); ++n)
      cache.input.data[n] = T(img.data[n]) + shift;
    cache.stage_act.assign(S, Tensor<T>());
    cache.stage_out.assign(S, Tensor<T>());
    cache.pool_src.assign(S, {});

    const Tensor<T>* cur = &cache.input;
    int ci = spec_.channels;
    for (int s = 0; s < S; ++s) {
      const int size = spec_.input_size >> s;
      const int co = spec_.stage_channels[s];
      Tensor<T>& act = cache.stage_act[s];
      act = Tensor<T>(std::vector<size_t>{size_t(size), size_t(size),
                                          size_t(co)});
      detail::conv3x3_forward(*cur, size, size, ci, params_.stage_w[s],
                              params_.stage_b[s], co, act);
      for (T& v : act.data)
        if (v < T(0)) v = T(0);

      const int half = size / 2;
      Tensor<T>& out = cache.stage_out[s];
      out = Tensor<T>(std::vector<size_t>{size_t(half), size_t(half),
                                          size_t(co)});
      cache.pool_src[s].assign(out.numel(), 0);
      for (int y = 0; y < half; ++y)
        for (int x = 0; x < half; ++x)
          for (int c = 0; c < co; ++c) {
            int32_t best_idx =
                int32_t(((size_t(2 * y) * size) + 2 * x) * co + c);
            T best = act.data[best_idx];
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const int32_t idx = int32_t(
                    ((size_t(2 * y + dy) * size) + 2 * x + dx) * co + c);
                if (act.data[idx] > best) {
                  best = act.data[idx];
                  best_idx = idx;
                }
              }
            const size_t on = (size_t(y) * half + x) * co + c;
            out.data[on] = best;
            cache.pool_src[s][on] = best_idx;
          }
      cur = &out;
      ci = co;
    }

    Predictions<T> pred;
    pred.num_priors = spec_.total_priors();
    pred.num_classes = spec_.num_classes;
    pred.conf.assign(pred.num_priors * size_t(spec_.num_classes + 1), T(0));
    pred.loc.assign(pred.num_priors * 4, T(0));

    for (int h = 0; h < spec_.num_heads(); ++h) {
      const int stage = spec_.head_stages[h];
      const int G = spec_.head_grid(h);
      const int k = spec_.boxes_per_cell[h];
      const int cols = spec_.num_classes + 1;
      const int hc = spec_.stage_channels[stage];

      const Tensor<T>* head_in = &cache.stage_out[stage];
      if (h == 0 && spec_.l2norm_first_head) {
        cache.l2_out = Tensor<T>(head_in->shape);
        detail::l2norm_forward(*head_in, params_.gamma, cache.l2_out,
                               cache.l2_norm);
        head_in = &cache.l2_out;
      }

      Tensor<T> conf_map(
          std::vector<size_t>{size_t(G), size_t(G), size_t(k) * cols});
      Tensor<T> loc_map(
          std::vector<size_t>{size_t(G), size_t(G), size_t(k) * 4});
      detail::conv3x3_forward(*head_in, G, G, hc, params_.conf_w[h],
                              params_.conf_b[h], int(params_.conf_w[h].shape[0]),
                              conf_map);
      detail::conv3x3_forward(*head_in, G, G, hc, params_.loc_w[h],
                              params_.loc_b[h], int(params_.loc_w[h].shape[0]),
                              loc_map);

      const size_t row0 = head_row_offset(h);
      for (int cell = 0; cell < G * G; ++cell) {
        for (int b = 0; b < k; ++b) {
          const size_t row = row0 + size_t(cell) * k + b;
          for (int cl = 0; cl < cols; ++cl)
            pred.conf[row * cols + cl] =
                conf_map.data[size_t(cell) * k * cols + b * cols + cl];
          for (int m = 0; m < 4; ++m)
            pred.loc[row * 4 + m] =
                loc_map.data[size_t(cell) * k * 4 + b * 4 + m];
        }
      }
    }
    return pred;
  }

  NetSpec spec_;
  NetParams<T> params_;
};

struct SgdConfig {
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v
template <typename T>
void sgd_step(NetParams<T>& params, const NetParams<T>& grads,
              NetParams<T>& velocity, const SgdConfig& cfg) {
  auto p = named_tensors(params);
  auto g = named_tensors(grads);  // const overload
  auto v = named_tensors(velocity);
  if (p.size() != g.size() || p.size() != v.size())
    throw std::invalid_argument("sgd_step: parameter group mismatch");
  for (size_t t = 0; t < p.size(); ++t) {
    Tensor<T>& pt = *p[t].second;
    const Tensor<T>& gt = *g[t].second;
    Tensor<T>& vt = *v[t].second;
    if (pt.numel() != gt.numel() || pt.numel() != vt.numel())
      throw std::invalid_argument("sgd_step: tensor shape mismatch");
    for (size_t n = 0; n < pt.numel(); ++n) {
      const double vel = cfg.momentum * double(vt.data[n]) +
                         double(gt.data[n]) +
                         cfg.weight_decay * double(pt.data[n]);
      vt.data[n] = T(vel);
      pt.data[n] = T(double(pt.data[n]) - cfg.lr * vel);
    }
  }
}

}  // namespace tinyssd
