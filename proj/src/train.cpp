#include "tinyssd/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace tinyssd {

namespace {

constexpr uint64_t kShuffleStream = 0x5348554646ull;

PriorSet gather_priors(const PriorSet& priors,
                       const std::vector<size_t>& active) {
  PriorSet sub;
  for (size_t i : active) {
    sub.boxes.push_back(priors.boxes[i]);
    sub.layer_of.push_back(priors.layer_of[i]);
    sub.cell_row.push_back(priors.cell_row[i]);
    sub.cell_col.push_back(priors.cell_col[i]);
  }
  return sub;
}

std::vector<size_t> active_indices(size_t n, std::span<const uint8_t> mask) {
  std::vector<size_t> active;
  if (mask.empty()) {
    active.resize(n);
    std::iota(active.begin(), active.end(), size_t(0));
  } else {
    if (mask.size() != n)
      throw std::invalid_argument("prior mask size mismatch");
    for (size_t i = 0; i < n; ++i)
      if (mask[i]) active.push_back(i);
  }
  if (active.empty()) throw std::invalid_argument("no active priors");
  return active;
}

template <typename T>
Predictions<T> gather_rows(const Predictions<T>& pred,
                           const std::vector<size_t>& active) {
  Predictions<T> sub;
  sub.num_priors = active.size();
  sub.num_classes = pred.num_classes;
  const int cols = pred.logit_cols();
  sub.conf.resize(sub.num_priors * size_t(cols));
  sub.loc.resize(sub.num_priors * 4);
  for (size_t a = 0; a < active.size(); ++a) {
    const size_t i = active[a];
    for (int k = 0; k < cols; ++k)
      sub.conf[a * cols + k] = pred.conf[i * cols + k];
    for (int k = 0; k < 4; ++k) sub.loc[a * 4 + k] = pred.loc[i * 4 + k];
  }
  return sub;
}

void shuffle(std::vector<size_t>& order, Rng& rng) {
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[size_t(rng.uniform_int(int(i)))]);
}

}  // namespace

ImageSample fit_to_input(const ImageSample& s, int input_size) {
  if (s.image.height == input_size && s.image.width == input_size) return s;
  ImageSample out = s;
  out.image = resize_bilinear(s.image, input_size, input_size);
  return out;
}

TrainResult train(TinyNet<float>& net, const std::vector<ImageSample>& dataset,
                  const PriorSet& priors, const TrainConfig& cfg,
                  const AugmentConfig& aug,
                  std::span<const uint8_t> prior_mask) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (priors.size() != net.num_priors())
    throw std::invalid_argument("train: priors do not match the network");
  if (cfg.batch_accumulation < 1 || cfg.iterations < 0)
    throw std::invalid_argument("train: bad schedule");

  const auto active = active_indices(priors.size(), prior_mask);
  const PriorSet sub_priors = gather_priors(priors, active);
  const int cols = net.spec().num_classes + 1;

  NetParams<float> grads = net.zero_params();
  NetParams<float> velocity = net.zero_params();
  typename TinyNet<float>::Cache cache;
  MultiBoxConfig loss_cfg{cfg.alpha, cfg.neg_pos_ratio};

  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), size_t(0));
  uint64_t epoch = uint64_t(-1);  // first wrap brings it to 0
  size_t cursor = order.size();   // forces a shuffle before the first sample

  std::vector<float> grad_conf(net.num_priors() * size_t(cols));
  std::vector<float> grad_loc(net.num_priors() * 4);

  double lr = cfg.learning_rate;
  TrainResult result;
  result.loss_trace.reserve(size_t(cfg.iterations));

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int step : cfg.lr_decay_steps)
      if (iter == step) lr *= cfg.lr_decay_factor;

    grads.zero();
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_accumulation; ++b) {
      if (cursor == order.size()) {
        ++epoch;
        Rng shuffle_rng(derive_seed(cfg.seed ^ kShuffleStream, epoch));
        shuffle(order, shuffle_rng);
        cursor = 0;
      }
      const size_t sample_idx = order[cursor++];

      Rng aug_rng(derive_seed(cfg.seed, sample_idx, epoch));
      const ImageSample& raw = dataset[sample_idx];
      const ImageSample sample =
          cfg.augment ? augment_pipeline(raw, aug, aug_rng)
                      : fit_to_input(raw, net.spec().input_size);

      Predictions<float> pred = net.forward(sample.image, cache);
      const MatchAssignment assignment =
          match(sub_priors, sample.gts, cfg.match_threshold);
      const Predictions<float> sub_pred = gather_rows(pred, active);
      const LossReport<float> report =
          multibox_loss(sub_pred, assignment, loss_cfg);
      if (!std::isfinite(report.total))
        throw std::runtime_error("train: non-finite loss at iteration " +
                                 std::to_string(iter));
      batch_loss += report.total;
      if (report.num_pos == 0) continue;

      std::fill(grad_conf.begin(), grad_conf.end(), 0.0f);
      std::fill(grad_loc.begin(), grad_loc.end(), 0.0f);
      const float inv_b = 1.0f / float(cfg.batch_accumulation);
      for (size_t a = 0; a < active.size(); ++a) {
        const size_t i = active[a];
        for (int k = 0; k < cols; ++k)
          grad_conf[i * cols + k] = report.grad_conf[a * cols + k] * inv_b;
        for (int k = 0; k < 4; ++k)
          grad_loc[i * 4 + k] = report.grad_loc[a * 4 + k] * inv_b;
      }
      net.backward(cache, grad_conf, grad_loc, grads);
    }

    sgd_step(net.params(), grads, velocity,
             {lr, cfg.momentum, cfg.weight_decay});
    result.loss_trace.push_back(batch_loss / cfg.batch_accumulation);
    ++result.steps;

    if (cfg.log_every > 0 && (iter + 1) % cfg.log_every == 0) {
      double recent = 0.0;
      const int window = std::min(iter + 1, cfg.log_every);
      for (int k = 0; k < window; ++k)
        recent += result.loss_trace[result.loss_trace.size() - 1 - k];
      std::printf("iter %6d  lr %.2e  loss %.4f\n", iter + 1, lr,
                  recent / window);
      std::fflush(stdout);
    }
  }
  return result;
}

EvalSummary evaluate_detector(const TinyNet<float>& net,
                              const std::vector<ImageSample>& dataset,
                              const PriorSet& priors,
                              const InferenceConfig& icfg,
                              const EvalConfig& ecfg,
                              std::span<const uint8_t> prior_mask) {
  if (priors.size() != net.num_priors())
    throw std::invalid_argument("evaluate: priors do not match the network");
  const auto active = active_indices(priors.size(), prior_mask);
  const PriorSet sub_priors = gather_priors(priors, active);

  std::vector<DetRecord> records;
  std::vector<std::vector<GtAnnotation>> gts(dataset.size());
  for (size_t id = 0; id < dataset.size(); ++id) {
    const ImageSample sample =
        fit_to_input(dataset[id], net.spec().input_size);
    for (const GroundTruth& gt : sample.gts)
      gts[id].push_back({gt.box, gt.label, false});
    const Predictions<float> pred = net.forward(sample.image);
    const Predictions<float> sub_pred = gather_rows(pred, active);
    for (const Detection& det : detect(sub_pred, sub_priors, icfg))
      records.push_back({int(id), det.label, det.score, det.box});
  }

  EvalSummary summary;
  for (int cls = 1; cls <= net.spec().num_classes; ++cls)
    summary.per_class_ap.push_back(
        average_precision(records, gts, cls, ecfg).ap);
  summary.map = mean_ap(summary.per_class_ap);
  return summary;
}

}  // namespace tinyssd
