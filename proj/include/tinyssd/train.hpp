#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tinyssd/augment.hpp"
#include "tinyssd/eval.hpp"
#include "tinyssd/net.hpp"

namespace tinyssd {

struct TrainConfig {
  int iterations = 5000;
  int batch_accumulation = 8;  // images accumulated per SGD step
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<int> lr_decay_steps = {4000};
  double lr_decay_factor = 0.1;
  double alpha = 1.0;
  double match_threshold = 0.5;
  double neg_pos_ratio = 3.0;
  uint64_t seed = 1;
  bool augment = true;
  int log_every = 0;  // progress lines to stdout; 0 is silent
};

struct TrainResult {
  std::vector<double> loss_trace;  // per-iteration batch loss
  uint64_t steps = 0;
};

// Resize the image to the square model input; normalized boxes are unchanged.
ImageSample fit_to_input(const ImageSample& s, int input_size);

// SGD training over the dataset: augment -> forward -> match -> loss ->
// backward -> step, with deterministic per-epoch shuffling and per-sample
// augmentation streams keyed by (seed, sample index, epoch). A non-empty
// prior_mask restricts matching, mining and gradients to the marked priors.
// Throws on a non-finite loss, naming the offending iteration.
TrainResult train(TinyNet<float>& net, const std::vector<ImageSample>& dataset,
                  const PriorSet& priors, const TrainConfig& cfg,
                  const AugmentConfig& aug,
                  std::span<const uint8_t> prior_mask = {});

struct EvalSummary {
  std::vector<double> per_class_ap;  // index 0 = class 1
  double map = 0.0;
};

// Runs the detector over a dataset and scores it against the ground truth.
EvalSummary evaluate_detector(const TinyNet<float>& net,
                              const std::vector<ImageSample>& dataset,
                              const PriorSet& priors,
                              const InferenceConfig& icfg,
                              const EvalConfig& ecfg,
                              std::span<const uint8_t> prior_mask = {});

}  // namespace tinyssd
