#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tinyssd/augment.hpp"
#include "tinyssd/eval.hpp"
#include "tinyssd/net.hpp"
#include "tinyssd/synth.hpp"
#include "tinyssd/train.hpp"

namespace tinyssd {

struct PriorsConfig {
  std::string preset = "toy";  // toy | ssd300 | ssd512 | custom
  double s_min = 0.2;
  double s_max = 0.9;
  double first_scale_override = -1.0;  // > 0 pins the first layer's scale
  bool ignore_boundary_priors = false;
  std::vector<LayerSpec> layers;  // used by the custom preset
};

// One configuration file drives every subcommand; flags override file values.
// Parsing is strict: unknown keys are rejected.
struct RunConfig {
  uint64_t seed = 1;
  NetSpec model;
  PriorsConfig priors;
  TrainConfig train;  // its seed mirrors the top-level seed
  AugmentConfig augment;
  InferenceConfig inference;
  EvalConfig eval;
  SynthConfig synth;
  int synth_count = 2000;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

// Layer specs selected by the priors preset; "toy" derives its grids from
// the model's head layout.
std::vector<LayerSpec> config_layers(const RunConfig& cfg);
PriorSet config_priors(const RunConfig& cfg);

}  // namespace tinyssd
