#include "tinyssd/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

using nlohmann::json;

namespace tinyssd {

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw std::invalid_argument("config: section '" + section +
                                "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!ok.count(item.key()))
      throw std::invalid_argument("config: unknown key '" + item.key() +
                                  "' in section '" + section + "'");
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

LayerSpec parse_layer(const json& j) {
  check_keys(j, "priors.layers[]",
             {"grid_size", "scale", "next_scale", "aspect_ratios",
              "include_extra"});
  LayerSpec spec;
  opt(j, "grid_size", spec.grid_size);
  opt(j, "scale", spec.scale);
  opt(j, "next_scale", spec.next_scale);
  opt(j, "aspect_ratios", spec.aspect_ratios);
  opt(j, "include_extra", spec.include_extra);
  return spec;
}

json layer_to_json(const LayerSpec& spec) {
  return json{{"grid_size", spec.grid_size},
              {"scale", spec.scale},
              {"next_scale", spec.next_scale},
              {"aspect_ratios", spec.aspect_ratios},
              {"include_extra", spec.include_extra}};
}

}  // namespace

RunConfig parse_config(const json& j) {
  check_keys(j, "<root>", {"seed", "model", "priors", "train", "augment",
                           "inference", "eval", "synth"});
  RunConfig cfg;
  opt(j, "seed", cfg.seed);

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model",
               {"input_size", "channels", "stage_channels", "head_stages",
                "boxes_per_cell", "num_classes", "l2norm_first_head",
                "l2norm_init"});
    opt(m, "input_size", cfg.model.input_size);
    opt(m, "channels", cfg.model.channels);
    opt(m, "stage_channels", cfg.model.stage_channels);
    opt(m, "head_stages", cfg.model.head_stages);
    opt(m, "boxes_per_cell", cfg.model.boxes_per_cell);
    opt(m, "num_classes", cfg.model.num_classes);
    opt(m, "l2norm_first_head", cfg.model.l2norm_first_head);
    opt(m, "l2norm_init", cfg.model.l2norm_init);
  }

  if (j.contains("priors")) {
    const json& p = j.at("priors");
    check_keys(p, "priors",
               {"preset", "s_min", "s_max", "first_scale_override",
                "ignore_boundary_priors", "layers"});
    opt(p, "preset", cfg.priors.preset);
    opt(p, "s_min", cfg.priors.s_min);
    opt(p, "s_max", cfg.priors.s_max);
    opt(p, "first_scale_override", cfg.priors.first_scale_override);
    opt(p, "ignore_boundary_priors", cfg.priors.ignore_boundary_priors);
    if (p.contains("layers"))
      for (const json& l : p.at("layers"))
        cfg.priors.layers.push_back(parse_layer(l));
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train",
               {"iterations", "batch_accumulation", "learning_rate",
                "momentum", "weight_decay", "lr_decay_steps",
                "lr_decay_factor", "alpha", "match_threshold",
                "neg_pos_ratio", "augment", "log_every"});
    opt(t, "iterations", cfg.train.iterations);
    opt(t, "batch_accumulation", cfg.train.batch_accumulation);
    opt(t, "learning_rate", cfg.train.learning_rate);
    opt(t, "momentum", cfg.train.momentum);
    opt(t, "weight_decay", cfg.train.weight_decay);
    opt(t, "lr_decay_steps", cfg.train.lr_decay_steps);
    opt(t, "lr_decay_factor", cfg.train.lr_decay_factor);
    opt(t, "alpha", cfg.train.alpha);
    opt(t, "match_threshold", cfg.train.match_threshold);
    opt(t, "neg_pos_ratio", cfg.train.neg_pos_ratio);
    opt(t, "augment", cfg.train.augment);
    opt(t, "log_every", cfg.train.log_every);
  }
  cfg.train.seed = cfg.seed;

  cfg.augment.output_size = cfg.model.input_size;
  if (j.contains("augment")) {
    const json& a = j.at("augment");
    check_keys(a, "augment",
               {"min_jaccard_options", "patch_area_range",
                "patch_aspect_range", "max_attempts", "flip_prob",
                "expand_enabled", "expand_prob", "expand_max_area",
                "mean_fill", "brightness_delta", "contrast_range"});
    opt(a, "min_jaccard_options", cfg.augment.min_jaccard_options);
    if (a.contains("patch_area_range")) {
      const auto range = a.at("patch_area_range").get<std::vector<double>>();
      if (range.size() != 2)
        throw std::invalid_argument("config: patch_area_range needs 2 values");
      cfg.augment.patch_area_min = range[0];
      cfg.augment.patch_area_max = range[1];
    }
    if (a.contains("patch_aspect_range")) {
      const auto range =
          a.at("patch_aspect_range").get<std::vector<double>>();
      if (range.size() != 2)
        throw std::invalid_argument(
            "config: patch_aspect_range needs 2 values");
      cfg.augment.patch_aspect_min = range[0];
      cfg.augment.patch_aspect_max = range[1];
    }
    opt(a, "max_attempts", cfg.augment.max_attempts);
    opt(a, "flip_prob", cfg.augment.flip_prob);
    opt(a, "expand_enabled", cfg.augment.expand_enabled);
    opt(a, "expand_prob", cfg.augment.expand_prob);
    opt(a, "expand_max_area", cfg.augment.expand_max_area);
    opt(a, "mean_fill", cfg.augment.mean_fill);
    opt(a, "brightness_delta", cfg.augment.brightness_delta);
    if (a.contains("contrast_range")) {
      const auto range = a.at("contrast_range").get<std::vector<double>>();
      if (range.size() != 2)
        throw std::invalid_argument("config: contrast_range needs 2 values");
      cfg.augment.contrast_min = range[0];
      cfg.augment.contrast_max = range[1];
    }
  }

  if (j.contains("inference")) {
    const json& i = j.at("inference");
    check_keys(i, "inference", {"conf_threshold", "nms_iou", "top_k"});
    opt(i, "conf_threshold", cfg.inference.conf_threshold);
    opt(i, "nms_iou", cfg.inference.nms_iou);
    opt(i, "top_k", cfg.inference.top_k);
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval", {"iou_threshold", "interpolation"});
    opt(e, "iou_threshold", cfg.eval.iou_threshold);
    if (e.contains("interpolation")) {
      const std::string mode = e.at("interpolation").get<std::string>();
      if (mode == "eleven_point")
        cfg.eval.interpolation = ApInterpolation::eleven_point;
      else if (mode == "all_points")
        cfg.eval.interpolation = ApInterpolation::all_points;
      else
        throw std::invalid_argument("config: unknown interpolation '" + mode +
                                    "'");
    }
  }

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    check_keys(s, "synth",
               {"count", "image_size", "channels", "min_objects",
                "max_objects", "min_side", "max_side", "max_pairwise_iou"});
    opt(s, "count", cfg.synth_count);
    opt(s, "image_size", cfg.synth.image_size);
    opt(s, "channels", cfg.synth.channels);
    opt(s, "min_objects", cfg.synth.min_objects);
    opt(s, "max_objects", cfg.synth.max_objects);
    opt(s, "min_side", cfg.synth.min_side);
    opt(s, "max_side", cfg.synth.max_side);
    opt(s, "max_pairwise_iou", cfg.synth.max_pairwise_iou);
  }
  cfg.synth.num_classes = cfg.model.num_classes;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& cfg) {
  json layers = json::array();
  for (const LayerSpec& spec : cfg.priors.layers)
    layers.push_back(layer_to_json(spec));
  return json{
      {"seed", cfg.seed},
      {"model",
       {{"input_size", cfg.model.input_size},
        {"channels", cfg.model.channels},
        {"stage_channels", cfg.model.stage_channels},
        {"head_stages", cfg.model.head_stages},
        {"boxes_per_cell", cfg.model.boxes_per_cell},
        {"num_classes", cfg.model.num_classes},
        {"l2norm_first_head", cfg.model.l2norm_first_head},
        {"l2norm_init", cfg.model.l2norm_init}}},
      {"priors",
       {{"preset", cfg.priors.preset},
        {"s_min", cfg.priors.s_min},
        {"s_max", cfg.priors.s_max},
        {"first_scale_override", cfg.priors.first_scale_override},
        {"ignore_boundary_priors", cfg.priors.ignore_boundary_priors},
        {"layers", layers}}},
      {"train",
       {{"iterations", cfg.train.iterations},
        {"batch_accumulation", cfg.train.batch_accumulation},
        {"learning_rate", cfg.train.learning_rate},
        {"momentum", cfg.train.momentum},
        {"weight_decay", cfg.train.weight_decay},
        {"lr_decay_steps", cfg.train.lr_decay_steps},
        {"lr_decay_factor", cfg.train.lr_decay_factor},
        {"alpha", cfg.train.alpha},
        {"match_threshold", cfg.train.match_threshold},
        {"neg_pos_ratio", cfg.train.neg_pos_ratio},
        {"augment", cfg.train.augment},
        {"log_every", cfg.train.log_every}}},
      {"augment",
       {{"min_jaccard_options", cfg.augment.min_jaccard_options},
        {"patch_area_range",
         {cfg.augment.patch_area_min, cfg.augment.patch_area_max}},
        {"patch_aspect_range",
         {cfg.augment.patch_aspect_min, cfg.augment.patch_aspect_max}},
        {"max_attempts", cfg.augment.max_attempts},
        {"flip_prob", cfg.augment.flip_prob},
        {"expand_enabled", cfg.augment.expand_enabled},
        {"expand_prob", cfg.augment.expand_prob},
        {"expand_max_area", cfg.augment.expand_max_area},
        {"mean_fill", cfg.augment.mean_fill},
        {"brightness_delta", cfg.augment.brightness_delta},
        {"contrast_range",
         {cfg.augment.contrast_min, cfg.augment.contrast_max}}}},
      {"inference",
       {{"conf_threshold", cfg.inference.conf_threshold},
        {"nms_iou", cfg.inference.nms_iou},
        {"top_k", cfg.inference.top_k}}},
      {"eval",
       {{"iou_threshold", cfg.eval.iou_threshold},
        {"interpolation",
         cfg.eval.interpolation == ApInterpolation::eleven_point
             ? "eleven_point"
             : "all_points"}}},
      {"synth",
       {{"count", cfg.synth_count},
        {"image_size", cfg.synth.image_size},
        {"channels", cfg.synth.channels},
        {"min_objects", cfg.synth.min_objects},
        {"max_objects", cfg.synth.max_objects},
        {"min_side", cfg.synth.min_side},
        {"max_side", cfg.synth.max_side},
        {"max_pairwise_iou", cfg.synth.max_pairwise_iou}}}};
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  f << config_to_json(cfg).dump(2) << "\n";
}

std::vector<LayerSpec> config_layers(const RunConfig& cfg) {
  if (cfg.priors.preset == "ssd300") return ssd300_layers();
  if (cfg.priors.preset == "ssd512") return ssd512_layers();
  if (cfg.priors.preset == "custom") {
    if (cfg.priors.layers.empty())
      throw std::invalid_argument("config: custom preset needs priors.layers");
    return cfg.priors.layers;
  }
  if (cfg.priors.preset == "toy") {
    std::vector<int> grids;
    for (int h = 0; h < cfg.model.num_heads(); ++h)
      grids.push_back(cfg.model.head_grid(h));
    return toy_layers(grids, cfg.priors.s_min, cfg.priors.s_max,
                      cfg.priors.first_scale_override);
  }
  throw std::invalid_argument("config: unknown priors preset '" +
                              cfg.priors.preset + "'");
}

PriorSet config_priors(const RunConfig& cfg) {
  const auto layers = config_layers(cfg);
  return build_priors(layers);
}

}  // namespace tinyssd
