#include "scn/serialize.hpp"

namespace scn {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const EncoderConfig& config) {
  ordered_json j;
  json conv = json::array();
  for (const auto& c : config.conv_layers) {
    conv.push_back({c.filters, c.kernel, c.stride, c.pad});
  }
  j["conv_layers"] = std::move(conv);
  j["fc_dims"] = config.fc_dims;
  j["input_size"] = config.input_size;
  j["channels"] = config.channels;
  return j;
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig config;
  if (j.contains("conv_layers")) {
    config.conv_layers.clear();
    for (const auto& c : j["conv_layers"]) {
      if (!c.is_array() || c.size() != 4) {
        throw ConfigError("encoder config: conv layer must be "
                          "[filters, kernel, stride, pad]");
      }
      config.conv_layers.push_back(
          {c[0].get<int>(), c[1].get<int>(), c[2].get<int>(), c[3].get<int>()});
    }
  }
  if (j.contains("fc_dims")) config.fc_dims = j["fc_dims"].get<std::vector<int>>();
  config.input_size = j.value("input_size", config.input_size);
  config.channels = j.value("channels", config.channels);
  config.validate();
  return config;
}

ordered_json to_json(const SgdConfig& config) {
  ordered_json j;
  j["base_lr"] = config.base_lr;
  j["lr_drop_epoch"] = config.lr_drop_epoch;
  j["dropped_lr"] = config.dropped_lr;
  j["weight_decay"] = config.weight_decay;
  j["momentum"] = config.momentum;
  j["grad_clip"] = config.grad_clip;
  j["batch_size"] = config.batch_size;
  j["max_epochs"] = config.max_epochs;
  j["seed"] = config.seed;
  return j;
}

SgdConfig sgd_config_from_json(const json& j) {
  SgdConfig config;
  config.base_lr = j.value("base_lr", config.base_lr);
  config.lr_drop_epoch = j.value("lr_drop_epoch", config.lr_drop_epoch);
  config.dropped_lr = j.value("dropped_lr", config.dropped_lr);
  config.weight_decay = j.value("weight_decay", config.weight_decay);
  config.momentum = j.value("momentum", config.momentum);
  config.grad_clip = j.value("grad_clip", config.grad_clip);
  config.batch_size = j.value("batch_size", config.batch_size);
  config.max_epochs = j.value("max_epochs", config.max_epochs);
  config.seed = j.value("seed", config.seed);
  config.validate();
  return config;
}

ordered_json to_json(const SyntheticConfig& config) {
  ordered_json j;
  j["canvas"] = config.canvas;
  j["n_circle_square"] = config.n_circle_square;
  j["n_circle_triangle"] = config.n_circle_triangle;
  j["n_circle_black"] = config.n_circle_black;
  j["train_count"] = config.train_count;
  j["shape_min"] = config.shape_min;
  j["shape_max"] = config.shape_max;
  j["axis_tolerance"] = config.axis_tolerance;
  j["box_margin"] = config.box_margin;
  j["max_retries"] = config.max_retries;
  return j;
}

SyntheticConfig synthetic_config_from_json(const json& j) {
  SyntheticConfig config;
  config.canvas = j.value("canvas", config.canvas);
  config.n_circle_square = j.value("n_circle_square", config.n_circle_square);
  config.n_circle_triangle =
      j.value("n_circle_triangle", config.n_circle_triangle);
  config.n_circle_black = j.value("n_circle_black", config.n_circle_black);
  config.train_count = j.value("train_count", config.train_count);
  config.shape_min = j.value("shape_min", config.shape_min);
  config.shape_max = j.value("shape_max", config.shape_max);
  config.axis_tolerance = j.value("axis_tolerance", config.axis_tolerance);
  config.box_margin = j.value("box_margin", config.box_margin);
  config.max_retries = j.value("max_retries", config.max_retries);
  config.validate();
  return config;
}

}  // namespace scn
