#include "scn/checkpoint.hpp"

#include "scn/envelope.hpp"
#include "scn/serialize.hpp"

namespace scn {

namespace {
constexpr int kFormatVersion = 1;
}

void save_checkpoint(const ScnModel& model,
                     const std::filesystem::path& path) {
  nlohmann::ordered_json header;
  header["format_version"] = kFormatVersion;
  header["encoder_config"] = to_json(model.top_encoder().config());
  header["mode"] = to_string(model.mode());
  header["tune_depth"] = to_string(model.tune_depth());
  header["d2"] = model.d2();
  header["ablated"] = model.ablated();
  header["offset_divisor"] = model.offset_divisor();

  const auto named = model.named_tensors();
  nlohmann::ordered_json directory;
  std::vector<float> payload;
  size_t offset = 0;
  for (const auto& [name, tensor] : named) {
    const size_t length = tensor.data().size() * 4;
    nlohmann::ordered_json entry;
    entry["shape"] = tensor.shape();
    entry["offset"] = offset;
    entry["length"] = length;
    directory[name] = std::move(entry);
    payload.insert(payload.end(), tensor.data().begin(), tensor.data().end());
    offset += length;
  }
  header["tensors"] = std::move(directory);
  envelope::write(path, header, payload);
}

ScnModel load_checkpoint(const std::filesystem::path& path) {
  envelope::Contents contents = envelope::read(path);
  const auto& header = contents.header;

  int version = -1;
  try {
    version = header.at("format_version").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(path.string() + ": header lacks format_version");
  }
  if (version != kFormatVersion) {
    throw VersionError(path.string() + ": unsupported format_version " +
                       std::to_string(version));
  }

  ScnModelConfig config;
  EncoderConfig encoder_config;
  bool ablated = false;
  nlohmann::ordered_json directory;
  try {
    encoder_config = encoder_config_from_json(header.at("encoder_config"));
    config.mode = target_mode_from_string(header.at("mode").get<std::string>());
    config.tune_depth =
        tune_depth_from_string(header.at("tune_depth").get<std::string>());
    config.d2 = header.at("d2").get<int>();
    ablated = header.at("ablated").get<bool>();
    config.offset_divisor = header.at("offset_divisor").get<float>();
    directory = header.at("tensors");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed header: " + e.what());
  }

  // Validate the directory against the payload before touching any tensor.
  size_t expected_end = 0;
  for (const auto& [name, entry] : directory.items()) {
    const size_t offset = entry.at("offset").get<size_t>();
    const size_t length = entry.at("length").get<size_t>();
    expected_end = std::max(expected_end, offset + length);
  }
  if (expected_end > contents.payload.size()) {
    throw TruncatedError(path.string() + ": payload holds " +
                         std::to_string(contents.payload.size()) +
                         " bytes, directory needs " +
                         std::to_string(expected_end));
  }
  if (!contents.crc_ok) {
    throw ChecksumError(path.string() + ": CRC-64 mismatch");
  }

  Encoder top(encoder_config, 0);
  Encoder bottom(encoder_config, 0);
  SpatialContextWeights context;
  context.v1 = Tensor::zeros({config.d2, encoder_config.feature_dim()});
  context.v_loc = Tensor::zeros({config.d2, 8});
  context.b2 = Tensor::zeros({config.d2});
  const int dtar = config.mode == TargetMode::kFeature
                       ? encoder_config.feature_dim()
                       : encoder_config.input_size * encoder_config.input_size *
                             encoder_config.channels;
  context.v2 = Tensor::zeros({dtar, config.d2});
  context.b3 = Tensor::zeros({dtar});

  auto fill = [&](const std::string& name, Tensor& tensor) {
    if (!directory.contains(name)) {
      throw DataError(path.string() + ": tensor '" + name +
                      "' missing from directory");
    }
    const auto& entry = directory[name];
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != tensor.shape()) {
      throw DataError(path.string() + ": tensor '" + name +
                      "' has shape " + shape_str(shape) + ", expected " +
                      shape_str(tensor.shape()));
    }
    const auto values = envelope::decode_floats(
        contents.payload, entry.at("offset").get<size_t>(),
        entry.at("length").get<size_t>());
    if (values.size() != tensor.data().size()) {
      throw DataError(path.string() + ": tensor '" + name +
                      "' payload length mismatch");
    }
    tensor.data() = values;
  };

  const auto names = top.parameter_names();
  for (size_t i = 0; i < names.size(); ++i) {
    fill("top." + names[i], top.parameters()[i]);
    fill("bottom." + names[i], bottom.parameters()[i]);
  }
  fill("context.v1", context.v1);
  fill("context.v_loc", context.v_loc);
  fill("context.b2", context.b2);
  fill("context.v2", context.v2);
  fill("context.b3", context.b3);

  return ScnModel(std::move(top), std::move(bottom), std::move(context),
                  config, ablated);
}

}  // namespace scn
