#include "ulab/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ulab/error.hpp"

namespace ulab::nn {

using nlohmann::json;

std::string checkpoint_to_json(const Network& net) {
  json layers = json::array();
  for (const auto& layer : net.shape().layers) {
    layers.push_back({{"out", layer.out}, {"activation", activation_name(layer.activation)}});
  }
  json doc;
  doc["format"] = "ulab-network";
  doc["version"] = kCheckpointVersion;
  doc["input_dim"] = net.input_dim();
  doc["layers"] = std::move(layers);
  doc["parameter_count"] = net.parameter_count();
  doc["params"] = net.params().flatten();
  return doc.dump() + "\n";
}

Network checkpoint_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "ulab-network") throw FormatError("not a ulab network checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    NetworkShape shape;
    shape.input_dim = doc.at("input_dim").get<std::size_t>();
    for (const auto& layer : doc.at("layers")) {
      shape.layers.push_back({layer.at("out").get<std::size_t>(),
                              parse_activation(layer.at("activation").get<std::string>())});
    }
    Network net(shape);
    const auto params = doc.at("params").get<std::vector<double>>();
    if (params.size() != net.parameter_count() ||
        doc.at("parameter_count").get<std::size_t>() != net.parameter_count()) {
      throw FormatError("checkpoint parameter count does not match its shape");
    }
    net.params().unflatten(params);
    return net;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("invalid checkpoint shape: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(net);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace ulab::nn
