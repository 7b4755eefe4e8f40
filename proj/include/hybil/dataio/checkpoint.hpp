#pragma once

// Checkpoint directory:
//   header.json            format, version, kind, dims, schema, parameter ids and shapes
//   <id>.weights.eegt      one container per parameter tensor
//   <id>.bias.eegt

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "hybil/dataio/schema.hpp"
#include "hybil/dataio/tensor_io.hpp"
#include "hybil/models/model.hpp"

namespace hybil {

inline constexpr std::string_view kCheckpointFormat = "hybil-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  LabelSchema schema;
};

inline void save_checkpoint(const std::filesystem::path& dir, const Model& model, const LabelSchema& schema) {
  if (schema.size() != model.num_classes()) {
    throw CheckpointError("schema " + schema.name() + " has " + std::to_string(schema.size()) + " classes, model " +
                          std::to_string(model.num_classes()));
  }
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json h;
  h["format"] = kCheckpointFormat;
  h["version"] = kCheckpointVersion;
  h["kind"] = to_string(model.kind());
  h["num_classes"] = model.num_classes();
  h["schema"] = schema.name();
  const auto& d = model.dims();
  h["dims"] = {{"cnn_filters1", d.cnn_filters1},
               {"cnn_filters2", d.cnn_filters2},
               {"lstm_hidden1", d.lstm_hidden1},
               {"feature_dim", d.feature_dim}};
  h["params"] = nlohmann::ordered_json::array();
  for (const auto* p : model.parameters()) {
    h["params"].push_back({{"id", p->id}, {"weights", p->weights.shape()}, {"bias", p->bias.shape()}});
    write_tensor(dir / (p->id + ".weights.eegt"), p->weights);
    write_tensor(dir / (p->id + ".bias.eegt"), p->bias);
  }
  std::ofstream(dir / "header.json") << h.dump(2) << '\n';
}

namespace detail {

inline nlohmann::json read_checkpoint_header(const std::filesystem::path& dir) {
  std::ifstream in(dir / "header.json");
  if (!in) throw CheckpointError("cannot open " + (dir / "header.json").string());
  nlohmann::json h;
  try {
    in >> h;
    if (h.at("format").get<std::string>() != kCheckpointFormat) throw CheckpointError("not a checkpoint header");
    if (h.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + h.at("version").dump());
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError((dir / "header.json").string() + ": " + e.what());
  }
  return h;
}

inline Tensor read_param_tensor(const std::filesystem::path& dir, const std::string& id, const char* part,
                                const Shape& declared) {
  Tensor t;
  try {
    t = read_tensor(dir / (id + "." + part + ".eegt"));
  } catch (const FormatError& e) {
    throw CheckpointError("parameter '" + id + "' " + part + ": " + e.what());
  }
  if (t.shape() != declared) {
    throw CheckpointError("parameter '" + id + "' " + part + " has shape " + shape_string(t.shape()) +
                          ", header declares " + shape_string(declared));
  }
  return t;
}

// Parameters listed in the header, read and checked against their declared shapes.
inline std::vector<LayerParams> read_checkpoint_params(const std::filesystem::path& dir, const nlohmann::json& h) {
  std::vector<LayerParams> out;
  try {
    for (const auto& p : h.at("params")) {
      const auto id = p.at("id").get<std::string>();
      out.push_back({id, read_param_tensor(dir, id, "weights", p.at("weights").get<Shape>()),
                     read_param_tensor(dir, id, "bias", p.at("bias").get<Shape>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError((dir / "header.json").string() + ": " + e.what());
  }
  return out;
}

}  // namespace detail

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto h = detail::read_checkpoint_header(dir);
  ModelKind kind = ModelKind::cnn;
  ModelDims dims;
  std::size_t k = 0;
  LabelSchema schema;
  try {
    kind = parse_model_kind(h.at("kind").get<std::string>());
    k = h.at("num_classes").get<std::size_t>();
    const auto& d = h.at("dims");
    dims = {d.at("cnn_filters1").get<std::size_t>(), d.at("cnn_filters2").get<std::size_t>(),
            d.at("lstm_hidden1").get<std::size_t>(), d.at("feature_dim").get<std::size_t>()};
    schema = schema_by_name(h.at("schema").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError((dir / "header.json").string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError((dir / "header.json").string() + ": " + e.what());
  }
  if (schema.size() != k) {
    throw CheckpointError("checkpoint schema " + schema.name() + " does not have " + std::to_string(k) + " classes");
  }
  Model model(kind, k, dims, 0);
  const auto saved = detail::read_checkpoint_params(dir, h);
  for (LayerParams* dst : model.parameters()) {
    auto it = std::find_if(saved.begin(), saved.end(), [&](const LayerParams& p) { return p.id == dst->id; });
    if (it == saved.end()) throw CheckpointError("parameter '" + dst->id + "' missing from checkpoint");
    if (it->weights.shape() != dst->weights.shape() || it->bias.shape() != dst->bias.shape()) {
      throw CheckpointError("parameter '" + dst->id + "' has shape " + shape_string(it->weights.shape()) + ", " +
                            std::string(to_string(kind)) + " model expects " + shape_string(dst->weights.shape()));
    }
    *dst = *it;
  }
  if (saved.size() != model.parameters().size()) {
    for (const auto& p : saved) {
      if (!model.find_parameter(p.id)) throw CheckpointError("parameter '" + p.id + "' does not belong to the model");
    }
  }
  return {std::move(model), std::move(schema)};
}

// Loads the extractor of a base-model checkpoint into stream `s` of `target`.
inline void load_extractor_checkpoint(Model& target, Stream s, const std::filesystem::path& dir) {
  const auto h = detail::read_checkpoint_header(dir);
  target.load_extractor(s, detail::read_checkpoint_params(dir, h));
}

}  // namespace hybil
