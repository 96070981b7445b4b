// core/src/checkpoint.cc

// Copyright 2026  The subemb authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "subemb/checkpoint.h"

#include <fstream>

#include "json.hpp"
#include "subemb/serialize_util.h"

namespace subemb {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'E', 'M', 'B', 'C', 'K', 'P', 'T'};
constexpr uint64_t kFormatVersion = 1;

json AblationToJson(const AblationFlags &a) {
  return json{{"variation_augmentation", a.variation_augmentation},
              {"confidence_aware", a.confidence_aware},
              {"multiple_embeddings", a.multiple_embeddings},
              {"decorrelation", a.decorrelation}};
}

AblationFlags AblationFromJson(const json &j) {
  AblationFlags a;
  a.variation_augmentation = j.at("variation_augmentation").get<bool>();
  a.confidence_aware = j.at("confidence_aware").get<bool>();
  a.multiple_embeddings = j.at("multiple_embeddings").get<bool>();
  a.decorrelation = j.at("decorrelation").get<bool>();
  return a;
}

json TrainConfigToJson(const TrainConfig &c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr_encoder", c.lr_encoder},
              {"lr_prototypes", c.lr_prototypes},
              {"lr_discriminator", c.lr_discriminator},
              {"momentum", c.momentum},
              {"lambda_reg", c.lambda_reg},
              {"lambda_cls", c.lambda_cls},
              {"lambda_adv", c.lambda_adv},
              {"margin", c.margin},
              {"embedding_dim", c.embedding_dim},
              {"group_count", c.group_count},
              {"hidden_dims", c.hidden_dims},
              {"nonlinearity", c.nonlinearity},
              {"initial_confidence", c.initial_confidence},
              {"ablation", AblationToJson(c.ablation)},
              {"augment_families",
               std::vector<bool>(c.augment_families.begin(),
                                 c.augment_families.end())},
              {"augment_probability", c.augment_probability},
              {"seed", c.seed},
              {"threads", c.threads},
              {"save_interval", c.save_interval}};
}

TrainConfig TrainConfigFromJson(const json &j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr_encoder = j.at("lr_encoder").get<double>();
  c.lr_prototypes = j.at("lr_prototypes").get<double>();
  c.lr_discriminator = j.at("lr_discriminator").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.lambda_reg = j.at("lambda_reg").get<double>();
  c.lambda_cls = j.at("lambda_cls").get<double>();
  c.lambda_adv = j.at("lambda_adv").get<double>();
  c.margin = j.at("margin").get<double>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.group_count = j.at("group_count").get<int>();
  c.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  c.nonlinearity = j.at("nonlinearity").get<std::string>();
  c.initial_confidence = j.at("initial_confidence").get<double>();
  c.ablation = AblationFromJson(j.at("ablation"));
  const auto fams = j.at("augment_families").get<std::vector<bool>>();
  for (size_t i = 0; i < c.augment_families.size() && i < fams.size(); ++i)
    c.augment_families[i] = fams[i];
  c.augment_probability = j.at("augment_probability").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.save_interval = j.at("save_interval").get<int>();
  return c;
}

struct TensorRef {
  std::string name;
  const Vec *data;
};

std::vector<TensorRef> TensorDirectory(const ModelBundle &bundle) {
  std::vector<TensorRef> dir;
  for (size_t i = 0; i < bundle.encoder.trunk.size(); ++i) {
    const std::string base = "encoder.trunk." + std::to_string(i);
    dir.push_back({base + ".weight", &bundle.encoder.trunk[i].weight.Data()});
    dir.push_back({base + ".bias", &bundle.encoder.trunk[i].bias});
  }
  dir.push_back({"encoder.embed_head.weight",
                 &bundle.encoder.embed_head.weight.Data()});
  dir.push_back({"encoder.embed_head.bias", &bundle.encoder.embed_head.bias});
  dir.push_back({"encoder.conf_head.weight",
                 &bundle.encoder.conf_head.weight.Data()});
  dir.push_back({"encoder.conf_head.bias", &bundle.encoder.conf_head.bias});
  dir.push_back({"prototypes", &bundle.bank.prototypes.Data()});
  dir.push_back({"discriminator.weight", &bundle.disc.weight.Data()});
  dir.push_back({"discriminator.bias", &bundle.disc.bias});
  return dir;
}

std::vector<Vec *> MutableTensors(ModelBundle *bundle) {
  std::vector<Vec *> out;
  for (LinearLayer &layer : bundle->encoder.trunk) {
    out.push_back(&layer.weight.Data());
    out.push_back(&layer.bias);
  }
  out.push_back(&bundle->encoder.embed_head.weight.Data());
  out.push_back(&bundle->encoder.embed_head.bias);
  out.push_back(&bundle->encoder.conf_head.weight.Data());
  out.push_back(&bundle->encoder.conf_head.bias);
  out.push_back(&bundle->bank.prototypes.Data());
  out.push_back(&bundle->disc.weight.Data());
  out.push_back(&bundle->disc.bias);
  return out;
}

}  // namespace

void SaveBundle(const ModelBundle &bundle, const std::string &path) {
  json masks_json = json::array();
  for (const auto &mask : bundle.masks.masks)
    masks_json.push_back(std::vector<int>(mask.begin(), mask.end()));

  const std::vector<TensorRef> dir = TensorDirectory(bundle);
  json tensors = json::array();
  for (const TensorRef &t : dir)
    tensors.push_back({{"name", t.name}, {"count", t.data->size()}});

  json header = {
      {"kind", "subemb-checkpoint"},
      {"version", kFormatVersion},
      {"tool_version", kToolVersion},
      {"encoder",
       {{"input_dim", bundle.encoder.config.input_dim},
        {"hidden_dims", bundle.encoder.config.hidden_dims},
        {"embedding_dim", bundle.encoder.config.embedding_dim},
        {"group_count", bundle.encoder.config.group_count},
        {"nonlinearity", bundle.encoder.config.nonlinearity},
        {"initial_confidence", bundle.encoder.config.initial_confidence}}},
      {"n_identities", bundle.bank.n_identities},
      {"n_variations", bundle.disc.NumVariations()},
      {"masks", {{"group_count", bundle.masks.group_count},
                 {"masks", masks_json}}},
      {"ablation", AblationToJson(bundle.ablation)},
      {"shared_confidence", bundle.shared_confidence},
      {"confidence_finetuned", bundle.confidence_finetuned},
      {"train_config", TrainConfigToJson(bundle.train_config)},
      {"tensors", tensors},
  };
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  WriteU64(out, kFormatVersion);
  WriteU64(out, header_bytes.size());
  out.write(header_bytes.data(),
            static_cast<std::streamsize>(header_bytes.size()));
  for (const TensorRef &t : dir)
    for (double v : *t.data) WriteF64(out, v);
  if (!out) throw ConfigError("failed writing checkpoint " + path);
}

ModelBundle LoadBundle(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path);
  char magic[8] = {};
  in.read(magic, 8);
  if (std::string(magic, 8) != std::string(kMagic, 8))
    throw ConfigError(path + ": not a subemb checkpoint");
  const uint64_t version = ReadU64(in);
  if (version != kFormatVersion)
    throw ConfigError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
  const uint64_t header_len = ReadU64(in);
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ConfigError(path + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(header_bytes);
  } catch (const json::exception &e) {
    throw ConfigError(path + ": malformed checkpoint header: " + e.what());
  }

  ModelBundle bundle;
  const json &enc = header.at("encoder");
  EncoderConfig cfg;
  cfg.input_dim = enc.at("input_dim").get<int>();
  cfg.hidden_dims = enc.at("hidden_dims").get<std::vector<int>>();
  cfg.embedding_dim = enc.at("embedding_dim").get<int>();
  cfg.group_count = enc.at("group_count").get<int>();
  cfg.nonlinearity = enc.at("nonlinearity").get<std::string>();
  cfg.initial_confidence = enc.at("initial_confidence").get<double>();
  cfg.Validate();

  // Allocate all tensors at their declared shapes, then fill from payload.
  bundle.encoder.config = cfg;
  int in_dim = cfg.input_dim;
  for (int width : cfg.hidden_dims) {
    LinearLayer layer;
    layer.weight = Mat(width, in_dim);
    layer.bias = Vec(width, 0.0);
    bundle.encoder.trunk.push_back(std::move(layer));
    in_dim = width;
  }
  bundle.encoder.embed_head.weight = Mat(cfg.embedding_dim, in_dim);
  bundle.encoder.embed_head.bias = Vec(cfg.embedding_dim, 0.0);
  bundle.encoder.conf_head.weight = Mat(cfg.group_count, in_dim);
  bundle.encoder.conf_head.bias = Vec(cfg.group_count, 0.0);

  const int n_identities = header.at("n_identities").get<int>();
  bundle.bank.n_identities = n_identities;
  bundle.bank.group_count = cfg.group_count;
  bundle.bank.group_dim = cfg.GroupDim();
  bundle.bank.prototypes = Mat(n_identities, cfg.embedding_dim);

  const int n_variations = header.at("n_variations").get<int>();
  bundle.disc.weight = Mat(n_variations, cfg.embedding_dim);
  bundle.disc.bias = Vec(n_variations, 0.0);

  const json &masks_json = header.at("masks");
  bundle.masks.group_count = masks_json.at("group_count").get<int>();
  for (const auto &m : masks_json.at("masks")) {
    const auto ints = m.get<std::vector<int>>();
    bundle.masks.masks.emplace_back(ints.begin(), ints.end());
  }

  bundle.ablation = AblationFromJson(header.at("ablation"));
  bundle.shared_confidence = header.at("shared_confidence").get<double>();
  bundle.confidence_finetuned =
      header.at("confidence_finetuned").get<bool>();
  bundle.train_config = TrainConfigFromJson(header.at("train_config"));

  const std::vector<Vec *> tensors = MutableTensors(&bundle);
  const json &dir = header.at("tensors");
  if (dir.size() != tensors.size())
    throw ConfigError(path + ": tensor directory mismatch");
  for (size_t i = 0; i < tensors.size(); ++i) {
    const uint64_t count = dir[i].at("count").get<uint64_t>();
    if (count != tensors[i]->size())
      throw ConfigError(path + ": tensor '" +
                        dir[i].at("name").get<std::string>() +
                        "' has unexpected size");
    for (double &v : *tensors[i]) v = ReadF64(in);
  }
  if (!in) throw ConfigError(path + ": truncated checkpoint payload");
  return bundle;
}

}  // namespace subemb
