#include "fewner/config.h"

#include <array>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace fewner {
namespace {

constexpr std::array<std::pair<Scheme, std::string_view>, 6> kSchemeNames{{
    {Scheme::kLc, "lc"},
    {Scheme::kProto, "proto"},
    {Scheme::kLcNsp, "lc+nsp"},
    {Scheme::kProtoNsp, "proto+nsp"},
    {Scheme::kLcSt, "lc+st"},
    {Scheme::kLcNspSt, "lc+nsp+st"},
}};

constexpr std::array<std::pair<DataSetting, std::string_view>, 3> kSettingNames{{
    {DataSetting::kFewShot, "5-shot"},
    {DataSetting::kTenPercent, "10%"},
    {DataSetting::kFull, "100%"},
}};

}  // namespace

Scheme ParseScheme(std::string_view name) {
  for (const auto &[scheme, text] : kSchemeNames) {
    if (text == name) return scheme;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (expected lc, proto, lc+nsp, proto+nsp, lc+st, lc+nsp+st)");
}

std::string SchemeName(Scheme scheme) {
  for (const auto &[s, text] : kSchemeNames) {
    if (s == scheme) return std::string(text);
  }
  return "?";
}

bool UsesNoisyPretraining(Scheme scheme) {
  return scheme == Scheme::kLcNsp || scheme == Scheme::kProtoNsp ||
         scheme == Scheme::kLcNspSt;
}

bool UsesSelfTraining(Scheme scheme) {
  return scheme == Scheme::kLcSt || scheme == Scheme::kLcNspSt;
}

bool UsesPrototypes(Scheme scheme) {
  return scheme == Scheme::kProto || scheme == Scheme::kProtoNsp;
}

DataSetting ParseDataSetting(std::string_view name) {
  for (const auto &[setting, text] : kSettingNames) {
    if (text == name) return setting;
  }
  throw std::invalid_argument("unknown data setting '" + std::string(name) +
                              "' (expected 5-shot, 10% or 100%)");
}

std::string DataSettingName(DataSetting setting) {
  for (const auto &[s, text] : kSettingNames) {
    if (s == setting) return std::string(text);
  }
  return "?";
}

TrainConfig TrainConfig::ForSetting(DataSetting setting) {
  TrainConfig config;
  config.setting = setting;
  if (setting == DataSetting::kFewShot) {
    config.batch_size = 4;
    config.learning_rate = 1e-4;
    config.support_shots = 2;
    config.query_shots = 3;
  }
  return config;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw std::invalid_argument("warmup_fraction must lie in [0, 1]");
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (episode_types < 1 || support_shots < 1 || query_shots < 1) {
    throw std::invalid_argument("M, K and K_prime must be positive");
  }
  if (!(lambda_u >= 0.0)) throw std::invalid_argument("lambda_u must be >= 0");
  if (embed_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("embed_dim and hidden_dim must be positive");
  }
}

TrainConfig ParseTrainConfig(std::string_view json_text,
                             std::optional<uint64_t> seed_override) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");

  TrainConfig config;
  try {
    config = TrainConfig::ForSetting(doc.contains("setting")
                                         ? ParseDataSetting(doc["setting"].get<std::string>())
                                         : DataSetting::kFull);
    bool has_seed = false;
    for (const auto &[key, value] : doc.items()) {
      if (key == "setting") {
        continue;
      } else if (key == "scheme") {
        config.scheme = ParseScheme(value.get<std::string>());
      } else if (key == "batch_size") {
        config.batch_size = value.get<int>();
      } else if (key == "learning_rate") {
        config.learning_rate = value.get<double>();
      } else if (key == "warmup_fraction") {
        config.warmup_fraction = value.get<double>();
      } else if (key == "epochs") {
        config.epochs = value.get<int>();
      } else if (key == "M") {
        config.episode_types = value.get<int>();
      } else if (key == "K") {
        config.support_shots = value.get<int>();
      } else if (key == "K_prime") {
        config.query_shots = value.get<int>();
      } else if (key == "lambda_u") {
        config.lambda_u = value.get<double>();
      } else if (key == "freeze_encoder") {
        config.freeze_encoder = value.get<bool>();
      } else if (key == "embed_dim") {
        config.embed_dim = value.get<int>();
      } else if (key == "hidden_dim") {
        config.hidden_dim = value.get<int>();
      } else if (key == "seed") {
        config.seed = value.get<uint64_t>();
        has_seed = true;
      } else {
        throw std::invalid_argument("unknown config field '" + key + "'");
      }
    }
    if (seed_override) {
      config.seed = *seed_override;
    } else if (!has_seed) {
      throw std::invalid_argument("config must set 'seed'");
    }
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  config.Validate();
  return config;
}

std::string TrainConfigToJson(const TrainConfig &config) {
  nlohmann::json doc;
  doc["scheme"] = SchemeName(config.scheme);
  doc["setting"] = DataSettingName(config.setting);
  doc["batch_size"] = config.batch_size;
  doc["learning_rate"] = config.learning_rate;
  doc["warmup_fraction"] = config.warmup_fraction;
  doc["epochs"] = config.epochs;
  doc["M"] = config.episode_types;
  doc["K"] = config.support_shots;
  doc["K_prime"] = config.query_shots;
  doc["lambda_u"] = config.lambda_u;
  doc["freeze_encoder"] = config.freeze_encoder;
  doc["embed_dim"] = config.embed_dim;
  doc["hidden_dim"] = config.hidden_dim;
  doc["seed"] = config.seed;
  return doc.dump(2);
}

}  // namespace fewner
