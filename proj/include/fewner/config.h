// Training configuration and the scheme names used on the command line.

#ifndef FEWNER_CONFIG_H_
#define FEWNER_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fewner {

enum class Scheme { kLc, kProto, kLcNsp, kProtoNsp, kLcSt, kLcNspSt };

Scheme ParseScheme(std::string_view name);
std::string SchemeName(Scheme scheme);
bool UsesNoisyPretraining(Scheme scheme);
bool UsesSelfTraining(Scheme scheme);
bool UsesPrototypes(Scheme scheme);

// Labeled-data regimes with their own default hyperparameters.
enum class DataSetting { kFewShot, kTenPercent, kFull };

DataSetting ParseDataSetting(std::string_view name);
std::string DataSettingName(DataSetting setting);

struct TrainConfig {
  Scheme scheme = Scheme::kLc;
  DataSetting setting = DataSetting::kFull;
  int batch_size = 16;
  double learning_rate = 5e-5;
  double warmup_fraction = 0.1;
  int epochs = 10;
  int episode_types = 5;   // M
  int support_shots = 5;   // K
  int query_shots = 15;    // K'
  double lambda_u = 0.5;
  bool freeze_encoder = false;
  int embed_dim = 32;
  int hidden_dim = 64;
  uint64_t seed = 0;

  // Defaults for a data setting: batch 4, lr 1e-4, (K, K') = (2, 3) for
  // few-shot; batch 16, lr 5e-5, (K, K') = (5, 15) otherwise.
  static TrainConfig ForSetting(DataSetting setting);

  // Throws std::invalid_argument describing the first violated constraint.
  void Validate() const;
  bool operator==(const TrainConfig &) const = default;
};

// Reads a JSON object. "setting" (if present) selects the defaults, the other
// keys override them. Unknown keys are rejected. "seed" is required unless
// seed_override is given, which then takes precedence.
TrainConfig ParseTrainConfig(std::string_view json_text,
                             std::optional<uint64_t> seed_override = std::nullopt);

std::string TrainConfigToJson(const TrainConfig &config);

}  // namespace fewner

#endif  // FEWNER_CONFIG_H_
