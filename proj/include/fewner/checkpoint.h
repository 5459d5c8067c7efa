// Model checkpoints: encoder parameters plus a head descriptor, stored as a
// versioned JSON document. Doubles are written in shortest round-trip form
// so loading reproduces every parameter bit for bit.

#ifndef FEWNER_CHECKPOINT_H_
#define FEWNER_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "fewner/corpus.h"
#include "fewner/encoder.h"
#include "fewner/heads.h"

namespace fewner {

inline constexpr int kCheckpointFormatVersion = 1;

enum class HeadKind { kLinear, kPrototype };

std::string HeadKindName(HeadKind kind);

struct Checkpoint {
  EncoderParams encoder;
  LabelSet labels;
  HeadKind head_kind = HeadKind::kLinear;
  // Only meaningful for linear heads. Prototype heads are rebuilt from a
  // support set at inference time.
  LinearHead linear;

  bool operator==(const Checkpoint &other) const;
};

std::string SerializeCheckpoint(const Checkpoint &checkpoint);
// Throws std::runtime_error on malformed documents or version mismatch.
Checkpoint DeserializeCheckpoint(std::string_view text);

void SaveCheckpoint(const Checkpoint &checkpoint, const std::filesystem::path &path);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace fewner

#endif  // FEWNER_CHECKPOINT_H_
