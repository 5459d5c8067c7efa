#include "fewner/checkpoint.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fewner {
namespace {

using nlohmann::json;

// Row-major flattening; Matrix is row-major so data() order is used as is.
template <typename Derived>
json ToArray(const Eigen::PlainObjectBase<Derived> &values) {
  return json(std::vector<double>(values.data(), values.data() + values.size()));
}

Matrix MatrixFrom(const json &array, Eigen::Index rows, Eigen::Index cols,
                  const char *name) {
  std::vector<double> flat = array.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw std::runtime_error(std::string("checkpoint field '") + name +
                             "' has the wrong number of values");
  }
  return Eigen::Map<const Matrix>(flat.data(), rows, cols);
}

Vector VectorFrom(const json &array, Eigen::Index size, const char *name) {
  std::vector<double> flat = array.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != size) {
    throw std::runtime_error(std::string("checkpoint field '") + name +
                             "' has the wrong number of values");
  }
  return Eigen::Map<const Vector>(flat.data(), size);
}

}  // namespace

std::string HeadKindName(HeadKind kind) {
  return kind == HeadKind::kLinear ? "linear" : "prototype";
}

bool Checkpoint::operator==(const Checkpoint &other) const {
  if (!(encoder == other.encoder) || !(labels == other.labels) ||
      head_kind != other.head_kind) {
    return false;
  }
  return head_kind != HeadKind::kLinear || linear == other.linear;
}

std::string SerializeCheckpoint(const Checkpoint &checkpoint) {
  const EncoderParams &enc = checkpoint.encoder;
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["E"] = enc.embed_dim;
  doc["H"] = enc.hidden_dim;
  // Reserved entries are implicit.
  doc["vocab"] = std::vector<std::string>(enc.vocab.entries().begin() + 2,
                                          enc.vocab.entries().end());
  doc["embeddings"] = ToArray(enc.embeddings);
  doc["context_weights"] = ToArray(enc.weights);
  doc["context_bias"] = ToArray(enc.bias);

  json head;
  head["kind"] = HeadKindName(checkpoint.head_kind);
  head["schema"] = SchemaName(checkpoint.labels.schema());
  head["entity_types"] = checkpoint.labels.entity_types();
  head["tags"] = checkpoint.labels.tag_vocabulary();
  if (checkpoint.head_kind == HeadKind::kLinear) {
    head["W"] = ToArray(checkpoint.linear.weights);
    head["b"] = ToArray(checkpoint.linear.bias);
  }
  doc["head"] = std::move(head);
  return doc.dump() + "\n";
}

Checkpoint DeserializeCheckpoint(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception &e) {
    throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw std::runtime_error("unsupported checkpoint format_version " +
                               doc.at("format_version").dump());
    }
    Checkpoint checkpoint;
    EncoderParams &enc = checkpoint.encoder;
    enc.embed_dim = doc.at("E").get<int>();
    enc.hidden_dim = doc.at("H").get<int>();
    enc.vocab = Vocabulary(doc.at("vocab").get<std::vector<std::string>>());
    enc.embeddings = MatrixFrom(doc.at("embeddings"), enc.vocab.size(), enc.embed_dim,
                                "embeddings");
    enc.weights = MatrixFrom(doc.at("context_weights"), enc.hidden_dim,
                             3 * enc.embed_dim, "context_weights");
    enc.bias = VectorFrom(doc.at("context_bias"), enc.hidden_dim, "context_bias");
    enc.Validate();

    const json &head = doc.at("head");
    const std::string kind = head.at("kind").get<std::string>();
    if (kind == "linear") {
      checkpoint.head_kind = HeadKind::kLinear;
    } else if (kind == "prototype") {
      checkpoint.head_kind = HeadKind::kPrototype;
    } else {
      throw std::runtime_error("unknown head kind '" + kind + "'");
    }
    checkpoint.labels =
        LabelSet(head.at("entity_types").get<std::vector<std::string>>(),
                 ParseSchema(head.at("schema").get<std::string>()));
    if (head.at("tags").get<std::vector<std::string>>() !=
        checkpoint.labels.tag_vocabulary()) {
      throw std::runtime_error("checkpoint tag ordering does not match its entity types");
    }
    if (checkpoint.head_kind == HeadKind::kLinear) {
      const Eigen::Index tags = static_cast<Eigen::Index>(checkpoint.labels.num_tags());
      checkpoint.linear.weights = MatrixFrom(head.at("W"), tags, enc.hidden_dim, "W");
      checkpoint.linear.bias = VectorFrom(head.at("b"), tags, "b");
    }
    return checkpoint;
  } catch (const json::exception &e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint &checkpoint, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << SerializeCheckpoint(checkpoint);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DeserializeCheckpoint(buffer.str());
}

}  // namespace fewner
