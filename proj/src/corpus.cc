#include "fewner/corpus.h"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fewner {
namespace {

bool IsBlank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string> SplitColumns(std::string_view line) {
  std::vector<std::string> columns;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) columns.emplace_back(line.substr(start, i - start));
  }
  return columns;
}

}  // namespace

Schema ParseSchema(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "bio") return Schema::kBio;
  if (lower == "io") return Schema::kIo;
  throw std::invalid_argument("unknown tagging schema '" + std::string(name) +
                              "' (expected bio or io)");
}

std::string SchemaName(Schema schema) {
  return schema == Schema::kBio ? "bio" : "io";
}

ParseError::ParseError(const std::string &message, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                  : message),
      line_(line) {}

bool SplitTag(std::string_view tag, Schema schema, TagParts *parts) {
  if (tag == kOutsideTag) {
    parts->prefix = 'O';
    parts->type.clear();
    return true;
  }
  if (tag.size() < 3 || tag[1] != '-') return false;
  char prefix = tag[0];
  if (prefix != 'I' && !(prefix == 'B' && schema == Schema::kBio)) return false;
  std::string_view type = tag.substr(2);
  if (type == kOutsideTag) return false;
  parts->prefix = prefix;
  parts->type.assign(type);
  return true;
}

LabelSet::LabelSet(std::vector<std::string> entity_types, Schema schema)
    : entity_types_(std::move(entity_types)), schema_(schema) {
  std::set<std::string, std::less<>> seen;
  for (const std::string &type : entity_types_) {
    if (type.empty() || type == kOutsideTag) {
      throw std::invalid_argument("invalid entity type name '" + type + "'");
    }
    if (!seen.insert(type).second) {
      throw std::invalid_argument("duplicate entity type '" + type + "'");
    }
    if (schema_ == Schema::kBio) tags_.push_back("B-" + type);
    tags_.push_back("I-" + type);
  }
  for (size_t i = 0; i < tags_.size(); ++i) index_[tags_[i]] = static_cast<int>(i);
}

int LabelSet::TagIndex(std::string_view tag) const {
  auto it = index_.find(tag);
  return it == index_.end() ? -1 : it->second;
}

bool LabelSet::HasType(std::string_view type) const {
  return std::find(entity_types_.begin(), entity_types_.end(), type) !=
         entity_types_.end();
}

TaggedCorpus ParseConll(std::string_view text, Schema schema) {
  TaggedCorpus corpus;
  std::set<std::string> types;
  TokenSequence current;
  TagParts parts;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = TokenSequence();
  };

  int line_number = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (IsBlank(line)) {
      flush();
      continue;
    }
    if (line.starts_with("-DOCSTART-")) {
      flush();
      continue;
    }
    std::vector<std::string> columns = SplitColumns(line);
    if (columns.size() < 2) {
      throw ParseError("malformed line, expected a token and a tag column",
                       line_number);
    }
    const std::string &tag = columns.back();
    if (!SplitTag(tag, schema, &parts)) {
      throw ParseError("tag '" + tag + "' is not valid under the " +
                           SchemaName(schema) + " schema",
                       line_number);
    }
    if (parts.prefix != 'O') types.insert(parts.type);
    current.tokens.push_back(std::move(columns.front()));
    current.tags.push_back(tag);
  }
  flush();

  corpus.labels = LabelSet(std::vector<std::string>(types.begin(), types.end()), schema);
  return corpus;
}

std::string WriteConll(const TaggedCorpus &corpus) {
  std::string out;
  for (const TokenSequence &sentence : corpus.sentences) {
    for (size_t i = 0; i < sentence.size(); ++i) {
      out += sentence.tokens[i];
      out += ' ';
      out += sentence.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void ValidateCorpus(const TaggedCorpus &corpus) {
  for (size_t s = 0; s < corpus.sentences.size(); ++s) {
    const TokenSequence &sentence = corpus.sentences[s];
    if (sentence.tokens.empty() || sentence.tokens.size() != sentence.tags.size()) {
      throw ParseError("sentence " + std::to_string(s) +
                           " is empty or has mismatched token/tag counts",
                       0);
    }
    for (const std::string &tag : sentence.tags) {
      if (corpus.labels.TagIndex(tag) < 0) {
        throw ParseError("sentence " + std::to_string(s) + ": tag '" + tag +
                             "' is not in the tag vocabulary",
                         0);
      }
    }
  }
}

std::vector<std::string> ConvertTags(const std::vector<std::string> &tags,
                                     Schema from, Schema to) {
  if (from == to) return tags;
  std::vector<std::string> out;
  out.reserve(tags.size());
  TagParts parts;
  if (to == Schema::kIo) {
    for (const std::string &tag : tags) {
      if (SplitTag(tag, Schema::kBio, &parts) && parts.prefix != 'O') {
        out.push_back("I-" + parts.type);
      } else {
        out.emplace_back(kOutsideTag);
      }
    }
    return out;
  }
  // IO -> BIO: the first tag of every maximal same-type run becomes B-X.
  std::string previous_type;
  for (const std::string &tag : tags) {
    if (SplitTag(tag, Schema::kBio, &parts) && parts.prefix != 'O') {
      out.push_back((parts.type == previous_type ? "I-" : "B-") + parts.type);
      previous_type = parts.type;
    } else {
      out.emplace_back(kOutsideTag);
      previous_type.clear();
    }
  }
  return out;
}

TaggedCorpus ConvertSchema(const TaggedCorpus &corpus, Schema target) {
  TaggedCorpus out;
  out.labels = LabelSet(corpus.labels.entity_types(), target);
  out.sentences.reserve(corpus.sentences.size());
  for (const TokenSequence &sentence : corpus.sentences) {
    out.sentences.push_back(
        {sentence.tokens, ConvertTags(sentence.tags, corpus.labels.schema(), target)});
  }
  return out;
}

std::vector<Chunk> ExtractChunks(const std::vector<std::string> &tags,
                                 Schema schema) {
  std::vector<Chunk> chunks;
  bool open = false;
  Chunk current;
  TagParts parts;
  auto close = [&](int end) {
    if (open) {
      current.end = end;
      chunks.push_back(current);
      open = false;
    }
  };
  for (size_t i = 0; i < tags.size(); ++i) {
    int pos = static_cast<int>(i);
    // Tags outside the grammar are read as outside tokens.
    if (!SplitTag(tags[i], Schema::kBio, &parts) || parts.prefix == 'O') {
      close(pos);
      continue;
    }
    bool continues = open && current.type == parts.type &&
                     (parts.prefix == 'I' || schema == Schema::kIo);
    if (!continues) {
      close(pos);
      current.type = parts.type;
      current.start = pos;
      open = true;
    }
  }
  close(static_cast<int>(tags.size()));
  return chunks;
}

std::vector<std::string> TypesInSentence(const TokenSequence &sentence,
                                         Schema schema) {
  std::set<std::string> types;
  for (const Chunk &chunk : ExtractChunks(sentence.tags, schema)) {
    types.insert(chunk.type);
  }
  return {types.begin(), types.end()};
}

TaggedCorpus SampleFewShot(const TaggedCorpus &corpus, int shots, uint64_t seed) {
  if (shots <= 0) throw std::invalid_argument("shots must be positive");
  const Schema schema = corpus.labels.schema();
  const std::vector<std::string> &types = corpus.labels.entity_types();

  std::vector<std::vector<std::string>> sentence_types;
  sentence_types.reserve(corpus.sentences.size());
  std::map<std::string, int> available;
  for (const TokenSequence &sentence : corpus.sentences) {
    sentence_types.push_back(TypesInSentence(sentence, schema));
    for (const std::string &type : sentence_types.back()) ++available[type];
  }
  for (const std::string &type : types) {
    if (available[type] < shots) {
      throw DataError("entity type '" + type + "' occurs in only " +
                      std::to_string(available[type]) + " sentences, " +
                      std::to_string(shots) + " requested");
    }
  }

  std::vector<size_t> order(corpus.sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> selected(corpus.sentences.size(), false);
  std::map<std::string, int> covered;
  for (const std::string &type : types) {
    for (size_t idx : order) {
      if (covered[type] >= shots) break;
      if (selected[idx]) continue;
      const auto &contained = sentence_types[idx];
      if (!std::binary_search(contained.begin(), contained.end(), type)) continue;
      selected[idx] = true;
      for (const std::string &t : contained) ++covered[t];
    }
  }

  TaggedCorpus out;
  out.labels = corpus.labels;
  for (size_t i = 0; i < corpus.sentences.size(); ++i) {
    if (selected[i]) out.sentences.push_back(corpus.sentences[i]);
  }
  return out;
}

CorpusStats ComputeStats(const TaggedCorpus &corpus) {
  CorpusStats stats;
  stats.sentences = corpus.sentences.size();
  stats.entity_types = corpus.labels.entity_types().size();
  for (const std::string &type : corpus.labels.entity_types()) {
    stats.chunks_per_type[type] = 0;
  }
  for (const TokenSequence &sentence : corpus.sentences) {
    stats.tokens += sentence.size();
    for (const Chunk &chunk : ExtractChunks(sentence.tags, corpus.labels.schema())) {
      ++stats.chunks_per_type[chunk.type];
    }
  }
  return stats;
}

std::string StatsToJson(const CorpusStats &stats) {
  nlohmann::json doc;
  doc["sentences"] = stats.sentences;
  doc["tokens"] = stats.tokens;
  doc["entity_types"] = stats.entity_types;
  doc["chunks_per_type"] = nlohmann::json::object();
  for (const auto &[type, count] : stats.chunks_per_type) {
    doc["chunks_per_type"][type] = count;
  }
  return doc.dump(2);
}

}  // namespace fewner
