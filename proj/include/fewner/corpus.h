// Tagged corpora in CoNLL column format: parsing, schema conversion, chunk
// extraction, few-shot subsampling and summary statistics.

#ifndef FEWNER_CORPUS_H_
#define FEWNER_CORPUS_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fewner {

enum class Schema { kBio, kIo };

// Accepts "bio" / "io" in any case. Throws std::invalid_argument otherwise.
Schema ParseSchema(std::string_view name);
std::string SchemaName(Schema schema);

inline constexpr std::string_view kOutsideTag = "O";

// Error raised while reading CoNLL text. line() is 1-based, 0 when the error
// is not tied to a particular line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string &message, int line);
  int line() const { return line_; }

 private:
  int line_;
};

// Error raised when the data cannot satisfy a request (sampling budget,
// vocabulary mismatch, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A split tag. prefix is 'O', 'B' or 'I'; type is empty for 'O'.
struct TagParts {
  char prefix = 'O';
  std::string type;
};

// Splits a tag following the "O" / "<prefix>-<type>" grammar. Returns false
// when the tag is not well formed or its prefix is not allowed by the schema.
bool SplitTag(std::string_view tag, Schema schema, TagParts *parts);

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;

  size_t size() const { return tokens.size(); }
  bool operator==(const TokenSequence &) const = default;
};

// Entity types, tagging schema and the tag vocabulary derived from them.
// Vocabulary order: "O", then for each type in order B-X, I-X (BIO) or I-X
// (IO).
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::vector<std::string> entity_types, Schema schema);

  const std::vector<std::string> &entity_types() const { return entity_types_; }
  Schema schema() const { return schema_; }
  const std::vector<std::string> &tag_vocabulary() const { return tags_; }
  size_t num_tags() const { return tags_.size(); }

  // Index of a tag in the vocabulary, -1 if absent.
  int TagIndex(std::string_view tag) const;
  bool HasType(std::string_view type) const;

  bool operator==(const LabelSet &other) const {
    return schema_ == other.schema_ && entity_types_ == other.entity_types_;
  }

 private:
  std::vector<std::string> entity_types_;
  Schema schema_ = Schema::kBio;
  std::vector<std::string> tags_{std::string(kOutsideTag)};
  std::map<std::string, int, std::less<>> index_{{std::string(kOutsideTag), 0}};
};

struct TaggedCorpus {
  std::vector<TokenSequence> sentences;
  LabelSet labels;

  bool operator==(const TaggedCorpus &) const = default;
};

// Half-open token span [start, end) of one entity type.
struct Chunk {
  std::string type;
  int start = 0;
  int end = 0;

  auto operator<=>(const Chunk &) const = default;
};

TaggedCorpus ParseConll(std::string_view text, Schema schema);

// Two-column "token tag" output, blank line after every sentence. Parsing the
// result with the corpus schema gives back an equal corpus.
std::string WriteConll(const TaggedCorpus &corpus);

// Throws ParseError naming the offending sentence if a tag is not in the
// label set.
void ValidateCorpus(const TaggedCorpus &corpus);

std::vector<std::string> ConvertTags(const std::vector<std::string> &tags,
                                     Schema from, Schema to);
TaggedCorpus ConvertSchema(const TaggedCorpus &corpus, Schema target);

// Maximal entity spans. Under BIO an I-X that does not continue a chunk of
// the same type opens a new one.
std::vector<Chunk> ExtractChunks(const std::vector<std::string> &tags,
                                 Schema schema);

// Entity types occurring in a sentence, in label-set order.
std::vector<std::string> TypesInSentence(const TokenSequence &sentence,
                                         Schema schema);

// Greedy per-type subsampling: for each type in label-set order, draw
// sentences containing it (without replacement, seeded order) until `shots`
// selected sentences contain the type. Selected sentences keep corpus order.
TaggedCorpus SampleFewShot(const TaggedCorpus &corpus, int shots,
                           uint64_t seed);

struct CorpusStats {
  size_t sentences = 0;
  size_t tokens = 0;
  size_t entity_types = 0;
  std::map<std::string, size_t> chunks_per_type;

  bool operator==(const CorpusStats &) const = default;
};

CorpusStats ComputeStats(const TaggedCorpus &corpus);

// {"sentences":..,"tokens":..,"entity_types":..,"chunks_per_type":{..}}
std::string StatsToJson(const CorpusStats &stats);

}  // namespace fewner

#endif  // FEWNER_CORPUS_H_
