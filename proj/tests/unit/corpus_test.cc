#include "doctest.h"
#include "fewner/corpus.h"

#include <algorithm>
#include <set>

namespace fewner {
namespace {

TaggedCorpus Fixture() {
  return ParseConll(
      "EU B-ORG\nrejects O\nGerman B-MISC\ncall O\n\n"
      "Peter B-PER\nBlackburn I-PER\n\n"
      "BRUSSELS B-LOC\n1996-08-22 O\n\n"
      "Japan B-LOC\nbeat O\nSyria B-LOC\nand O\nSony B-ORG\n\n"
      "Mr O\nSmith B-PER\nof O\nIBM B-ORG\n\n",
      Schema::kBio);
}

TEST_CASE("schema names parse case-insensitively") {
  CHECK(ParseSchema("bio") == Schema::kBio);
  CHECK(ParseSchema("IO") == Schema::kIo);
  CHECK_THROWS_AS(ParseSchema("bioes"), std::invalid_argument);
  CHECK(SchemaName(Schema::kIo) == "io");
}

TEST_CASE("SplitTag follows the schema grammar") {
  TagParts parts;
  CHECK(SplitTag("B-PER", Schema::kBio, &parts));
  CHECK(parts.prefix == 'B');
  CHECK(parts.type == "PER");
  CHECK(SplitTag("O", Schema::kIo, &parts));
  CHECK(parts.prefix == 'O');
  CHECK_FALSE(SplitTag("B-PER", Schema::kIo, &parts));
  CHECK_FALSE(SplitTag("X-PER", Schema::kBio, &parts));
  CHECK_FALSE(SplitTag("B-", Schema::kBio, &parts));
  CHECK_FALSE(SplitTag("BPER", Schema::kBio, &parts));
}

TEST_CASE("LabelSet builds the tag vocabulary") {
  LabelSet bio({"LOC", "PER"}, Schema::kBio);
  CHECK(bio.tag_vocabulary() ==
        std::vector<std::string>{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
  CHECK(bio.TagIndex("I-PER") == 4);
  CHECK(bio.TagIndex("B-ORG") == -1);
  LabelSet io({"LOC"}, Schema::kIo);
  CHECK(io.tag_vocabulary() == std::vector<std::string>{"O", "I-LOC"});
  CHECK_THROWS_AS(LabelSet({"A", "A"}, Schema::kBio), std::invalid_argument);
}

TEST_CASE("ParseConll on empty input") {
  TaggedCorpus corpus = ParseConll("", Schema::kBio);
  CHECK(corpus.sentences.empty());
  CHECK(corpus.labels.entity_types().empty());
}

TEST_CASE("ParseConll reads a two-token sentence") {
  TaggedCorpus corpus = ParseConll("EU B-ORG\nrejects O\n\n", Schema::kBio);
  REQUIRE(corpus.sentences.size() == 1);
  CHECK(corpus.sentences[0].tokens == std::vector<std::string>{"EU", "rejects"});
  CHECK(corpus.labels.entity_types() == std::vector<std::string>{"ORG"});
}

TEST_CASE("ParseConll accepts an orphan I tag under BIO") {
  TaggedCorpus corpus = ParseConll("Bush I-PER\n\n", Schema::kBio);
  REQUIRE(corpus.sentences.size() == 1);
  CHECK(corpus.sentences[0].tags == std::vector<std::string>{"I-PER"});
}

TEST_CASE("ParseConll tolerates extra columns, repeated blanks and DOCSTART") {
  TaggedCorpus corpus = ParseConll(
      "-DOCSTART- -X- O O\n\nEU NNP B-NP B-ORG\n\n\n\nrejects VBZ B-VP O\n", Schema::kBio);
  REQUIRE(corpus.sentences.size() == 2);
  CHECK(corpus.sentences[0].tags == std::vector<std::string>{"B-ORG"});
  CHECK(corpus.sentences[1].tokens == std::vector<std::string>{"rejects"});
}

TEST_CASE("ParseConll reports the offending line") {
  try {
    ParseConll("EU B-ORG\nrejects\n", Schema::kBio);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 2);
  }
  try {
    ParseConll("a O\n\nb B-LOC\n", Schema::kIo);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("WriteConll round-trips") {
  TaggedCorpus corpus = Fixture();
  CHECK(ParseConll(WriteConll(corpus), Schema::kBio) == corpus);
}

TEST_CASE("ConvertTags between schemas") {
  using Tags = std::vector<std::string>;
  CHECK(ConvertTags({"B-PER", "I-PER", "O"}, Schema::kBio, Schema::kIo) ==
        Tags{"I-PER", "I-PER", "O"});
  CHECK(ConvertTags({"O", "O"}, Schema::kBio, Schema::kIo) == Tags{"O", "O"});
  CHECK(ConvertTags({"I-LOC", "I-LOC", "O", "I-LOC"}, Schema::kIo, Schema::kBio) ==
        Tags{"B-LOC", "I-LOC", "O", "B-LOC"});
  CHECK(ConvertTags({"I-LOC", "I-PER"}, Schema::kIo, Schema::kBio) == Tags{"B-LOC", "B-PER"});
}

TEST_CASE("ExtractChunks") {
  using Chunks = std::vector<Chunk>;
  CHECK(ExtractChunks({"B-PER", "I-PER", "O", "B-LOC"}, Schema::kBio) ==
        Chunks{{"PER", 0, 2}, {"LOC", 3, 4}});
  CHECK(ExtractChunks({"O", "O", "O"}, Schema::kBio).empty());
  CHECK(ExtractChunks({"O", "I-PER", "I-PER"}, Schema::kBio) == Chunks{{"PER", 1, 3}});
  CHECK(ExtractChunks({"B-PER", "B-PER"}, Schema::kBio) == Chunks{{"PER", 0, 1}, {"PER", 1, 2}});
  CHECK(ExtractChunks({"B-PER", "I-LOC"}, Schema::kBio) == Chunks{{"PER", 0, 1}, {"LOC", 1, 2}});
  CHECK(ExtractChunks({"I-PER", "I-PER", "I-LOC"}, Schema::kIo) ==
        Chunks{{"PER", 0, 2}, {"LOC", 2, 3}});
}

TEST_CASE("SampleFewShot covers every type") {
  TaggedCorpus corpus = Fixture();
  const int shots = 1;
  TaggedCorpus sample = SampleFewShot(corpus, shots, 5);
  CHECK(sample.sentences.size() <= corpus.labels.entity_types().size() * shots);
  CHECK(sample.labels == corpus.labels);
  for (const std::string &type : {"LOC", "MISC", "ORG", "PER"}) {
    int covered = 0;
    for (const TokenSequence &s : sample.sentences) {
      std::vector<std::string> types = TypesInSentence(s, Schema::kBio);
      covered += std::count(types.begin(), types.end(), type);
    }
    CHECK(covered >= shots);
  }
  CHECK(SampleFewShot(corpus, shots, 5) == sample);
  CHECK_THROWS_WITH_AS(SampleFewShot(corpus, 2, 5), doctest::Contains("MISC"), DataError);
}

TEST_CASE("SampleFewShot on a single-type corpus returns exactly shots sentences") {
  std::string text;
  for (int i = 0; i < 20; ++i) text += "w" + std::to_string(i) + " B-X\nrest O\n\n";
  TaggedCorpus corpus = ParseConll(text, Schema::kBio);
  CHECK(SampleFewShot(corpus, 5, 1).sentences.size() == 5);
}

TEST_CASE("SampleFewShot keeps corpus order") {
  std::string text;
  for (int i = 0; i < 30; ++i) text += "w" + std::to_string(i) + " B-X\n\n";
  TaggedCorpus corpus = ParseConll(text, Schema::kBio);
  TaggedCorpus sample = SampleFewShot(corpus, 6, 9);
  std::vector<int> ids;
  for (const TokenSequence &s : sample.sentences) ids.push_back(std::stoi(s.tokens[0].substr(1)));
  CHECK(std::is_sorted(ids.begin(), ids.end()));
}

TEST_CASE("ComputeStats") {
  CorpusStats empty = ComputeStats(ParseConll("", Schema::kBio));
  CHECK(empty.sentences == 0);
  CHECK(empty.tokens == 0);
  CHECK(empty.chunks_per_type.empty());

  CorpusStats one = ComputeStats(ParseConll("EU B-ORG\nrejects O\n\n", Schema::kBio));
  CHECK(one.sentences == 1);
  CHECK(one.tokens == 2);
  CHECK(one.entity_types == 1);
  CHECK(one.chunks_per_type.at("ORG") == 1);

  CorpusStats fixture = ComputeStats(Fixture());
  CHECK(fixture.sentences == 5);
  CHECK(fixture.tokens == 17);
  CHECK(fixture.chunks_per_type.at("LOC") == 3);
  CHECK(fixture.chunks_per_type.at("MISC") == 1);
  CHECK(fixture.chunks_per_type.at("ORG") == 3);
  CHECK(fixture.chunks_per_type.at("PER") == 2);
  CHECK(StatsToJson(one).find("\"chunks_per_type\"") != std::string::npos);
}

}  // namespace
}  // namespace fewner
