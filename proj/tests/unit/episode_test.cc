#include "doctest.h"
#include "fewner/episode.h"
#include "support/synthetic.h"

#include <algorithm>
#include <set>

namespace fewner {
namespace {

TaggedCorpus Corpus() {
  std::mt19937_64 rng(1);
  testing::Grammar g;
  g.fillers = testing::NumberedWords("w", 20);
  for (const char *name : {"A", "B", "C", "D", "E", "F"}) {
    g.types.push_back({name, testing::NumberedWords(std::string(name) + "_", 4), {}});
  }
  return testing::DrawCorpus(g, 300, rng);
}

TEST_CASE("episodes hold disjoint support and query sets") {
  TaggedCorpus corpus = Corpus();
  Episode e = SampleEpisode(corpus, 5, 2, 3, 7);
  CHECK(e.types.size() == 5);
  CHECK(e.support.size() <= 10);
  CHECK(e.query.size() <= 15);
  std::set<size_t> support(e.support.begin(), e.support.end());
  for (size_t q : e.query) CHECK_FALSE(support.count(q));
  for (const std::string &type : e.types) {
    int in_support = 0;
    int in_query = 0;
    for (size_t i : e.support) {
      auto t = TypesInSentence(corpus.sentences[i], Schema::kBio);
      in_support += std::count(t.begin(), t.end(), type);
    }
    for (size_t i : e.query) {
      auto t = TypesInSentence(corpus.sentences[i], Schema::kBio);
      in_query += std::count(t.begin(), t.end(), type);
    }
    CHECK(in_support >= 2);
    CHECK(in_query >= 3);
  }
}

TEST_CASE("sampling every type returns the whole label set") {
  TaggedCorpus corpus = Corpus();
  Episode e = SampleEpisode(corpus, 6, 2, 3, 1);
  std::vector<std::string> types = e.types;
  std::sort(types.begin(), types.end());
  CHECK(types == corpus.labels.entity_types());
}

TEST_CASE("episodes are deterministic in the seed") {
  TaggedCorpus corpus = Corpus();
  CHECK(SampleEpisode(corpus, 3, 2, 3, 11) == SampleEpisode(corpus, 3, 2, 3, 11));
  CHECK_FALSE(SampleEpisode(corpus, 3, 2, 3, 11) == SampleEpisode(corpus, 3, 2, 3, 12));
}

TEST_CASE("a short type is reported") {
  TaggedCorpus corpus = ParseConll("a B-X\n\nb B-X\n\nc B-Y\n\n", Schema::kBio);
  CHECK_THROWS_WITH_AS(SampleEpisode(corpus, 2, 1, 1, 0), doctest::Contains("Y"), DataError);
  CHECK_THROWS_AS(SampleEpisode(corpus, 3, 1, 1, 0), DataError);
  CHECK_THROWS_AS(SampleEpisode(corpus, 1, 0, 1, 0), std::invalid_argument);
}

}  // namespace
}  // namespace fewner
