#ifndef FEWNER_EPISODE_H_
#define FEWNER_EPISODE_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fewner/corpus.h"

namespace fewner {

// One episodic mini-task: `types` holds the M sampled entity types, support
// and query hold disjoint sentences. Indices refer to the source corpus.
struct Episode {
  std::vector<std::string> types;
  std::vector<size_t> support;
  std::vector<size_t> query;

  bool operator==(const Episode &) const = default;
};

// Samples episodes from a fixed corpus; per-sentence type sets are computed
// once at construction.
class EpisodeSampler {
 public:
  explicit EpisodeSampler(const TaggedCorpus &corpus);

  // M types uniformly without replacement. For each type in sampled order,
  // sentences containing it are visited in a seeded order until it has K
  // support and K' query sentences: a sentence already in the support (query)
  // set counts toward the type's support (query), an unused one joins the
  // support set first and the query set once K is reached. Support and
  // query stay disjoint. Throws DataError naming the first type that runs
  // short.
  Episode Sample(int num_types, int support_shots, int query_shots,
                 std::mt19937_64 &rng) const;

  size_t num_types() const { return types_.size(); }

 private:
  std::vector<std::string> types_;
  std::vector<std::vector<std::string>> sentence_types_;
};

Episode SampleEpisode(const TaggedCorpus &corpus, int num_types, int support_shots,
                      int query_shots, uint64_t seed);

}  // namespace fewner

#endif  // FEWNER_EPISODE_H_
