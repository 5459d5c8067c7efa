#include "fewner/episode.h"

#include <algorithm>
#include <numeric>

namespace fewner {

EpisodeSampler::EpisodeSampler(const TaggedCorpus &corpus)
    : types_(corpus.labels.entity_types()) {
  sentence_types_.reserve(corpus.sentences.size());
  for (const TokenSequence &sentence : corpus.sentences) {
    sentence_types_.push_back(TypesInSentence(sentence, corpus.labels.schema()));
  }
}

Episode EpisodeSampler::Sample(int num_types, int support_shots, int query_shots,
                               std::mt19937_64 &rng) const {
  if (num_types < 1 || support_shots < 1 || query_shots < 1) {
    throw std::invalid_argument("episode sizes must be positive");
  }
  if (static_cast<size_t>(num_types) > types_.size()) {
    throw DataError("episode asks for " + std::to_string(num_types) +
                    " entity types, corpus has " + std::to_string(types_.size()));
  }
  Episode episode;
  episode.types = types_;
  std::shuffle(episode.types.begin(), episode.types.end(), rng);
  episode.types.resize(num_types);

  std::vector<size_t> order(sentence_types_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  enum class Role { kUnused, kSupport, kQuery };
  std::vector<Role> role(sentence_types_.size(), Role::kUnused);
  for (const std::string &type : episode.types) {
    int support = 0;
    int query = 0;
    for (size_t idx : order) {
      if (support == support_shots && query == query_shots) break;
      const auto &contained = sentence_types_[idx];
      if (std::find(contained.begin(), contained.end(), type) == contained.end()) continue;
      switch (role[idx]) {
        case Role::kSupport:
          if (support < support_shots) ++support;
          break;
        case Role::kQuery:
          if (query < query_shots) ++query;
          break;
        case Role::kUnused:
          if (support < support_shots) {
            role[idx] = Role::kSupport;
            episode.support.push_back(idx);
            ++support;
          } else if (query < query_shots) {
            role[idx] = Role::kQuery;
            episode.query.push_back(idx);
            ++query;
          }
          break;
      }
    }
    if (support < support_shots || query < query_shots) {
      throw DataError("not enough sentences for entity type '" + type + "': need " +
                      std::to_string(support_shots) + " support and " +
                      std::to_string(query_shots) + " query, found " +
                      std::to_string(support) + " and " + std::to_string(query));
    }
  }
  return episode;
}

Episode SampleEpisode(const TaggedCorpus &corpus, int num_types, int support_shots,
                      int query_shots, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return EpisodeSampler(corpus).Sample(num_types, support_shots, query_shots, rng);
}

}  // namespace fewner
