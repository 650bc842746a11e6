#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conex/alignment.hpp"
#include "conex/corpus.hpp"
#include "conex/toy_model.hpp"

namespace conex {

// Synthetic review corpus with planted token groups. Every sentence draws its
// content words from a single group. Group 0 appears only in class-1
// documents and group 1 only in class-0 documents; the remaining groups are
// shared noise drawn identically for both classes.
struct PlantedCorpusConfig {
  std::size_t docs = 400;
  std::size_t groups = 8;             // 3..8
  std::size_t signal_sentences_min = 1;
  std::size_t signal_sentences_max = 2;
  std::size_t noise_sentences_min = 2;
  std::size_t noise_sentences_max = 3;
  std::size_t group_words_per_sentence = 4;
  std::size_t filler_words_per_sentence = 3;
  std::uint64_t seed = 0;
};

struct PlantedCorpus {
  std::vector<Document> docs;
  std::vector<std::string> group_names;
  std::vector<std::vector<std::string>> group_words;
  // Each sentence span annotated with its group name as the aspect.
  std::vector<AspectAnnotation> annotations;
};

PlantedCorpus make_planted_corpus(const PlantedCorpusConfig& config);

std::vector<LabeledText> labeled_texts(const std::vector<Document>& docs);

}  // namespace conex
