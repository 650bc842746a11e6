#include "conex/planted_corpus.hpp"

#include <array>
#include <cctype>

#include "conex/errors.hpp"
#include "conex/rng.hpp"

namespace conex {
namespace {

struct Theme {
  const char* name;
  std::array<const char*, 6> words;
};

constexpr std::array<Theme, 8> kThemes{{
    {"praise", {"delightful", "superb", "wonderful", "brilliant", "charming", "excellent"}},
    {"complaint", {"dreadful", "awful", "terrible", "boring", "clumsy", "dull"}},
    {"appearance", {"amber", "hazy", "golden", "pour", "foam", "lacing"}},
    {"aroma", {"citrus", "pine", "floral", "malty", "aroma", "nose"}},
    {"palate", {"body", "carbonation", "creamy", "thin", "mouthfeel", "smooth"}},
    {"plot", {"plot", "story", "twist", "ending", "script", "pacing"}},
    {"cast", {"actor", "cast", "director", "role", "performance", "villain"}},
    {"setting", {"city", "winter", "village", "harbor", "forest", "castle"}},
}};

constexpr std::array<const char*, 8> kFiller{"the", "a", "this", "was", "with", "of", "very", "quite"};

std::string make_sentence(Rng& rng, const Theme& theme, const PlantedCorpusConfig& cfg) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < cfg.group_words_per_sentence; ++i) words.push_back(theme.words[rng.below(theme.words.size())]);
  for (std::size_t i = 0; i < cfg.filler_words_per_sentence; ++i) words.push_back(kFiller[rng.below(kFiller.size())]);
  rng.shuffle(words);
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

}  // namespace

PlantedCorpus make_planted_corpus(const PlantedCorpusConfig& cfg) {
  if (cfg.groups < 3 || cfg.groups > kThemes.size())
    throw ConfigError("planted corpus supports 3..8 groups, got " + std::to_string(cfg.groups));
  if (cfg.signal_sentences_min > cfg.signal_sentences_max || cfg.noise_sentences_min > cfg.noise_sentences_max ||
      cfg.signal_sentences_min < 1 || cfg.group_words_per_sentence < 1)
    throw ConfigError("planted corpus: inconsistent sentence counts");

  PlantedCorpus pc;
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    pc.group_names.emplace_back(kThemes[g].name);
    pc.group_words.emplace_back(kThemes[g].words.begin(), kThemes[g].words.end());
  }
  Rng rng(cfg.seed);
  for (std::size_t d = 0; d < cfg.docs; ++d) {
    const std::size_t label = d % 2 == 0 ? 1 : 0;
    const std::size_t signal_group = label == 1 ? 0 : 1;
    std::vector<std::size_t> groups(between(rng, cfg.signal_sentences_min, cfg.signal_sentences_max), signal_group);
    const std::size_t noise = between(rng, cfg.noise_sentences_min, cfg.noise_sentences_max);
    for (std::size_t i = 0; i < noise; ++i) groups.push_back(2 + rng.below(cfg.groups - 2));
    rng.shuffle(groups);

    Document doc;
    doc.doc_id = "d" + std::to_string(d);
    doc.label = label;
    for (std::size_t g : groups) {
      if (!doc.text.empty()) doc.text += ' ';
      const std::size_t start = doc.text.size();
      doc.text += make_sentence(rng, kThemes[g], cfg);
      AspectAnnotation* slot = nullptr;
      for (auto& a : pc.annotations)
        if (a.doc_id == doc.doc_id && a.aspect == kThemes[g].name) slot = &a;
      if (!slot) {
        pc.annotations.push_back({doc.doc_id, kThemes[g].name, {}});
        slot = &pc.annotations.back();
      }
      slot->spans.push_back({start, doc.text.size()});
    }
    pc.docs.push_back(std::move(doc));
  }
  return pc;
}

std::vector<LabeledText> labeled_texts(const std::vector<Document>& docs) {
  std::vector<LabeledText> out;
  for (const auto& d : docs) {
    if (!d.label) throw DataError("document " + d.doc_id + " has no label");
    out.push_back({d.text, *d.label});
  }
  return out;
}

}  // namespace conex
