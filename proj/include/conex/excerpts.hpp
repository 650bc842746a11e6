#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace conex {

enum class Granularity { full, sentence, clause, word };

std::string to_string(Granularity g);
Granularity parse_granularity_mode(std::string_view s);

struct GranularitySpec {
  Granularity mode = Granularity::sentence;
  std::size_t min_words = 1;  // applied in sentence mode only

  // "full", "sentence", "sentence:6", "clause", "word". Sentence mode
  // defaults to 6 words when no count is given.
  static GranularitySpec parse(std::string_view s);
  std::string str() const;
  void validate() const;
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive, byte offsets
  std::size_t length() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Excerpt {
  std::string text;
  std::string doc_id;
  Span span;
  Granularity granularity = Granularity::full;
};

// Splits `doc` into ordered, non-overlapping excerpts at the given granularity.
std::vector<Excerpt> extract(std::string_view doc, const GranularitySpec& spec, const std::string& doc_id = "");

// τ₂ elements of an excerpt; spans are relative to excerpt.text.
std::vector<Excerpt> elements(const Excerpt& excerpt, const GranularitySpec& spec);

// Excerpt text with element `element_index` replaced by `mask_token`.
std::string occlude(const Excerpt& excerpt, std::size_t element_index, const GranularitySpec& spec,
                    std::string_view mask_token = "[MASK]");

// Clause-level occlusion needs excerpts at least as coarse as sentences.
void check_compatible(const GranularitySpec& tau1, const GranularitySpec& tau2);

std::size_t count_words(std::string_view text);

// Newline-delimited JSON {doc_id, start, end, text, granularity}.
void write_excerpts(std::ostream& out, const std::vector<Excerpt>& excerpts);
std::vector<Excerpt> read_excerpts(std::istream& in);

}  // namespace conex
