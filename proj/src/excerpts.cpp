#include "conex/excerpts.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "conex/errors.hpp"
#include "conex/matrix.hpp"

namespace conex {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// ASCII punctuation; bytes >= 0x80 (UTF-8 sequences) count as word characters.
bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

constexpr std::array<std::string_view, 6> kClauseMarkers{"but", "and", "because", "although", "while", "yet"};

Span trim(std::string_view text, Span s) {
  while (s.start < s.end && is_space(text[s.start])) ++s.start;
  while (s.end > s.start && is_space(text[s.end - 1])) --s.end;
  return s;
}

Span trim_separators(std::string_view text, Span s) {
  s = trim(text, s);
  while (s.end > s.start && (text[s.end - 1] == ',' || text[s.end - 1] == ';' || text[s.end - 1] == ':' ||
                             is_space(text[s.end - 1])))
    --s.end;
  return s;
}

std::vector<Span> sentence_spans(std::string_view text, Span within) {
  std::vector<Span> out;
  std::size_t start = within.start;
  for (std::size_t i = within.start; i < within.end; ++i) {
    if (!is_sentence_end(text[i])) continue;
    if (i + 1 == within.end || is_space(text[i + 1])) {
      const Span s = trim(text, {start, i + 1});
      if (s.length() > 0) out.push_back(s);
      start = i + 1;
    }
  }
  const Span tail = trim(text, {start, within.end});
  if (tail.length() > 0) out.push_back(tail);
  return out;
}

std::vector<Span> whitespace_chunks(std::string_view text, Span within) {
  std::vector<Span> out;
  std::size_t i = within.start;
  while (i < within.end) {
    while (i < within.end && is_space(text[i])) ++i;
    if (i >= within.end) break;
    const std::size_t b = i;
    while (i < within.end && !is_space(text[i])) ++i;
    out.push_back({b, i});
  }
  return out;
}

bool starts_with_marker(std::string_view text, Span chunk) {
  std::size_t e = chunk.start;
  while (e < chunk.end && !is_punct(text[e])) ++e;
  std::string word(text.substr(chunk.start, e - chunk.start));
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::find(kClauseMarkers.begin(), kClauseMarkers.end(), word) != kClauseMarkers.end();
}

std::size_t words_in(std::string_view text, Span s) { return count_words(text.substr(s.start, s.length())); }

// Comma splitting only applies when every resulting fragment has at least
// this many words; short runs such as adjective lists stay together.
constexpr std::size_t kMinCommaClauseWords = 3;

void split_commas(std::string_view text, Span piece, std::vector<Span>& out) {
  std::vector<Span> frags;
  std::size_t start = piece.start;
  for (std::size_t i = piece.start; i < piece.end; ++i) {
    if (text[i] == ',' && (i + 1 == piece.end || is_space(text[i + 1]))) {
      frags.push_back(trim_separators(text, {start, i}));
      start = i + 1;
    }
  }
  frags.push_back(trim_separators(text, {start, piece.end}));
  std::erase_if(frags, [](const Span& s) { return s.length() == 0; });
  const bool split_ok = frags.size() > 1 && std::all_of(frags.begin(), frags.end(), [&](const Span& s) {
                          return words_in(text, s) >= kMinCommaClauseWords;
                        });
  if (split_ok) {
    out.insert(out.end(), frags.begin(), frags.end());
  } else {
    const Span s = trim_separators(text, piece);
    if (s.length() > 0) out.push_back(s);
  }
}

std::vector<Span> clause_spans(std::string_view text, Span sentence) {
  std::vector<Span> out;
  const auto chunks = whitespace_chunks(text, sentence);
  std::size_t piece_start = sentence.start;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const Span ch = chunks[c];
    if (c > 0 && starts_with_marker(text, ch)) {
      split_commas(text, {piece_start, ch.start}, out);
      piece_start = ch.start;
    }
    const char last = text[ch.end - 1];
    if (last == ';' || last == ':') {
      split_commas(text, {piece_start, ch.end}, out);
      piece_start = ch.end;
    }
  }
  split_commas(text, {piece_start, sentence.end}, out);
  return out;
}

std::vector<Span> word_spans(std::string_view text, Span within) {
  std::vector<Span> out;
  std::size_t i = within.start;
  auto word_char = [&](std::size_t k) { return !is_space(text[k]) && !is_punct(text[k]); };
  while (i < within.end) {
    while (i < within.end && !word_char(i)) ++i;
    if (i >= within.end) break;
    const std::size_t b = i;
    while (i < within.end) {
      if (word_char(i)) {
        ++i;
      } else if (text[i] == '\'' && i + 1 < within.end && i > b && word_char(i + 1)) {
        ++i;  // inner apostrophe: don't, it's
      } else {
        break;
      }
    }
    out.push_back({b, i});
  }
  return out;
}

}  // namespace

std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::full: return "full";
    case Granularity::sentence: return "sentence";
    case Granularity::clause: return "clause";
    case Granularity::word: return "word";
  }
  return "unknown";
}

Granularity parse_granularity_mode(std::string_view s) {
  if (s == "full") return Granularity::full;
  if (s == "sentence") return Granularity::sentence;
  if (s == "clause") return Granularity::clause;
  if (s == "word") return Granularity::word;
  throw ConfigError("unknown granularity '" + std::string(s) + "' (expected full|sentence|clause|word)");
}

GranularitySpec GranularitySpec::parse(std::string_view s) {
  GranularitySpec spec;
  const auto colon = s.find(':');
  spec.mode = parse_granularity_mode(s.substr(0, colon));
  spec.min_words = spec.mode == Granularity::sentence ? 6 : 1;
  if (colon != std::string_view::npos) {
    const std::string num(s.substr(colon + 1));
    try {
      std::size_t used = 0;
      const long v = std::stol(num, &used);
      if (used != num.size() || v < 1) throw std::invalid_argument(num);
      spec.min_words = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("invalid min_words in granularity '" + std::string(s) + "'");
    }
  }
  return spec;
}

std::string GranularitySpec::str() const {
  if (mode == Granularity::sentence) return "sentence:" + std::to_string(min_words);
  return to_string(mode);
}

void GranularitySpec::validate() const {
  if (min_words < 1) throw ConfigError("min_words must be >= 1");
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<Excerpt> extract(std::string_view doc, const GranularitySpec& spec, const std::string& doc_id) {
  spec.validate();
  const Span all{0, doc.size()};
  std::vector<Span> spans;
  switch (spec.mode) {
    case Granularity::full: {
      const Span s = trim(doc, all);
      if (s.length() > 0) spans.push_back(s);
      break;
    }
    case Granularity::sentence:
      for (const Span& s : sentence_spans(doc, all))
        if (words_in(doc, s) >= spec.min_words) spans.push_back(s);
      break;
    case Granularity::clause:
      for (const Span& s : sentence_spans(doc, all)) {
        auto clauses = clause_spans(doc, s);
        spans.insert(spans.end(), clauses.begin(), clauses.end());
      }
      break;
    case Granularity::word:
      spans = word_spans(doc, all);
      break;
  }
  std::vector<Excerpt> out;
  out.reserve(spans.size());
  for (const Span& s : spans)
    out.push_back({std::string(doc.substr(s.start, s.length())), doc_id, s, spec.mode});
  return out;
}

std::vector<Excerpt> elements(const Excerpt& excerpt, const GranularitySpec& spec) {
  return extract(excerpt.text, spec, excerpt.doc_id);
}

std::string occlude(const Excerpt& excerpt, std::size_t element_index, const GranularitySpec& spec,
                    std::string_view mask_token) {
  const auto elems = elements(excerpt, spec);
  require(element_index < elems.size(), "occlude: element index " + std::to_string(element_index) +
                                            " out of range (excerpt has " + std::to_string(elems.size()) +
                                            " elements)");
  const Span s = elems[element_index].span;
  std::string out = excerpt.text.substr(0, s.start);
  out += mask_token;
  out += excerpt.text.substr(s.end);
  return out;
}

void check_compatible(const GranularitySpec& tau1, const GranularitySpec& tau2) {
  if (tau2.mode == Granularity::clause && tau1.mode != Granularity::full && tau1.mode != Granularity::sentence)
    throw ConfigError("clause-level occlusion requires sentence or full-text excerpts, got " + tau1.str());
  if (tau2.mode == Granularity::full || tau2.mode == Granularity::sentence)
    throw ConfigError("occlusion granularity must be clause or word, got " + tau2.str());
}

void write_excerpts(std::ostream& out, const std::vector<Excerpt>& excerpts) {
  for (const auto& e : excerpts) {
    nlohmann::ordered_json j;
    j["doc_id"] = e.doc_id;
    j["start"] = e.span.start;
    j["end"] = e.span.end;
    j["text"] = e.text;
    j["granularity"] = to_string(e.granularity);
    out << j.dump() << '\n';
  }
}

std::vector<Excerpt> read_excerpts(std::istream& in) {
  std::vector<Excerpt> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Excerpt e;
      e.doc_id = j.at("doc_id").get<std::string>();
      e.span = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
      e.text = j.at("text").get<std::string>();
      e.granularity = parse_granularity_mode(j.at("granularity").get<std::string>());
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError("excerpt record on line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace conex
