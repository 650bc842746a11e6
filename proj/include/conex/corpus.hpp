#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace conex {

struct Document {
  std::string doc_id;
  std::string text;
  std::optional<std::size_t> label;
};

// Newline-delimited JSON {doc_id, text, label?}. Missing doc_id defaults to
// the 0-based line index.
std::vector<Document> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

}  // namespace conex
