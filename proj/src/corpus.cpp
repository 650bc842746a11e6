#include "conex/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "conex/errors.hpp"

namespace conex {

std::vector<Document> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus: " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Document d;
      d.doc_id = j.contains("doc_id") ? (j["doc_id"].is_string() ? j["doc_id"].get<std::string>()
                                                                  : j["doc_id"].dump())
                                      : std::to_string(docs.size());
      d.text = j.at("text").get<std::string>();
      if (j.contains("label") && !j["label"].is_null()) d.label = j["label"].get<std::size_t>();
      docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write corpus: " + path.string());
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["doc_id"] = d.doc_id;
    j["text"] = d.text;
    if (d.label) j["label"] = *d.label;
    out << j.dump() << '\n';
  }
}

}  // namespace conex
