#include "conex/cache.hpp"

#include <cstdio>
#include <cstdint>
#include <fstream>
#include <mutex>

#include "conex/errors.hpp"
#include "conex/rng.hpp"

namespace conex {

// Record: u64 text length, text bytes, u64 p, p f64 values (native byte order).
CachedProvider::CachedProvider(std::unique_ptr<EmbeddingProvider> inner, const std::filesystem::path& dir)
    : inner_(std::move(inner)) {
  std::filesystem::create_directories(dir);
  char name[32];
  std::snprintf(name, sizeof name, "%016llx.cache", static_cast<unsigned long long>(fnv1a64(inner_->id())));
  file_ = dir / name;
  p_ = inner_->describe().p;
  load();
}

void CachedProvider::load() {
  std::ifstream in(file_, std::ios::binary);
  if (!in) return;
  while (true) {
    std::uint64_t len = 0, p = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) break;
    std::string text(len, '\0');
    std::vector<double> row;
    if (!in.read(text.data(), static_cast<std::streamsize>(len)) ||
        !in.read(reinterpret_cast<char*>(&p), sizeof p))
      break;  // torn tail record from an interrupted run
    row.resize(p);
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(p * sizeof(double)))) break;
    if (p != p_) throw DataError("embedding cache " + file_.string() + " has rows of width " + std::to_string(p) +
                                 ", provider p = " + std::to_string(p_));
    entries_[std::move(text)] = std::move(row);
  }
}

void CachedProvider::append(const std::string& text, std::span<const double> row) {
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  const std::uint64_t len = text.size(), p = row.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(len));
  out.write(reinterpret_cast<const char*>(&p), sizeof p);
  out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(p * sizeof(double)));
}

DenseMatrix CachedProvider::embed(const std::vector<std::string>& texts) {
  DenseMatrix out(texts.size(), p_);
  std::vector<std::size_t> missing;
  {
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto it = entries_.find(texts[i]);
      if (it == entries_.end()) {
        missing.push_back(i);
      } else {
        std::copy(it->second.begin(), it->second.end(), out.row(i).begin());
        ++hits_;
      }
    }
  }
  if (missing.empty()) return out;
  std::vector<std::string> batch;
  batch.reserve(missing.size());
  for (std::size_t i : missing) batch.push_back(texts[i]);
  const DenseMatrix fresh = inner_->embed(batch);
  if (fresh.rows() != batch.size() || fresh.cols() != p_)
    throw ProviderError("provider returned " + shape_str(fresh) + " for " + std::to_string(batch.size()) + " texts");
  std::unique_lock lock(mutex_);
  for (std::size_t b = 0; b < missing.size(); ++b) {
    auto row = fresh.row(b);
    std::copy(row.begin(), row.end(), out.row(missing[b]).begin());
    ++misses_;
    if (entries_.emplace(batch[b], std::vector<double>(row.begin(), row.end())).second && row.size() == p_ &&
        fresh.all_finite())
      append(batch[b], row);
  }
  return out;
}

}  // namespace conex
