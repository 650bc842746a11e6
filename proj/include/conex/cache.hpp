#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "conex/provider.hpp"

namespace conex {

// Memoizes embed() results on disk, keyed by (provider id, text). Entries are
// appended to <dir>/<provider-hash>.cache as binary records and loaded on
// construction. Reads may run concurrently; writes are serialized.
class CachedProvider final : public EmbeddingProvider {
 public:
  CachedProvider(std::unique_ptr<EmbeddingProvider> inner, const std::filesystem::path& dir);

  ProviderDescriptor describe() override { return inner_->describe(); }
  DenseMatrix embed(const std::vector<std::string>& texts) override;
  DenseMatrix classify(const DenseMatrix& activations) override { return inner_->classify(activations); }
  std::string id() override { return inner_->id(); }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  void load();
  void append(const std::string& text, std::span<const double> row);

  std::unique_ptr<EmbeddingProvider> inner_;
  std::filesystem::path file_;
  std::size_t p_ = 0;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace conex
