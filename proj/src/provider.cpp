#include "conex/provider.hpp"

#include <algorithm>
#include <filesystem>

#include "conex/cache.hpp"
#include "conex/errors.hpp"
#include "conex/toy_model.hpp"
#include "conex/wire.hpp"

namespace conex {

void ProviderDescriptor::validate() const {
  if (p < 1) throw ProviderError("provider reports p = 0");
  if (class_names.size() < 2) throw ProviderError("provider reports fewer than 2 classes");
}

DenseMatrix embed_checked(EmbeddingProvider& provider, const std::vector<std::string>& texts) {
  DenseMatrix a = provider.embed(texts);
  if (a.rows() != texts.size())
    throw ProviderError("provider returned " + std::to_string(a.rows()) + " rows for " +
                        std::to_string(texts.size()) + " texts");
  if (!a.all_finite()) throw ProviderError("provider returned non-finite activations");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) < 0.0)
        throw NonNegativityViolation("negative activation " + std::to_string(a(i, j)) + " at row " +
                                     std::to_string(i) + ", column " + std::to_string(j) +
                                     "; concept factorization needs h(x) >= 0");
  return a;
}

std::vector<std::size_t> predict(EmbeddingProvider& provider, const std::vector<std::string>& texts) {
  const DenseMatrix z = provider.classify(embed_checked(provider, texts));
  std::vector<std::size_t> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec, const std::string& cache_dir) {
  std::unique_ptr<EmbeddingProvider> base;
  if (spec.rfind("cmd:", 0) == 0) {
    const std::string cmd = spec.substr(4);
    base = std::make_unique<WireProvider>(std::make_unique<ChildProcessChannel>(cmd), "cmd:" + cmd);
  } else if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw ConfigError("tcp provider spec must be tcp:<host>:<port>, got " + spec);
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("invalid port in provider spec " + spec);
    }
    base = std::make_unique<WireProvider>(std::make_unique<TcpChannel>(rest.substr(0, colon), port), spec);
  } else {
    const std::string dir = spec.rfind("builtin:", 0) == 0 ? spec.substr(8) : spec;
    if (!std::filesystem::is_directory(dir))
      throw ConfigError("builtin provider model directory does not exist: " + dir);
    base = std::make_unique<ToyProvider>(load_toy_model(dir));
  }
  base->describe().validate();
  if (cache_dir.empty()) return base;
  return std::make_unique<CachedProvider>(std::move(base), cache_dir);
}

}  // namespace conex
