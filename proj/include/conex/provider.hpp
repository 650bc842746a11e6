#pragma once

#include <memory>
#include <string>
#include <vector>

#include "conex/matrix.hpp"

namespace conex {

struct ProviderDescriptor {
  std::size_t p = 0;
  std::vector<std::string> class_names;
  bool nonneg_certified = false;
  std::string mask_token = "[MASK]";

  void validate() const;
};

// The model split f = c ∘ h: `embed` evaluates h on texts, `classify` evaluates
// c on activation rows. Implementations document their thread safety.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual ProviderDescriptor describe() = 0;
  // n x p, row order follows `texts`.
  virtual DenseMatrix embed(const std::vector<std::string>& texts) = 0;
  // n x C logits.
  virtual DenseMatrix classify(const DenseMatrix& activations) = 0;
  // Stable identity of the provider state, used as a cache namespace.
  virtual std::string id() = 0;
};

// embed() followed by a non-negativity and finiteness check.
DenseMatrix embed_checked(EmbeddingProvider& provider, const std::vector<std::string>& texts);

// Row-wise argmax of classify(embed(texts)).
std::vector<std::size_t> predict(EmbeddingProvider& provider, const std::vector<std::string>& texts);

// "builtin:<dir>" (or a bare model directory), "cmd:<shell command>",
// "tcp:<host>:<port>". A non-empty cache_dir wraps the result in a
// persistent embedding cache.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec, const std::string& cache_dir = "");

}  // namespace conex
