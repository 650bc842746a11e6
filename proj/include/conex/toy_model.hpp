#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conex/matrix.hpp"
#include "conex/provider.hpp"

namespace conex {

// Bag-of-words classifier: mean token embedding -> ReLU hidden layer (the
// non-negative activation h) -> linear head (c).
struct ToyModel {
  static constexpr std::size_t kOov = 0;
  static constexpr std::size_t kMask = static_cast<std::size_t>(-1);

  std::vector<std::string> vocab;  // vocab[0] is the OOV entry
  DenseMatrix embed_weights;       // V x d
  DenseMatrix hidden_weights;      // d x p
  std::vector<double> hidden_bias; // p
  DenseMatrix head_weights;        // p x C
  std::vector<double> head_bias;   // C
  std::vector<std::string> class_names;
  std::string mask_token = "[MASK]";
  std::string trained_on;
  std::uint64_t seed = 0;

  std::size_t d() const { return embed_weights.cols(); }
  std::size_t p() const { return hidden_weights.cols(); }
  std::size_t num_classes() const { return head_weights.cols(); }

  // Rebuilds the token lookup after vocab changes.
  void index_vocab();
  void validate() const;

  // Lowercased word tokens; the mask token maps to kMask, unknown words to kOov.
  std::vector<std::size_t> tokenize(std::string_view text) const;
  // Mean embedding; the mask token contributes a zero vector to the mean.
  std::vector<double> pooled(std::string_view text) const;
  std::vector<double> activation(std::string_view text) const;
  std::vector<double> logits(std::span<const double> activation) const;

  std::string fingerprint() const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct LabeledText {
  std::string text;
  std::size_t label = 0;
};

struct ToyTrainConfig {
  std::size_t d = 16;
  std::size_t p = 64;
  int epochs = 30;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;  // defaults to "0".."C-1"
  std::string corpus_id;
};

struct ToyTrainResult {
  ToyModel model;
  double train_accuracy = 0.0;
};

// Per-example SGD on softmax cross-entropy; deterministic given the seed.
ToyTrainResult train_toy(const std::vector<LabeledText>& corpus, const ToyTrainConfig& config);

double accuracy(const ToyModel& model, const std::vector<LabeledText>& corpus);

// Directory: model.json plus MatrixFile weights.
void save_toy_model(const ToyModel& model, const std::filesystem::path& dir);
ToyModel load_toy_model(const std::filesystem::path& dir);

// Thread-safe: all methods are const over an immutable model.
class ToyProvider final : public EmbeddingProvider {
 public:
  explicit ToyProvider(ToyModel model);

  ProviderDescriptor describe() override;
  DenseMatrix embed(const std::vector<std::string>& texts) override;
  DenseMatrix classify(const DenseMatrix& activations) override;
  std::string id() override { return id_; }

  const ToyModel& model() const { return model_; }

 private:
  ToyModel model_;
  std::string id_;
};

}  // namespace conex
