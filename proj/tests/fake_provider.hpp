#pragma once

#include <atomic>
#include <map>
#include <stdexcept>

#include "conex/provider.hpp"

namespace testutil {

// Linear head over given activations; texts are looked up in a fixed table.
class LinearProvider final : public conex::EmbeddingProvider {
 public:
  LinearProvider(conex::DenseMatrix head, std::vector<double> bias) : head_(std::move(head)), bias_(std::move(bias)) {}

  std::map<std::string, std::vector<double>> table;

  conex::ProviderDescriptor describe() override {
    conex::ProviderDescriptor d;
    d.p = head_.rows();
    for (std::size_t c = 0; c < head_.cols(); ++c) d.class_names.push_back("c" + std::to_string(c));
    d.nonneg_certified = true;
    return d;
  }
  conex::DenseMatrix embed(const std::vector<std::string>& texts) override {
    ++embed_calls;
    conex::DenseMatrix out(texts.size(), head_.rows());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto it = table.find(texts[i]);
      if (it == table.end()) throw std::out_of_range("no activation for '" + texts[i] + "'");
      std::copy(it->second.begin(), it->second.end(), out.row(i).begin());
    }
    return out;
  }
  conex::DenseMatrix classify(const conex::DenseMatrix& a) override {
    conex::DenseMatrix out(a.rows(), head_.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t c = 0; c < head_.cols(); ++c) {
        double z = bias_[c];
        for (std::size_t j = 0; j < a.cols(); ++j) z += a(i, j) * head_(j, c);
        out(i, c) = z;
      }
    return out;
  }
  std::string id() override { return "linear-test"; }

  std::atomic<int> embed_calls{0};

 private:
  conex::DenseMatrix head_;
  std::vector<double> bias_;
};

}  // namespace testutil
