#include "conex/toy_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "conex/errors.hpp"
#include "conex/matrix_file.hpp"
#include "conex/rng.hpp"

namespace conex {
namespace {

bool word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

// Lowercased alphanumeric runs of one whitespace chunk.
void split_words(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < chunk.size()) {
    while (i < chunk.size() && !word_char(chunk[i])) ++i;
    const std::size_t b = i;
    while (i < chunk.size() && word_char(chunk[i])) ++i;
    if (i > b) {
      std::string w(chunk.substr(b, i - b));
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
      out.push_back(std::move(w));
    }
  }
}

// Whitespace chunks; chunks equal to the mask token are kept verbatim and
// flagged so the caller can map them to the zero embedding.
template <class Fn>
void for_each_token(std::string_view text, std::string_view mask_token, Fn&& fn) {
  std::size_t i = 0;
  std::vector<std::string> words;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t b = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == b) continue;
    const std::string_view chunk = text.substr(b, i - b);
    if (!mask_token.empty() && chunk == mask_token) {
      fn(std::string_view{}, true);
      continue;
    }
    words.clear();
    split_words(chunk, words);
    for (const auto& w : words) fn(std::string_view(w), false);
  }
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : z) v /= s;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void ToyModel::index_vocab() {
  index_.clear();
  for (std::size_t i = 1; i < vocab.size(); ++i) index_.emplace(vocab[i], i);
}

void ToyModel::validate() const {
  if (vocab.empty()) throw FormatError("toy model: empty vocabulary (index 0 must be the OOV entry)");
  if (embed_weights.rows() != vocab.size()) throw FormatError("toy model: embed rows != vocab size");
  if (hidden_weights.rows() != d()) throw FormatError("toy model: hidden rows != embedding width");
  if (hidden_bias.size() != p()) throw FormatError("toy model: hidden bias length != p");
  if (head_weights.rows() != p()) throw FormatError("toy model: head rows != p");
  if (head_bias.size() != num_classes()) throw FormatError("toy model: head bias length != classes");
  if (class_names.size() != num_classes()) throw FormatError("toy model: class name count != classes");
  if (p() < 1 || num_classes() < 2) throw FormatError("toy model: need p >= 1 and at least 2 classes");
}

std::vector<std::size_t> ToyModel::tokenize(std::string_view text) const {
  std::vector<std::size_t> ids;
  for_each_token(text, mask_token, [&](std::string_view w, bool is_mask) {
    if (is_mask) {
      ids.push_back(kMask);
      return;
    }
    auto it = index_.find(std::string(w));
    ids.push_back(it == index_.end() ? kOov : it->second);
  });
  return ids;
}

std::vector<double> ToyModel::pooled(std::string_view text) const {
  const auto ids = tokenize(text);
  std::vector<double> e(d(), 0.0);
  if (ids.empty()) return e;
  for (std::size_t id : ids) {
    if (id == kMask) continue;
    auto row = embed_weights.row(id);
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& v : e) v *= inv;
  return e;
}

std::vector<double> ToyModel::activation(std::string_view text) const {
  const auto e = pooled(text);
  std::vector<double> h(hidden_bias);
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (e[k] == 0.0) continue;
    auto wk = hidden_weights.row(k);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += e[k] * wk[j];
  }
  for (double& v : h) v = relu(v);
  return h;
}

std::vector<double> ToyModel::logits(std::span<const double> a) const {
  std::vector<double> z(head_bias);
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0.0) continue;
    auto wj = head_weights.row(j);
    for (std::size_t c = 0; c < z.size(); ++c) z[c] += a[j] * wj[c];
  }
  return z;
}

std::string ToyModel::fingerprint() const {
  std::uint64_t h = fnv1a64(mask_token);
  for (const auto& w : vocab) h = fnv1a64(w, h ^ 0x1f);
  auto mix = [&](std::span<const double> xs) {
    for (double x : xs) {
      const auto f = static_cast<float>(x);
      h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&f), sizeof f), h);
    }
  };
  mix(embed_weights.data());
  mix(hidden_weights.data());
  mix(hidden_bias);
  mix(head_weights.data());
  mix(head_bias);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double accuracy(const ToyModel& model, const std::vector<LabeledText>& corpus) {
  if (corpus.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : corpus) {
    const auto z = model.logits(model.activation(ex.text));
    if (argmax(z) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

ToyTrainResult train_toy(const std::vector<LabeledText>& corpus, const ToyTrainConfig& cfg) {
  if (corpus.empty()) throw ConfigError("train_toy: empty corpus");
  if (cfg.d < 1 || cfg.p < 1) throw ConfigError("train_toy: d and p must be >= 1");
  if (cfg.epochs < 0 || !(cfg.lr > 0.0)) throw ConfigError("train_toy: epochs must be >= 0 and lr > 0");
  std::size_t num_classes = 0;
  std::set<std::size_t> seen;
  for (const auto& ex : corpus) {
    seen.insert(ex.label);
    num_classes = std::max(num_classes, ex.label + 1);
  }
  if (seen.size() < 2) throw ConfigError("train_toy: corpus must contain at least 2 distinct classes");
  num_classes = std::max(num_classes, cfg.class_names.size());

  ToyModel m;
  m.seed = cfg.seed;
  m.trained_on = cfg.corpus_id;
  m.class_names = cfg.class_names;
  for (std::size_t c = m.class_names.size(); c < num_classes; ++c) m.class_names.push_back(std::to_string(c));

  std::set<std::string> words;
  for (const auto& ex : corpus)
    for_each_token(ex.text, "", [&](std::string_view w, bool) { words.emplace(w); });
  m.vocab.push_back("<oov>");
  m.vocab.insert(m.vocab.end(), words.begin(), words.end());
  m.index_vocab();

  Rng rng(cfg.seed);
  const std::size_t V = m.vocab.size(), d = cfg.d, p = cfg.p, C = num_classes;
  m.embed_weights = DenseMatrix(V, d);
  for (double& v : m.embed_weights.data()) v = rng.uniform(-0.5, 0.5);
  // OOV stays a zero vector, like the mask token, so occluding an unknown
  // word is a no-op.
  for (double& v : m.embed_weights.row(ToyModel::kOov)) v = 0.0;
  m.hidden_weights = DenseMatrix(d, p);
  const double hs = std::sqrt(6.0 / static_cast<double>(d + p));
  for (double& v : m.hidden_weights.data()) v = rng.uniform(-hs, hs);
  m.hidden_bias.assign(p, 0.0);
  m.head_weights = DenseMatrix(p, C);
  for (double& v : m.head_weights.data()) v = rng.uniform(-0.01, 0.01);
  m.head_bias.assign(C, 0.0);

  std::vector<std::vector<std::size_t>> token_ids(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) token_ids[i] = m.tokenize(corpus[i].text);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> e(d), z(p), h(p), probs(C), dh(p), dz(p), de(d);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto& ids = token_ids[idx];
      std::fill(e.begin(), e.end(), 0.0);
      if (!ids.empty()) {
        for (std::size_t id : ids) {
          auto row = m.embed_weights.row(id);
          for (std::size_t k = 0; k < d; ++k) e[k] += row[k];
        }
        for (double& v : e) v /= static_cast<double>(ids.size());
      }
      for (std::size_t j = 0; j < p; ++j) {
        double s = m.hidden_bias[j];
        for (std::size_t k = 0; k < d; ++k) s += e[k] * m.hidden_weights(k, j);
        z[j] = s;
        h[j] = relu(s);
      }
      for (std::size_t c = 0; c < C; ++c) {
        double s = m.head_bias[c];
        for (std::size_t j = 0; j < p; ++j) s += h[j] * m.head_weights(j, c);
        probs[c] = s;
      }
      softmax_inplace(probs);
      probs[corpus[idx].label] -= 1.0;  // dL/dlogits

      for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += m.head_weights(j, c) * probs[c];
        dh[j] = s;
        dz[j] = z[j] > 0.0 ? s : 0.0;
      }
      for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += m.hidden_weights(k, j) * dz[j];
        de[k] = s;
      }
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t c = 0; c < C; ++c) m.head_weights(j, c) -= cfg.lr * h[j] * probs[c];
      for (std::size_t c = 0; c < C; ++c) m.head_bias[c] -= cfg.lr * probs[c];
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < p; ++j) m.hidden_weights(k, j) -= cfg.lr * e[k] * dz[j];
      for (std::size_t j = 0; j < p; ++j) m.hidden_bias[j] -= cfg.lr * dz[j];
      if (!ids.empty()) {
        const double scale = cfg.lr / static_cast<double>(ids.size());
        for (std::size_t id : ids) {
          if (id == ToyModel::kOov) continue;
          auto row = m.embed_weights.row(id);
          for (std::size_t k = 0; k < d; ++k) row[k] -= scale * de[k];
        }
      }
    }
  }
  ToyTrainResult result{std::move(m), 0.0};
  result.train_accuracy = accuracy(result.model, corpus);
  return result;
}

void save_toy_model(const ToyModel& model, const std::filesystem::path& dir) {
  model.validate();
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["format"] = "conex-toy-model";
  j["vocab"] = model.vocab;
  j["class_names"] = model.class_names;
  j["mask_token"] = model.mask_token;
  j["trained_on"] = model.trained_on;
  j["seed"] = model.seed;
  std::ofstream(dir / "model.json") << j.dump(2) << '\n';
  write_matrix(model.embed_weights, dir / "embed.mat", "embed");
  write_matrix(model.hidden_weights, dir / "hidden.mat", "hidden");
  write_matrix(DenseMatrix(1, model.hidden_bias.size(), model.hidden_bias), dir / "hidden_bias.mat", "hidden_bias");
  write_matrix(model.head_weights, dir / "head.mat", "head");
  write_matrix(DenseMatrix(1, model.head_bias.size(), model.head_bias), dir / "head_bias.mat", "head_bias");
}

ToyModel load_toy_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw DataError("toy model not found: " + (dir / "model.json").string());
  ToyModel m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.vocab = j.at("vocab").get<std::vector<std::string>>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.mask_token = j.at("mask_token").get<std::string>();
    m.trained_on = j.value("trained_on", "");
    m.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
  m.embed_weights = read_matrix(dir / "embed.mat");
  m.hidden_weights = read_matrix(dir / "hidden.mat");
  const auto hb = read_matrix(dir / "hidden_bias.mat");
  m.hidden_bias.assign(hb.data().begin(), hb.data().end());
  m.head_weights = read_matrix(dir / "head.mat");
  const auto cb = read_matrix(dir / "head_bias.mat");
  m.head_bias.assign(cb.data().begin(), cb.data().end());
  m.validate();
  m.index_vocab();
  return m;
}

ToyProvider::ToyProvider(ToyModel model) : model_(std::move(model)) {
  model_.validate();
  model_.index_vocab();
  id_ = "toy-" + model_.fingerprint();
}

ProviderDescriptor ToyProvider::describe() {
  return {model_.p(), model_.class_names, true, model_.mask_token};
}

DenseMatrix ToyProvider::embed(const std::vector<std::string>& texts) {
  DenseMatrix out(texts.size(), model_.p());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto h = model_.activation(texts[i]);
    std::copy(h.begin(), h.end(), out.row(i).begin());
  }
  return out;
}

DenseMatrix ToyProvider::classify(const DenseMatrix& activations) {
  require(activations.cols() == model_.p(), "classify: activations have " + std::to_string(activations.cols()) +
                                                " columns, provider expects p = " + std::to_string(model_.p()));
  DenseMatrix out(activations.rows(), model_.num_classes());
  for (std::size_t i = 0; i < activations.rows(); ++i) {
    const auto z = model_.logits(activations.row(i));
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace conex
