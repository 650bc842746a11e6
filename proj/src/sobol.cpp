#include "conex/sobol.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "conex/errors.hpp"
#include "conex/kernels.hpp"
#include "conex/rng.hpp"
#include "conex/sobol_sequence.hpp"

namespace conex {

std::string to_string(Sampler s) { return s == Sampler::qmc_sobol_sequence ? "qmc" : "random"; }
std::string to_string(MaskLaw m) { return m == MaskLaw::continuous_uniform ? "uniform" : "bernoulli"; }

Sampler parse_sampler(const std::string& s) {
  if (s == "qmc" || s == "qmc_sobol_sequence") return Sampler::qmc_sobol_sequence;
  if (s == "random" || s == "pseudo_random") return Sampler::pseudo_random;
  throw ConfigError("unknown sampler '" + s + "' (expected qmc|random)");
}

MaskLaw parse_mask_law(const std::string& s) {
  if (s == "uniform" || s == "continuous_uniform") return MaskLaw::continuous_uniform;
  if (s == "bernoulli") return MaskLaw::bernoulli;
  throw ConfigError("unknown mask law '" + s + "' (expected uniform|bernoulli)");
}

DenseMatrix MaskDesign::pick_freeze(std::size_t i) const {
  require(i < r, "pick_freeze: column out of range");
  DenseMatrix out = B;
  for (std::size_t j = 0; j < N; ++j) out(j, i) = A(j, i);
  return out;
}

MaskDesign generate_design(std::size_t N, std::size_t r, Sampler sampler, MaskLaw law, std::uint64_t seed,
                           bool scramble) {
  if (N < 1) throw ConfigError("generate_design: N must be >= 1");
  if (r < 1 || r > SobolSequence::kMaxDims / 2)
    throw ConfigError("generate_design: r = " + std::to_string(r) + " outside the supported range 1..64");
  if (sampler == Sampler::qmc_sobol_sequence && !std::has_single_bit(N))
    throw ConfigError("generate_design: N = " + std::to_string(N) + " must be a power of two for QMC sampling");

  MaskDesign d;
  d.N = N;
  d.r = r;
  d.sampler = sampler;
  d.law = law;
  d.seed = seed;
  d.scrambled = sampler == Sampler::qmc_sobol_sequence && scramble;
  d.A = DenseMatrix(N, r);
  d.B = DenseMatrix(N, r);

  std::vector<double> point(2 * r);
  auto split = [&](std::size_t j) {
    for (std::size_t k = 0; k < r; ++k) {
      d.A(j, k) = point[k];
      d.B(j, k) = point[r + k];
    }
  };
  if (sampler == Sampler::qmc_sobol_sequence) {
    SobolSequence seq(2 * r, d.scrambled ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (!d.scrambled) seq.next(point);
    for (std::size_t j = 0; j < N; ++j) {
      seq.next(point);
      split(j);
    }
  } else {
    Rng rng(seed);
    for (std::size_t j = 0; j < N; ++j) {
      for (double& v : point) v = rng.uniform();
      split(j);
    }
  }
  if (law == MaskLaw::bernoulli) {
    for (double& v : d.A.data()) v = v >= 0.5 ? 1.0 : 0.0;
    for (double& v : d.B.data()) v = v >= 0.5 ? 1.0 : 0.0;
  }
  return d;
}

DenseMatrix perturb(const DenseMatrix& U, std::span<const double> m, double mu) {
  require(m.size() == U.cols(), "perturb: mask length " + std::to_string(m.size()) + " != r = " +
                                    std::to_string(U.cols()));
  for (double v : m) require(v >= 0.0 && v <= 1.0, "perturb: mask entry outside [0,1]");
  DenseMatrix out(U.rows(), U.cols());
  for (std::size_t i = 0; i < U.rows(); ++i)
    for (std::size_t k = 0; k < U.cols(); ++k) out(i, k) = U(i, k) * m[k] + (1.0 - m[k]) * mu;
  return out;
}

std::vector<double> ImportanceReport::totals() const {
  std::vector<double> t;
  for (const auto& c : indices) t.push_back(c.s_total);
  return t;
}

ImportanceReport estimate_total_indices(const MaskDesign& design, const MaskOutputFunction& output,
                                        std::size_t class_id) {
  const std::size_t N = design.N, r = design.r;
  require(N >= 1, "estimate_total_indices: empty design");
  require(design.A.rows() == N && design.A.cols() == r && design.B.rows() == N && design.B.cols() == r,
          "estimate_total_indices: design matrices do not match N x r");
  auto eval = [&](const DenseMatrix& masks) {
    auto y = output(masks);
    require(y.size() == masks.rows(), "estimate_total_indices: output function returned wrong batch size");
    return y;
  };
  const auto yA = eval(design.A);
  const auto yB = eval(design.B);

  double mean = 0.0;
  for (std::size_t j = 0; j < N; ++j) mean += yA[j] + yB[j];
  mean /= static_cast<double>(2 * N);
  double var = 0.0;
  for (std::size_t j = 0; j < N; ++j)
    var += (yA[j] - mean) * (yA[j] - mean) + (yB[j] - mean) * (yB[j] - mean);
  var /= static_cast<double>(2 * N - 1);

  ImportanceReport rep;
  rep.class_id = class_id;
  rep.N_used = N;
  rep.mask_law = design.law;
  rep.sampler = design.sampler;
  rep.output_variance = var;
  rep.degenerate_variance = var < 1e-12;
  rep.indices.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    rep.indices[i].concept_id = i;
    if (rep.degenerate_variance) continue;
    const auto yAB = eval(design.pick_freeze(i));
    double s = 0.0;
    for (std::size_t j = 0; j < N; ++j) s += (yB[j] - yAB[j]) * (yB[j] - yAB[j]);
    const double st = s / (2.0 * static_cast<double>(N)) / var;
    rep.indices[i].s_total_raw = st;
    rep.indices[i].s_total = std::max(0.0, st);
  }
  rep.ranking.resize(r);
  std::iota(rep.ranking.begin(), rep.ranking.end(), std::size_t{0});
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(), [&](std::size_t a, std::size_t b) {
    return rep.indices[a].s_total > rep.indices[b].s_total;
  });
  return rep;
}

ConceptScorer::ConceptScorer(EmbeddingProvider& provider, DenseMatrix U, DenseMatrix W, std::size_t class_id,
                             std::size_t batch_rows)
    : provider_(&provider), U_(std::move(U)), W_(std::move(W)), class_id_(class_id), batch_rows_(batch_rows) {
  require(U_.cols() == W_.cols(), "ConceptScorer: U and W disagree on r");
  require(batch_rows_ >= 1, "ConceptScorer: batch_rows must be >= 1");
  const auto d = provider.describe();
  require(W_.rows() == d.p, "ConceptScorer: W has " + std::to_string(W_.rows()) + " rows, provider p = " +
                                std::to_string(d.p));
  require(class_id_ < d.class_names.size(), "ConceptScorer: class id " + std::to_string(class_id_) +
                                                " out of range for " + std::to_string(d.class_names.size()) +
                                                " classes");
}

double ConceptScorer::score(std::span<const double> mask_row) const {
  const std::size_t n = U_.rows();
  if (n == 0) return 0.0;
  const DenseMatrix activations = kernels::serial::gemm_nt(perturb(U_, mask_row), W_);
  double sum = 0.0;
  for (std::size_t b = 0; b < n; b += batch_rows_) {
    const DenseMatrix logits = provider_->classify(activations.row_slice(b, std::min(n, b + batch_rows_)));
    require(logits.cols() > class_id_, "classify returned too few classes");
    for (std::size_t i = 0; i < logits.rows(); ++i) sum += logits(i, class_id_);
  }
  return sum / static_cast<double>(n);
}

std::vector<double> ConceptScorer::score_batch(const DenseMatrix& masks) const {
  return kernels::parallel::map_rows(masks, [this](std::span<const double> m) { return score(m); });
}

std::vector<double> ConceptScorer::score_batch_serial(const DenseMatrix& masks) const {
  return kernels::serial::map_rows(masks, [this](std::span<const double> m) { return score(m); });
}

MaskOutputFunction ConceptScorer::as_output() const {
  return [this](const DenseMatrix& masks) { return score_batch(masks); };
}

ImportanceReport estimate_total_indices(const ConceptScorer& scorer, const MaskDesign& design,
                                        std::size_t class_id) {
  require(design.r == scorer.r(), "estimate_total_indices: design r = " + std::to_string(design.r) +
                                      " but model has r = " + std::to_string(scorer.r()));
  return estimate_total_indices(design, scorer.as_output(), class_id);
}

void write_importance_json(std::ostream& out, const ImportanceReport& rep) {
  nlohmann::ordered_json j;
  j["class"] = rep.class_id;
  j["N"] = rep.N_used;
  j["mask_law"] = to_string(rep.mask_law);
  j["sampler"] = to_string(rep.sampler);
  j["score"] = "class logit, mean over excerpts";
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : rep.indices) {
    nlohmann::ordered_json e;
    e["concept"] = c.concept_id;
    e["s_total_raw"] = c.s_total_raw;
    e["s_total"] = c.s_total;
    arr.push_back(e);
  }
  j["indices"] = arr;
  j["variance"] = rep.output_variance;
  j["degenerate_variance"] = rep.degenerate_variance;
  j["ranking"] = rep.ranking;
  out << j.dump(2) << '\n';
}

ImportanceReport read_importance_json(std::istream& in) {
  ImportanceReport rep;
  try {
    const auto j = nlohmann::json::parse(in);
    rep.class_id = j.at("class").get<std::size_t>();
    rep.N_used = j.at("N").get<std::size_t>();
    rep.mask_law = parse_mask_law(j.at("mask_law").get<std::string>());
    rep.sampler = parse_sampler(j.value("sampler", std::string("qmc")));
    for (const auto& e : j.at("indices"))
      rep.indices.push_back({e.at("concept").get<std::size_t>(), e.at("s_total_raw").get<double>(),
                             e.at("s_total").get<double>()});
    rep.output_variance = j.at("variance").get<double>();
    rep.degenerate_variance = j.value("degenerate_variance", false);
    rep.ranking = j.at("ranking").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("importance report: ") + e.what());
  }
  return rep;
}

}  // namespace conex
