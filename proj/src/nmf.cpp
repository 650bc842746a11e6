#include "conex/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "conex/errors.hpp"
#include "conex/kernels.hpp"
#include "conex/matrix_file.hpp"
#include "conex/rng.hpp"

namespace conex {

ConceptModel nmf_fit(const DenseMatrix& A, std::size_t r, const NmfConfig& cfg) {
  const std::size_t n = A.rows(), p = A.cols();
  if (!A.all_finite()) throw DataError("nmf_fit: activation matrix has non-finite entries");
  if (!A.all_nonnegative()) throw NonNegativityViolation("nmf_fit: activation matrix has negative entries");
  if (r < 1 || r > std::min(n, p))
    throw ConfigError("nmf_fit: r = " + std::to_string(r) + " must satisfy 1 <= r <= min(n, p) = " +
                      std::to_string(std::min(n, p)));
  if (cfg.max_iter < 0 || !(cfg.tol >= 0.0)) throw ConfigError("nmf_fit: max_iter >= 0 and tol >= 0 required");

  double mean = 0.0;
  for (double v : A.data()) mean += v;
  mean /= static_cast<double>(A.size());
  const double scale = mean > 0.0 ? std::sqrt(mean / static_cast<double>(r)) : 1.0;

  Rng rng(cfg.seed);
  ConceptModel m;
  m.r = r;
  m.seed = cfg.seed;
  m.U = DenseMatrix(n, r);
  m.W = DenseMatrix(p, r);
  for (double& v : m.U.data()) v = scale * rng.uniform_open0();
  for (double& v : m.W.data()) v = scale * rng.uniform_open0();

  double obj = kernels::half_residual_sq(A, m.U, m.W);
  m.objective_trace.push_back(obj);
  for (int it = 0; it < cfg.max_iter && obj > 0.0; ++it) {
    // U ← U ⊙ (A W) / (U WᵀW)
    {
      const DenseMatrix numer = kernels::gemm(A, m.W);
      const DenseMatrix denom = kernels::gemm(m.U, kernels::gemm_tn(m.W, m.W));
      kernels::multiplicative_update(m.U, numer, denom, cfg.eps);
    }
    // W ← W ⊙ (Aᵀ U) / (W UᵀU)
    {
      const DenseMatrix numer = kernels::gemm_tn(A, m.U);
      const DenseMatrix denom = kernels::gemm(m.W, kernels::gemm_tn(m.U, m.U));
      kernels::multiplicative_update(m.W, numer, denom, cfg.eps);
    }
    const double next = kernels::half_residual_sq(A, m.U, m.W);
    m.objective_trace.push_back(next);
    const double rel = (obj - next) / obj;
    obj = next;
    if (rel < cfg.tol) break;
  }

  // Gauge: unit-norm W columns, scale moved into U.
  for (std::size_t k = 0; k < r; ++k) {
    double norm = 0.0;
    for (std::size_t j = 0; j < p; ++j) norm += m.W(j, k) * m.W(j, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t j = 0; j < p; ++j) m.W(j, k) /= norm;
    for (std::size_t i = 0; i < n; ++i) m.U(i, k) *= norm;
  }
  m.presence_threshold = presence_thresholds(m.U);
  return m;
}

DenseMatrix nmf_transform(const DenseMatrix& A_new, const ConceptModel& model, const NnlsOptions& opts) {
  require(A_new.cols() == model.p(), "nmf_transform: activations have " + std::to_string(A_new.cols()) +
                                         " columns, concept base has p = " + std::to_string(model.p()));
  if (!A_new.all_nonnegative()) throw NonNegativityViolation("nmf_transform: activation matrix has negative entries");
  return kernels::nnls_rows(A_new, model.W, opts);
}

std::vector<bool> presence(const ConceptModel& model, std::span<const double> u_row) {
  require(u_row.size() == model.presence_threshold.size(), "presence: coefficient row length != r");
  std::vector<bool> out(u_row.size());
  for (std::size_t k = 0; k < u_row.size(); ++k) out[k] = u_row[k] >= model.presence_threshold[k];
  return out;
}

double quantile_type7(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> presence_thresholds(const DenseMatrix& U, double q) {
  std::vector<double> t(U.cols(), 0.0);
  if (U.rows() == 0) return t;
  for (std::size_t k = 0; k < U.cols(); ++k) t[k] = quantile_type7(U.column(k), q);
  return t;
}

void save_concept_model(const ConceptModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix(model.W, dir / "W.mat", "W");
  write_matrix(model.U, dir / "U.mat", "U");
  nlohmann::ordered_json j;
  j["r"] = model.r;
  j["class_id"] = model.class_id;
  j["seed"] = model.seed;
  j["thresholds"] = model.presence_threshold;
  j["objective_trace"] = model.objective_trace;
  j["solver"] = "multiplicative-updates";
  j["init"] = "uniform(0,1] * sqrt(mean(A)/r)";
  j["gauge"] = "unit-norm W columns";
  j["quantile"] = "type-7, q=0.9";
  std::ofstream(dir / "meta.json") << j.dump(2) << '\n';
}

ConceptModel load_concept_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw DataError("concept model not found in " + dir.string() + " (run extract-concepts first)");
  ConceptModel m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.r = j.at("r").get<std::size_t>();
    m.class_id = j.at("class_id").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.presence_threshold = j.at("thresholds").get<std::vector<double>>();
    m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  m.W = read_matrix(dir / "W.mat");
  m.U = read_matrix(dir / "U.mat");
  if (m.W.cols() != m.r || m.U.cols() != m.r || m.presence_threshold.size() != m.r)
    throw FormatError(dir.string() + ": W/U/thresholds disagree with r = " + std::to_string(m.r));
  return m;
}

}  // namespace conex
