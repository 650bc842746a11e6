#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "conex/matrix.hpp"
#include "conex/nnls.hpp"

namespace conex {

struct NmfConfig {
  int max_iter = 500;
  double tol = 1e-5;        // relative objective decrease that stops the iteration
  std::uint64_t seed = 0;
  double eps = 1e-12;       // added to multiplicative-update denominators
};

// A ≈ U Wᵀ with U (n x r) and W (p x r) non-negative. W columns are the
// concepts; after fit every non-zero W column has unit L2 norm and U carries
// the scale.
struct ConceptModel {
  DenseMatrix W;
  DenseMatrix U;
  std::size_t r = 0;
  std::size_t class_id = 0;
  std::uint64_t seed = 0;
  std::vector<double> objective_trace;     // ½‖A − UWᵀ‖²_F, initial value first
  std::vector<double> presence_threshold;  // 0.9 quantile of each U column

  std::size_t p() const { return W.rows(); }
};

ConceptModel nmf_fit(const DenseMatrix& A, std::size_t r, const NmfConfig& config = {});

// Per-row NNLS of A_new against the fixed concept base.
DenseMatrix nmf_transform(const DenseMatrix& A_new, const ConceptModel& model, const NnlsOptions& opts = {});

// flag k set iff u_row[k] >= presence_threshold[k].
std::vector<bool> presence(const ConceptModel& model, std::span<const double> u_row);

// Linear-interpolation quantile between order statistics (type 7).
double quantile_type7(std::vector<double> values, double q);

std::vector<double> presence_thresholds(const DenseMatrix& U, double q = 0.9);

// Directory layout: W.mat, U.mat, meta.json.
void save_concept_model(const ConceptModel& model, const std::filesystem::path& dir);
ConceptModel load_concept_model(const std::filesystem::path& dir);

}  // namespace conex
