#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "conex/matrix.hpp"
#include "conex/provider.hpp"

namespace conex {

enum class Sampler { qmc_sobol_sequence, pseudo_random };
enum class MaskLaw { continuous_uniform, bernoulli };

std::string to_string(Sampler s);
std::string to_string(MaskLaw m);
Sampler parse_sampler(const std::string& s);   // "qmc" | "random"
MaskLaw parse_mask_law(const std::string& s);  // "uniform" | "bernoulli"

// Pick-freeze pair of N x r mask matrices with entries in [0,1].
struct MaskDesign {
  std::size_t N = 0;
  std::size_t r = 0;
  DenseMatrix A;
  DenseMatrix B;
  Sampler sampler = Sampler::qmc_sobol_sequence;
  MaskLaw law = MaskLaw::continuous_uniform;
  std::uint64_t seed = 0;
  bool scrambled = true;

  // B with column i replaced by column i of A.
  DenseMatrix pick_freeze(std::size_t i) const;
};

// QMC designs take rows of a 2r-dimensional sequence: the first r coordinates
// form A, the last r form B. N must be a power of two for QMC and r <= 64.
// An unscrambled QMC design skips the origin point.
MaskDesign generate_design(std::size_t N, std::size_t r, Sampler sampler, MaskLaw law, std::uint64_t seed,
                           bool scramble = true);

// U ⊙ m + (1 − m) μ, with m broadcast over rows.
DenseMatrix perturb(const DenseMatrix& U, std::span<const double> mask_row, double mu = 0.0);

struct ConceptIndex {
  std::size_t concept_id = 0;
  double s_total_raw = 0.0;
  double s_total = 0.0;  // clipped at 0
};

struct ImportanceReport {
  std::size_t class_id = 0;
  std::vector<ConceptIndex> indices;
  double output_variance = 0.0;
  bool degenerate_variance = false;
  std::size_t N_used = 0;
  MaskLaw mask_law = MaskLaw::continuous_uniform;
  Sampler sampler = Sampler::qmc_sobol_sequence;
  std::vector<std::size_t> ranking;  // concepts by descending s_total, ties to lower id

  std::vector<double> totals() const;
};

// Scalar model output for each mask row of a batch.
using MaskOutputFunction = std::function<std::vector<double>(const DenseMatrix& masks)>;

// Jansen total-index estimator over a pick-freeze design:
//   S_Ti = (1/2N) Σ_j (Y_B[j] − Y_ABi[j])² / V̂(Y),  V̂ over {Y_A, Y_B}.
ImportanceReport estimate_total_indices(const MaskDesign& design, const MaskOutputFunction& output,
                                        std::size_t class_id = 0);

// Y(m) = mean over excerpt rows of the class logit of classify((U ⊙ m) Wᵀ).
class ConceptScorer {
 public:
  ConceptScorer(EmbeddingProvider& provider, DenseMatrix U, DenseMatrix W, std::size_t class_id,
                std::size_t batch_rows = 256);

  double score(std::span<const double> mask_row) const;
  // Rows scored independently (in parallel when OpenMP is enabled).
  std::vector<double> score_batch(const DenseMatrix& masks) const;
  // Serial reference of score_batch.
  std::vector<double> score_batch_serial(const DenseMatrix& masks) const;

  std::size_t r() const { return U_.cols(); }
  MaskOutputFunction as_output() const;

 private:
  EmbeddingProvider* provider_;
  DenseMatrix U_;
  DenseMatrix W_;
  std::size_t class_id_;
  std::size_t batch_rows_;
};

ImportanceReport estimate_total_indices(const ConceptScorer& scorer, const MaskDesign& design,
                                        std::size_t class_id);

void write_importance_json(std::ostream& out, const ImportanceReport& report);
ImportanceReport read_importance_json(std::istream& in);

}  // namespace conex
