#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conex/excerpts.hpp"
#include "conex/nmf.hpp"
#include "conex/provider.hpp"

namespace conex {

// Single-concept NNLS: argmin_{u >= 0} ½‖a − u W_k‖² = max(0, ⟨a, W_k⟩ / ‖W_k‖²).
double concept_coefficient(std::span<const double> activation, const DenseMatrix& W, std::size_t k);

// Same, embedding the excerpt text first.
double concept_coefficient(const Excerpt& excerpt, const ConceptModel& model, std::size_t k,
                           EmbeddingProvider& provider);

// φ(k, i, j): drop in the concept-k coefficient of excerpt i when element j
// is replaced by the mask token and the text re-embedded.
struct ElementAttribution {
  std::size_t excerpt_id = 0;
  std::size_t element_index = 0;
  std::string element_text;
  Span span;  // relative to the excerpt text
  std::size_t concept_id = 0;
  double phi = 0.0;
  Granularity granularity = Granularity::word;
};

struct ExcerptAttribution {
  std::vector<Excerpt> elements;          // τ₂ elements of the excerpt
  std::vector<std::size_t> present;       // concepts flagged present
  std::vector<double> coefficients;       // full NNLS coefficients of the excerpt
  std::vector<ElementAttribution> attributions;  // element-major, then concept
};

// One base embed call plus one embed call per element; element calls run
// concurrently when OpenMP is enabled. Only concepts present in the excerpt
// are attributed.
ExcerptAttribution attribute(const Excerpt& excerpt, std::size_t excerpt_id, const ConceptModel& model,
                             EmbeddingProvider& provider, const GranularitySpec& tau2);

struct ElementHighlight {
  std::size_t element_index = 0;
  std::string text;
  Span span;
  std::optional<std::size_t> concept_id;  // argmax_k φ; empty when no concept is present
  double phi = 0.0;
  double intensity = 0.0;  // max(φ_win, 0) / max positive φ_win in the excerpt
};

struct AttributionBundle {
  std::size_t excerpt_id = 0;
  Excerpt excerpt;
  std::vector<std::size_t> present_concepts;
  std::vector<ElementHighlight> elements;
  bool unattributed = true;
};

// Winning concept per element (ties to the lower concept id) and max-normalized
// intensities. Unattributed when no element has a positive winning φ.
AttributionBundle bundle(const Excerpt& excerpt, std::size_t excerpt_id, const ExcerptAttribution& attribution);

void write_bundles_json(std::ostream& out, const std::vector<AttributionBundle>& bundles);
std::vector<AttributionBundle> read_bundles_json(std::istream& in);

}  // namespace conex
